// Acceptance suite: prints one PASS/FAIL line per criterion, exits nonzero on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bu/checkpoint.hpp"
#include "bu/eval.hpp"
#include "bu/experiment.hpp"
#include "bu/io.hpp"
#include "support.hpp"

using namespace bu;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    while (o.detail.size() >= 2 && o.detail.compare(o.detail.size() - 2, 2, "; ") == 0) o.detail.resize(o.detail.size() - 2);
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s (%s; %.2f s)\n", id, title, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

const std::vector<Method> kAll{Method::retrain,         Method::finetune,
                               Method::negative_gradient, Method::random_labels,
                               Method::boundary_shrink, Method::boundary_expanding};

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

const test::DeskRun& desk(std::uint64_t seed) {
    static std::map<std::uint64_t, test::DeskRun> cache;
    auto it = cache.find(seed);
    if (it == cache.end()) it = cache.emplace(seed, test::desk_run(seed, kAll)).first;
    return it->second;
}

std::uint64_t default_seed() {
    return ExperimentConfig::from_file(test::default_config_path()).seed;
}

Outcome numerical_core() {
    Rng rng(20240101);
    const auto t0 = Clock::now();
    double worst_p = 0, worst_x = 0, worst_sum = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t in = 1 + rng.uniform_index(4), h1 = 2 + rng.uniform_index(6),
                          h2 = 2 + rng.uniform_index(6), k = 2 + rng.uniform_index(5);
        const Classifier m = test::random_model({in, h1, h2, k}, rng);
        const auto batch = test::random_batch(1 + rng.uniform_index(4), in, k, rng);
        worst_p = std::max(worst_p, test::fd_check_params(m, batch).max_rel_err);
        for (const auto& ex : batch) {
            worst_x = std::max(worst_x, test::fd_check_input(m, ex).max_rel_err);
            const Tensor p = softmax(forward(m, ex.features));
            double s = 0;
            for (double v : p.values()) s += v;
            worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        }
    }
    const double secs = seconds_since(t0);
    return {worst_p < 1e-4 && worst_x < 1e-4 && worst_sum <= 1e-9 && secs < 10.0,
            fmt("max rel err params %.2e, input %.2e; softmax |sum-1| %.1e; %.2f s", worst_p, worst_x,
                worst_sum, secs)};
}

Outcome surgery_identity() {
    const auto t0 = Clock::now();
    const std::vector<std::size_t> widths{2, 64, 64, 10};
    const Classifier w0 = Classifier::initialize(widths, 77);
    const Classifier round = prune_output(expand_output(w0), 10);
    const auto ds = make_blobs(10, 20, 2, 0.05, 3);
    const auto split = forget_split(ds, 0);
    OptimizerConfig zero;
    zero.epochs = 0;
    const Classifier be = boundary_expand(w0, split, zero).model;
    bool logits_equal = true;
    for (const auto& ex : ds.train) {
        logits_equal = logits_equal && forward(round, ex.features) == forward(w0, ex.features) &&
                       forward(be, ex.features) == forward(w0, ex.features);
    }
    const double secs = seconds_since(t0);
    const bool ok = round == w0 && be == w0 && logits_equal && secs < 1.0;
    return {ok, std::string("parameters and logits bit-identical: ") + (ok ? "yes" : "no") +
                    fmt("; %.3f s", secs)};
}

Outcome utility_trend() {
    const auto t0 = Clock::now();
    const auto root = test::scratch_dir("acceptance_pipeline");
    run_experiment(ExperimentConfig::from_file(test::default_config_path(),
                                               {{"output.dir", (root / "run").string()}}));
    const double pipeline = seconds_since(t0);

    const auto& r = desk(default_seed());
    const auto& s = r.split;
    const double o_dr = accuracy(r.original.model, s.remain_train);
    const double o_df = accuracy(r.original.model, s.forget_train);
    const auto& bs = r.result(Method::boundary_shrink).model;
    const auto& be = r.result(Method::boundary_expanding).model;
    const double bs_df = accuracy(bs, s.forget_train), bs_dr = accuracy(bs, s.remain_train);
    const double be_df = accuracy(be, s.forget_train), be_dr = accuracy(be, s.remain_train);
    const double rt_df = accuracy(r.result(Method::retrain).model, s.forget_train);
    const bool ok = o_dr >= 0.99 && o_df >= 0.99 && bs_df <= 0.10 && bs_dr >= o_dr - 0.02 &&
                    be_df <= 0.15 && be_dr >= o_dr - 0.03 && rt_df <= 0.05 && pipeline < 300.0;
    return {ok, fmt("original Dr %.4f Df %.4f; shrink Df %.4f Dr %.4f", o_dr, o_df, bs_df, bs_dr) +
                    fmt("; expand Df %.4f Dr %.4f; retrain Df %.4f; pipeline %.1f s", be_df, be_dr,
                        rt_df, pipeline)};
}

Outcome privacy_trend() {
    int holds = 0;
    std::string detail;
    for (std::uint64_t seed : kSeeds) {
        const auto& r = desk(seed);
        const double o = mia_asr(r.original.model, r.split);
        const double rt = mia_asr(r.result(Method::retrain).model, r.split);
        const double bs = mia_asr(r.result(Method::boundary_shrink).model, r.split);
        const double ft = mia_asr(r.result(Method::finetune).model, r.split);
        const bool ok = o > rt && std::abs(bs - rt) < std::abs(o - rt) && ft > bs;
        holds += ok;
        detail += fmt("seed %.0f: orig %.3f retrain %.3f shrink %.3f", static_cast<double>(seed), o, rt, bs) +
                  fmt(" finetune %.3f", ft) + (ok ? "; " : " [miss]; ");
    }
    return {holds >= 4, std::to_string(holds) + "/5 seeds; " + detail};
}

Outcome streisand_check() {
    int increase = 0, rl_larger = 0;
    std::string detail;
    for (std::uint64_t seed : kSeeds) {
        const auto& r = desk(seed);
        const auto& df = r.split.forget_train;
        const double o = median(output_entropy(r.original.model, df));
        const double bs = median(output_entropy(r.result(Method::boundary_shrink).model, df));
        const double be = median(output_entropy(r.result(Method::boundary_expanding).model, df));
        const double rl = median(output_entropy(r.result(Method::random_labels).model, df));
        increase += bs > o && be > o;
        rl_larger += (rl - o) > (bs - o);
        detail += fmt("seed %.0f: orig %.3g shrink %.3g expand %.3g", static_cast<double>(seed), o, bs, be) +
                  fmt(" random_labels %.3g; ", rl);
    }
    // The rise is required on the default experiment; the 4-of-5 tolerance covers the comparison.
    const auto& d = desk(default_seed());
    const auto& df = d.split.forget_train;
    const double o = median(output_entropy(d.original.model, df));
    const bool rises =
        median(output_entropy(d.result(Method::boundary_shrink).model, df)) > o &&
        median(output_entropy(d.result(Method::boundary_expanding).model, df)) > o;
    return {rises && rl_larger >= 4,
            std::string("rise on default seed: ") + (rises ? "yes" : "no") + " (" +
                std::to_string(increase) + "/5 seeds), random labels jump larger on " +
                std::to_string(rl_larger) + "/5; " + detail};
}

double best_time(const std::function<double()>& run, int reps) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) best = std::min(best, run());
    return best;
}

Outcome timing_trend() {
    const auto& r = desk(default_seed());
    const auto& cfg = r.cfg;
    auto timed = [&](Method m) {
        return [&, m] {
            SplitAccess access(r.split);
            return run_method(cfg, m, r.original.model, access).wall_clock_seconds;
        };
    };
    const double rt = best_time(timed(Method::retrain), 3);
    const double bs = best_time(timed(Method::boundary_shrink), 15);
    const double be = best_time(timed(Method::boundary_expanding), 15);
    const bool ok = rt / bs >= 3.0 && rt / be >= 3.0 && be <= bs;
    return {ok, fmt("retrain %.4f s, shrink %.4f s (%.1fx), expand %.4f s", rt, bs, rt / bs, be) +
                    fmt(" (%.1fx)", rt / be)};
}

Outcome decision_space() {
    const auto& r = desk(default_seed());
    const std::size_t t = r.cfg.forget_class;
    const Bounds b = default_bounds(r.dataset.train, r.cfg.raster_inflate);
    const double before = decision_region_area(r.original.model, b, r.cfg.raster_resolution)[t];
    const double after =
        decision_region_area(r.result(Method::boundary_shrink).model, b, r.cfg.raster_resolution)[t];
    const auto relabeled =
        relabel_nearest_incorrect(r.original.model, r.split.forget_train, t, r.cfg.shrink.epsilon);
    const auto off = std::count_if(relabeled.begin(), relabeled.end(),
                                   [&](const RelabeledExample& e) { return e.new_label != t; });
    const double frac = static_cast<double>(off) / static_cast<double>(relabeled.size());
    return {after <= 0.5 * before && frac == 1.0,
            fmt("class-%.0f area %.4f -> %.4f (ratio %.3f)", static_cast<double>(t), before, after,
                after / before) +
                fmt("; y_nbi != t for %.1f%% of D_f", 100.0 * frac)};
}

Outcome determinism_and_persistence() {
    const auto root = test::scratch_dir("acceptance_determinism");
    for (const char* name : {"a", "b"}) {
        run_experiment(ExperimentConfig::from_file(test::default_config_path(),
                                                   {{"output.dir", (root / name).string()}}));
    }
    const bool same_results =
        read_file_bytes(root / "a" / "results.json") == read_file_bytes(root / "b" / "results.json");

    bool roundtrip = true;
    for (Method m : report_order()) {
        const auto path = checkpoint_path(root / "a", m);
        const auto ck = load_checkpoint(path);
        const auto again = encode_checkpoint(ck.model, ck.provenance);
        roundtrip = roundtrip && again == read_file_bytes(path);
    }

    const auto& r = desk(default_seed());
    bool discipline = true;
    for (Method m : kAll) {
        SplitAccess access(r.split);
        run_method(r.cfg, m, r.original.model, access);
        const bool uses_remain = m == Method::retrain || m == Method::finetune;
        discipline = discipline && (uses_remain ? access.forget_reads() == 0 && access.remain_reads() > 0
                                                : access.remain_reads() == 0 && access.forget_reads() > 0);
    }
    return {same_results && roundtrip && discipline,
            std::string("results.json identical: ") + (same_results ? "yes" : "no") +
                ", checkpoint round-trip byte-identical: " + (roundtrip ? "yes" : "no") +
                ", split access discipline: " + (discipline ? "yes" : "no")};
}

}  // namespace

int main() {
    report(1, "numerical core", numerical_core);
    report(2, "surgery identity", surgery_identity);
    report(3, "utility trend", utility_trend);
    report(4, "privacy trend", privacy_trend);
    report(5, "entropy (Streisand) check", streisand_check);
    report(6, "timing trend", timing_trend);
    report(7, "decision-space trend", decision_space);
    report(8, "determinism and persistence", determinism_and_persistence);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
