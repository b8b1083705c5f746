#include "bu/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bu/error.hpp"
#include "bu/io.hpp"

namespace bu {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string real(double v, const char* fmt = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

template <class F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

ordered_json report_json(Method method, const EvalReport& r) {
    ordered_json j;
    j["method"] = std::string(to_string(method));
    j["acc_Dr"] = r.acc_remain_train;
    j["acc_Df"] = r.acc_forget_train;
    j["acc_Drt"] = r.acc_remain_test;
    j["acc_Dft"] = r.acc_forget_test;
    j["asr"] = r.mia.asr;
    j["asr_threshold"] = r.mia.threshold;
    j["asr_attack_balanced_accuracy"] = r.mia.attack_balanced_accuracy;
    j["asr_degenerate"] = r.mia.degenerate;
    ordered_json med;
    for (SplitName s : {SplitName::remain_train, SplitName::forget_train, SplitName::remain_test,
                        SplitName::forget_test}) {
        med[std::string(to_string(s))] = median(r.entropy_of(s));
    }
    j["entropy_median"] = med;
    j["region_area"] = r.region_area;
    return j;
}

std::string pgm_text(const DecisionRaster& raster) {
    std::ostringstream out;
    out << "P2\n" << raster.resolution << ' ' << raster.resolution << '\n'
        << (raster.num_classes - 1) << '\n';
    for (std::size_t r = 0; r < raster.resolution; ++r) {
        for (std::size_t c = 0; c < raster.resolution; ++c) {
            out << (c ? " " : "") << raster.cells[r * raster.resolution + c];
        }
        out << '\n';
    }
    return out.str();
}

std::string raster_sidecar(const DecisionRaster& raster, Method method) {
    ordered_json j;
    j["method"] = std::string(to_string(method));
    j["resolution"] = raster.resolution;
    j["num_classes"] = raster.num_classes;
    j["bounds"] = {{"x_min", raster.bounds.x_min},
                   {"x_max", raster.bounds.x_max},
                   {"y_min", raster.bounds.y_min},
                   {"y_max", raster.bounds.y_max}};
    j["row_order"] = "top_to_bottom_y_descending";
    j["cell_value"] = "argmax class index at the cell center";
    j["area_fraction"] = raster.area_fractions();
    return j.dump(2) + "\n";
}

// Replace `out` with `staged` only if `out` is absent, empty, or a previous run.
void publish(const fs::path& staged, const fs::path& out) {
    if (fs::exists(out)) {
        const bool empty = fs::is_directory(out) && fs::is_empty(out);
        const bool previous_run = fs::exists(out / "config.cfg") || fs::exists(out / "results.json");
        if (!empty && !previous_run) {
            throw std::runtime_error("refusing to replace non-run directory " + out.string());
        }
        fs::remove_all(out);
    }
    fs::rename(staged, out);
}

}  // namespace

std::string eval_report_json(Method method, const EvalReport& report) {
    return report_json(method, report).dump(2);
}

LabeledDataset build_dataset(const ExperimentConfig& cfg) {
    const std::uint64_t seed = stage_seed(cfg, "data");
    LabeledDataset ds;
    if (cfg.data.source == DatasetSpec::Source::blobs) {
        ds = make_blobs(cfg.data.num_classes, cfg.data.per_class, cfg.data.feature_dim,
                        cfg.data.spread, seed);
    } else {
        ds = load_csv(cfg.data.csv_path, cfg.data.num_classes, cfg.data.feature_dim,
                      {cfg.data.csv_header, seed});
    }
    ds.validate();
    return ds;
}

UnlearnResult train_original(const ExperimentConfig& cfg, const LabeledDataset& dataset) {
    const auto start = std::chrono::steady_clock::now();
    const auto widths = cfg.widths();
    const Classifier init = Classifier::initialize(widths, stage_seed(cfg, "init"));
    TrainResult trained = fit(init, dataset.train, method_optimizer(cfg, Method::original));
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(trained.model), Method::original, seconds, std::move(trained.epoch_loss)};
}

UnlearnResult run_method(const ExperimentConfig& cfg, Method method, const Classifier& original,
                         SplitAccess& split) {
    const OptimizerConfig opt = method_optimizer(cfg, method);
    switch (method) {
        case Method::original:
            throw InvalidInput("'original' is not an unlearning method");
        case Method::retrain: {
            const auto widths = cfg.widths();
            return retrain(split, widths, opt, stage_seed(cfg, "retrain.init"));
        }
        case Method::finetune: return finetune_baseline(original, split, opt);
        case Method::negative_gradient: return negative_gradient_baseline(original, split, opt);
        case Method::random_labels:
            return random_labels_baseline(original, split, opt,
                                          stage_seed(cfg, "random_labels.relabel"));
        case Method::boundary_shrink: {
            ShrinkConfig sc = cfg.shrink;
            sc.finetune = opt;
            return boundary_shrink(original, split, sc);
        }
        case Method::boundary_expanding: return boundary_expand(original, split, opt);
    }
    throw InvalidInput("unknown method");
}

Provenance provenance_for(const ExperimentConfig& cfg, const UnlearnResult& result) {
    return {std::string(to_string(result.method)), cfg.seed, cfg.digest(),
            result.wall_clock_seconds, result.per_epoch_loss};
}

fs::path checkpoint_path(const fs::path& run_dir, Method method) {
    return run_dir / "checkpoints" / (std::string(to_string(method)) + ".buln");
}

std::vector<Method> report_order() {
    return {Method::original,      Method::retrain,         Method::finetune,
            Method::negative_gradient, Method::random_labels, Method::boundary_shrink,
            Method::boundary_expanding};
}

void emit_report(const fs::path& run_dir) {
    const ExperimentConfig cfg =
        ExperimentConfig::from_file(run_dir / "config.cfg", {{"output.dir", run_dir.string()}});
    const LabeledDataset ds = build_dataset(cfg);
    const ForgetSplit split = forget_split(ds, cfg.forget_class);

    std::vector<UnlearnResult> results;
    std::optional<UnlearnResult> retrain_ref;
    for (Method m : report_order()) {
        const fs::path path = checkpoint_path(run_dir, m);
        if (!fs::exists(path)) {
            if (m == Method::original || m == Method::retrain) {
                throw std::runtime_error("missing checkpoint " + path.string());
            }
            continue;
        }
        Checkpoint ck = load_checkpoint(path);
        if (ck.provenance.config_digest != cfg.digest()) {
            throw std::runtime_error(path.string() + " was produced by a different config");
        }
        UnlearnResult r{std::move(ck.model), m, ck.provenance.wall_clock_seconds,
                        std::move(ck.provenance.per_epoch_loss)};
        if (m == Method::retrain) {
            retrain_ref = std::move(r);
        } else {
            results.push_back(std::move(r));
        }
    }

    EvalOptions options;
    options.mia = cfg.mia;
    options.raster_resolution = cfg.raster_resolution;
    const bool two_d = cfg.data.feature_dim == 2;
    if (two_d) options.raster_bounds = default_bounds(ds.train, cfg.raster_inflate);
    const auto rows = compare_methods(results, *retrain_ref, split, options);

    // compare_methods puts the reference first; restore table1.csv row order.
    std::map<Method, const MethodComparison*> by_method;
    for (const auto& row : rows) by_method[row.method] = &row;
    std::vector<const MethodComparison*> ordered;
    for (Method m : report_order()) {
        if (by_method.count(m)) ordered.push_back(by_method[m]);
    }

    ordered_json results_json;
    results_json["schema"] = "boundary-unlearning/results/v1";
    results_json["config_digest"] = cfg.digest();
    results_json["seed"] = cfg.seed;
    results_json["num_classes"] = cfg.data.num_classes;
    results_json["forget_class"] = cfg.forget_class;
    results_json["mia"] = "entropy-threshold MIA";
    results_json["methods"] = ordered_json::array();
    std::string table1 = "method,acc_Dr,acc_Df,acc_Drt,acc_Dft\n";
    std::string asr = "method,asr,threshold,attack_balanced_accuracy,degenerate\n";
    std::string entropy = "method,split,entropy\n";
    std::string timing = "method,wall_clock_seconds,speedup_vs_retrain\n";
    for (const MethodComparison* row : ordered) {
        const std::string name(to_string(row->method));
        const EvalReport& r = row->report;
        results_json["methods"].push_back(report_json(row->method, row->report));
        table1 += name + "," + real(100.0 * r.acc_remain_train, "%.2f") + "," +
                  real(100.0 * r.acc_forget_train, "%.2f") + "," +
                  real(100.0 * r.acc_remain_test, "%.2f") + "," +
                  real(100.0 * r.acc_forget_test, "%.2f") + "\n";
        asr += name + "," + real(r.mia.asr) + "," + real(r.mia.threshold) + "," +
               real(r.mia.attack_balanced_accuracy) + "," + (r.mia.degenerate ? "true" : "false") +
               "\n";
        for (SplitName s : {SplitName::remain_train, SplitName::forget_train,
                            SplitName::remain_test, SplitName::forget_test}) {
            for (double h : r.entropy_of(s)) {
                entropy += name + "," + std::string(to_string(s)) + "," + real(h) + "\n";
            }
        }
        timing += name + "," + real(row->wall_clock_seconds) + "," + real(row->speedup) + "\n";
    }
    write_file_atomic(run_dir / "results.json", results_json.dump(2) + "\n");
    write_file_atomic(run_dir / "table1.csv", table1);
    write_file_atomic(run_dir / "asr.csv", asr);
    write_file_atomic(run_dir / "entropy.csv", entropy);
    write_file_atomic(run_dir / "timing.csv", timing);

    if (two_d) {
        const fs::path raster_dir = run_dir / "rasters";
        for (const auto& r : results) {
            const DecisionRaster raster =
                decision_raster(r.model, *options.raster_bounds, cfg.raster_resolution);
            const std::string name(to_string(r.method));
            write_file_atomic(raster_dir / (name + ".pgm"), pgm_text(raster));
            write_file_atomic(raster_dir / (name + ".json"), raster_sidecar(raster, r.method));
        }
        const DecisionRaster raster =
            decision_raster(retrain_ref->model, *options.raster_bounds, cfg.raster_resolution);
        write_file_atomic(raster_dir / "retrain.pgm", pgm_text(raster));
        write_file_atomic(raster_dir / "retrain.json", raster_sidecar(raster, Method::retrain));
    }
}

void run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const fs::path out = cfg.output_dir;
    fs::path staged = out;
    staged += ".partial";
    std::error_code ec;
    fs::remove_all(staged, ec);
    try {
        fs::create_directories(staged);
        write_file_atomic(staged / "config.cfg", cfg.canonical_text());

        const LabeledDataset ds = in_stage("data", [&] { return build_dataset(cfg); });
        const ForgetSplit split =
            in_stage("data", [&] { return forget_split(ds, cfg.forget_class); });
        const UnlearnResult original = in_stage("train", [&] { return train_original(cfg, ds); });
        in_stage("checkpoint", [&] {
            save_checkpoint(original.model, provenance_for(cfg, original),
                            checkpoint_path(staged, Method::original));
            return 0;
        });

        std::vector<Method> methods{Method::retrain};
        methods.insert(methods.end(), cfg.methods.begin(), cfg.methods.end());
        for (Method m : methods) {
            const std::string stage = "unlearn:" + std::string(to_string(m));
            const UnlearnResult result = in_stage(stage, [&] {
                SplitAccess access(split);
                return run_method(cfg, m, original.model, access);
            });
            in_stage("checkpoint", [&] {
                save_checkpoint(result.model, provenance_for(cfg, result),
                                checkpoint_path(staged, m));
                return 0;
            });
        }
        in_stage("report", [&] {
            emit_report(staged);
            return 0;
        });
        in_stage("publish", [&] {
            publish(staged, out);
            return 0;
        });
    } catch (...) {
        fs::remove_all(staged, ec);
        throw;
    }
}

}  // namespace bu
