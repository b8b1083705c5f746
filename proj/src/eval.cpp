#include "bu/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bu/error.hpp"

namespace bu {
namespace {

void require_nonempty(std::span<const Example> examples, const char* what) {
    if (examples.empty()) throw InvalidInput(std::string(what) + " needs a nonempty example set");
}

double speedup_of(double reference, double seconds) {
    if (seconds > 0.0) return reference / seconds;
    return reference > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

}  // namespace

double accuracy(const Classifier& model, std::span<const Example> examples) {
    require_nonempty(examples, "accuracy");
    std::size_t hits = 0;
    for (const auto& ex : examples) {
        if (predict(model, ex.features) == ex.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

double prediction_entropy(const Tensor& logits) {
    const auto z = logits.values();
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - peak);
    const double log_sum = std::log(sum);
    double h = 0.0;
    for (double v : z) {
        const double log_p = v - peak - log_sum;
        h -= std::exp(log_p) * log_p;
    }
    return std::clamp(h, 0.0, std::log(static_cast<double>(z.size())));
}

std::vector<double> output_entropy(const Classifier& model, std::span<const Example> examples) {
    require_nonempty(examples, "output_entropy");
    std::vector<double> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(prediction_entropy(forward(model, ex.features)));
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median of empty set");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lower + upper);
}

MiaResult entropy_threshold_attack(std::span<const double> members,
                                   std::span<const double> non_members,
                                   std::span<const double> probe) {
    if (members.empty() || non_members.empty() || probe.empty()) {
        throw InvalidInput("membership attack needs nonempty member, non-member and probe sets");
    }
    std::vector<double> m(members.begin(), members.end());
    std::vector<double> n(non_members.begin(), non_members.end());
    std::sort(m.begin(), m.end());
    std::sort(n.begin(), n.end());

    std::vector<double> candidates;
    candidates.reserve(m.size() + n.size());
    candidates.insert(candidates.end(), m.begin(), m.end());
    candidates.insert(candidates.end(), n.begin(), n.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    MiaResult result;
    result.degenerate = candidates.size() == 1;
    result.attack_balanced_accuracy = -1.0;
    for (double threshold : candidates) {
        const auto tp = std::upper_bound(m.begin(), m.end(), threshold) - m.begin();
        const auto fp = std::upper_bound(n.begin(), n.end(), threshold) - n.begin();
        const double tpr = static_cast<double>(tp) / static_cast<double>(m.size());
        const double tnr = 1.0 - static_cast<double>(fp) / static_cast<double>(n.size());
        const double balanced = 0.5 * (tpr + tnr);
        if (balanced > result.attack_balanced_accuracy) {
            result.attack_balanced_accuracy = balanced;
            result.threshold = threshold;
        }
    }
    const auto hits = std::count_if(probe.begin(), probe.end(),
                                    [&](double h) { return h <= result.threshold; });
    result.asr = static_cast<double>(hits) / static_cast<double>(probe.size());
    return result;
}

MiaResult mia_attack(const Classifier& target, const ForgetSplit& split, const MiaConfig& cfg) {
    (void)cfg;  // entropy is the only attack feature
    require_nonempty(split.remain_train, "mia_attack (D_r)");
    require_nonempty(split.remain_test, "mia_attack (D_rt)");
    require_nonempty(split.forget_train, "mia_attack (D_f)");
    require_nonempty(split.forget_test, "mia_attack (D_ft)");
    const auto members = output_entropy(target, split.remain_train);
    const auto non_members = output_entropy(target, split.remain_test);
    const auto probe = output_entropy(target, split.forget_train);
    return entropy_threshold_attack(members, non_members, probe);
}

double mia_asr(const Classifier& target, const ForgetSplit& split, const MiaConfig& cfg) {
    return mia_attack(target, split, cfg).asr;
}

Bounds default_bounds(std::span<const Example> examples, double inflate) {
    require_nonempty(examples, "default_bounds");
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& ex : examples) {
        if (ex.features.size() != 2) throw InvalidInput("default_bounds needs 2D features");
        b.x_min = std::min(b.x_min, ex.features[0]);
        b.x_max = std::max(b.x_max, ex.features[0]);
        b.y_min = std::min(b.y_min, ex.features[1]);
        b.y_max = std::max(b.y_max, ex.features[1]);
    }
    const double dx = 0.5 * inflate * (b.x_max - b.x_min);
    const double dy = 0.5 * inflate * (b.y_max - b.y_min);
    return {b.x_min - dx, b.x_max + dx, b.y_min - dy, b.y_max + dy};
}

std::vector<double> DecisionRaster::area_fractions() const {
    std::vector<double> area(counts.size(), 0.0);
    const double total = static_cast<double>(cells.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        area[k] = static_cast<double>(counts[k]) / total;
    }
    return area;
}

DecisionRaster decision_raster(const Classifier& model, const Bounds& bounds,
                               std::size_t resolution) {
    if (model.input_width() != 2) throw InvalidInput("decision regions need a 2D model");
    if (resolution == 0) throw InvalidInput("raster resolution must be positive");
    if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
        throw InvalidInput("raster bounds are empty");
    }
    DecisionRaster raster{bounds, resolution, model.output_width(), {}, {}};
    raster.cells.resize(resolution * resolution);
    raster.counts.assign(model.output_width(), 0);
    const double dx = (bounds.x_max - bounds.x_min) / static_cast<double>(resolution);
    const double dy = (bounds.y_max - bounds.y_min) / static_cast<double>(resolution);
    Tensor point = Tensor::zeros({2});
    for (std::size_t r = 0; r < resolution; ++r) {
        point[1] = bounds.y_max - (static_cast<double>(r) + 0.5) * dy;
        for (std::size_t c = 0; c < resolution; ++c) {
            point[0] = bounds.x_min + (static_cast<double>(c) + 0.5) * dx;
            const std::size_t k = predict(model, point);
            raster.cells[r * resolution + c] = static_cast<std::uint32_t>(k);
            ++raster.counts[k];
        }
    }
    return raster;
}

std::vector<double> decision_region_area(const Classifier& model, const Bounds& bounds,
                                         std::size_t resolution) {
    return decision_raster(model, bounds, resolution).area_fractions();
}

bool on_boundary(const Classifier& model, const Tensor& x, std::size_t i, std::size_t j,
                 double tol) {
    const std::size_t k = model.output_width();
    if (i == j || i >= k || j >= k) {
        throw InvalidInput("on_boundary needs two distinct classes below " + std::to_string(k));
    }
    if (!(tol >= 0.0)) throw InvalidInput("tolerance must be nonnegative");
    const Tensor f = forward(model, x);
    const double top = *std::max_element(f.values().begin(), f.values().end());
    return std::abs(f[i] - f[j]) <= tol && top <= std::max(f[i], f[j]) + tol;
}

std::string_view to_string(SplitName split) {
    switch (split) {
        case SplitName::remain_train: return "D_r";
        case SplitName::forget_train: return "D_f";
        case SplitName::remain_test: return "D_rt";
        case SplitName::forget_test: return "D_ft";
    }
    return "unknown";
}

EvalReport evaluate(const Classifier& model, const ForgetSplit& split, const EvalOptions& options) {
    EvalReport report;
    report.acc_remain_train = accuracy(model, split.remain_train);
    report.acc_forget_train = accuracy(model, split.forget_train);
    report.acc_remain_test = accuracy(model, split.remain_test);
    report.acc_forget_test = accuracy(model, split.forget_test);
    report.mia = mia_attack(model, split, options.mia);
    report.entropy = {output_entropy(model, split.remain_train),
                      output_entropy(model, split.forget_train),
                      output_entropy(model, split.remain_test),
                      output_entropy(model, split.forget_test)};
    if (options.raster_bounds && model.input_width() == 2) {
        report.region_area =
            decision_region_area(model, *options.raster_bounds, options.raster_resolution);
    }
    return report;
}

std::vector<MethodComparison> compare_methods(std::span<const UnlearnResult> results,
                                              const UnlearnResult& retrain_ref,
                                              const ForgetSplit& split,
                                              const EvalOptions& options) {
    const auto widths = retrain_ref.model.widths();
    for (const auto& r : results) {
        if (r.model.widths() != widths || r.model.expanded()) {
            throw InvalidInput("method " + std::string(to_string(r.method)) +
                               " has a different architecture from the retrain reference");
        }
    }
    const double reference = retrain_ref.wall_clock_seconds;
    std::vector<MethodComparison> rows;
    rows.push_back({retrain_ref.method, evaluate(retrain_ref.model, split, options),
                    reference, speedup_of(reference, reference)});
    for (const auto& r : results) {
        rows.push_back({r.method, evaluate(r.model, split, options), r.wall_clock_seconds,
                        speedup_of(reference, r.wall_clock_seconds)});
    }
    return rows;
}

}  // namespace bu
