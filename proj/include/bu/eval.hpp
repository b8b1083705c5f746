#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bu/data.hpp"
#include "bu/nn.hpp"
#include "bu/unlearn.hpp"

namespace bu {

/// Fraction of examples whose argmax logit equals the label.
double accuracy(const Classifier& model, std::span<const Example> examples);

/// Shannon entropy (natural log) of softmax(logits).
double prediction_entropy(const Tensor& logits);

/// Per-example prediction entropy, each in [0, ln K].
std::vector<double> output_entropy(const Classifier& model, std::span<const Example> examples);

double median(std::vector<double> values);

struct MiaConfig {
    enum class Feature { entropy };
    Feature feature = Feature::entropy;
};

struct MiaResult {
    /// Fraction of probe samples classified as training members.
    double asr = 0.0;
    /// A sample is called a member iff its entropy <= threshold.
    double threshold = 0.0;
    double attack_balanced_accuracy = 0.0;
    /// Set when every attack-training entropy is identical.
    bool degenerate = false;
};

/// Entropy-threshold attack. The threshold maximizes balanced accuracy of
/// separating `members` from `non_members` (lowest threshold among ties) and is
/// then applied to `probe`. Independent of the order of each input.
MiaResult entropy_threshold_attack(std::span<const double> members,
                                   std::span<const double> non_members,
                                   std::span<const double> probe);

/// Members: target entropies on D_r. Non-members: on D_rt. Probe: D_f.
MiaResult mia_attack(const Classifier& target, const ForgetSplit& split, const MiaConfig& cfg = {});
double mia_asr(const Classifier& target, const ForgetSplit& split, const MiaConfig& cfg = {});

struct Bounds {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;
};

/// Bounding box of the examples grown by `inflate` of its width/height (half on each side).
Bounds default_bounds(std::span<const Example> examples, double inflate = 0.2);

/// Argmax class of every cell center on a resolution x resolution grid.
/// Row 0 is the top row (y_max); column 0 is x_min.
struct DecisionRaster {
    Bounds bounds;
    std::size_t resolution = 0;
    std::size_t num_classes = 0;
    std::vector<std::uint32_t> cells;
    std::vector<std::size_t> counts;

    /// counts[k] / cells.size() per class.
    std::vector<double> area_fractions() const;
};

DecisionRaster decision_raster(const Classifier& model, const Bounds& bounds,
                               std::size_t resolution);
std::vector<double> decision_region_area(const Classifier& model, const Bounds& bounds,
                                         std::size_t resolution);

/// True iff |f_i(x) - f_j(x)| <= tol and max_k f_k(x) <= max(f_i, f_j) + tol.
bool on_boundary(const Classifier& model, const Tensor& x, std::size_t i, std::size_t j,
                 double tol = 1e-3);

enum class SplitName { remain_train, forget_train, remain_test, forget_test };
std::string_view to_string(SplitName split);

struct EvalReport {
    double acc_remain_train = 0.0;  // D_r
    double acc_forget_train = 0.0;  // D_f
    double acc_remain_test = 0.0;   // D_rt
    double acc_forget_test = 0.0;   // D_ft
    MiaResult mia;
    /// Indexed by SplitName.
    std::vector<std::vector<double>> entropy;
    /// Per-class decision-region area; empty unless the model is 2D.
    std::vector<double> region_area;

    const std::vector<double>& entropy_of(SplitName split) const {
        return entropy[static_cast<std::size_t>(split)];
    }
};

struct EvalOptions {
    MiaConfig mia;
    /// Decision regions are rasterized when set and the model takes 2 features.
    std::optional<Bounds> raster_bounds;
    std::size_t raster_resolution = 512;
};

EvalReport evaluate(const Classifier& model, const ForgetSplit& split,
                    const EvalOptions& options = {});

struct MethodComparison {
    Method method;
    EvalReport report;
    double wall_clock_seconds = 0.0;
    /// Retrain wall-clock divided by this method's wall-clock.
    double speedup = 0.0;
};

/// Evaluates every result and the retrain reference. The reference row comes
/// first, followed by `results` in order. Throws InvalidInput when the models
/// disagree on class count or input width.
std::vector<MethodComparison> compare_methods(std::span<const UnlearnResult> results,
                                              const UnlearnResult& retrain_ref,
                                              const ForgetSplit& split,
                                              const EvalOptions& options = {});

}  // namespace bu
