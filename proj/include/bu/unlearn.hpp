#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bu/data.hpp"
#include "bu/nn.hpp"

namespace bu {

enum class Method {
    original,
    retrain,
    finetune,
    negative_gradient,
    random_labels,
    boundary_shrink,
    boundary_expanding,
};

/// Canonical snake_case name, e.g. "boundary_shrink".
std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view name);
/// Every method that transforms an original model (everything except `original`).
std::span<const Method> unlearning_methods();

/// Read-counting view of a ForgetSplit.
///
/// Unlearning methods obtain their data only through this view, so tests can
/// verify which partitions a method touched. Counters add the number of
/// examples handed out per call.
class SplitAccess {
public:
    explicit SplitAccess(const ForgetSplit& split) : split_(&split) {}

    std::span<const Example> forget_train() {
        forget_reads_ += split_->forget_train.size();
        return split_->forget_train;
    }
    std::span<const Example> remain_train() {
        remain_reads_ += split_->remain_train.size();
        return split_->remain_train;
    }

    std::size_t forget_class() const noexcept { return split_->forget_class; }
    std::size_t num_classes() const noexcept { return split_->num_classes; }
    std::size_t forget_reads() const noexcept { return forget_reads_; }
    std::size_t remain_reads() const noexcept { return remain_reads_; }

private:
    const ForgetSplit* split_;
    std::size_t forget_reads_ = 0;
    std::size_t remain_reads_ = 0;
};

struct ShrinkConfig {
    /// Step size of the gradient-sign neighbor search, in standardized feature units.
    double epsilon = 0.5;
    OptimizerConfig finetune;
    /// Recompute cross samples and labels against the current model at each epoch start.
    bool refresh_labels_each_epoch = false;

    void validate() const;
};

struct RelabeledExample {
    Tensor features;
    std::size_t new_label = 0;
    std::size_t original_label = 0;
};

struct UnlearnResult {
    Classifier model;
    Method method = Method::original;
    double wall_clock_seconds = 0.0;
    std::vector<double> per_epoch_loss;
};

/// Cross sample x' = x + epsilon * sign(grad_x CE(x, label)), with sign(0) = 0.
Tensor neighbor_search(const Classifier& model, const Tensor& x, std::size_t label, double epsilon);

/// argmax over k != forget_class of the model's logits at x'; lowest index wins ties.
std::size_t nearest_incorrect_label(const Classifier& model, const Tensor& x_prime,
                                    std::size_t forget_class);

/// Neighbor search + nearest-incorrect label for every forgetting sample.
/// Labels are computed on the cross sample; `features` keeps the original input.
std::vector<RelabeledExample> relabel_nearest_incorrect(const Classifier& model,
                                                        std::span<const Example> forget,
                                                        std::size_t forget_class, double epsilon);

/// Relabel D_f with nearest-incorrect labels from the frozen original model and
/// finetune a copy of it on those pairs. Reads D_f only.
UnlearnResult boundary_shrink(const Classifier& original, SplitAccess& split,
                              const ShrinkConfig& cfg);
UnlearnResult boundary_shrink(const Classifier& original, const ForgetSplit& split,
                              const ShrinkConfig& cfg);

/// Add a shadow output, finetune the whole network on (x_f, K), then prune the
/// shadow output. Reads D_f only.
UnlearnResult boundary_expand(const Classifier& original, SplitAccess& split,
                              const OptimizerConfig& cfg);
UnlearnResult boundary_expand(const Classifier& original, const ForgetSplit& split,
                              const OptimizerConfig& cfg);

/// Fresh initialization from `init_seed`, trained on D_r only.
UnlearnResult retrain(SplitAccess& split, std::span<const std::size_t> widths,
                      const OptimizerConfig& cfg, std::uint64_t init_seed);
UnlearnResult retrain(const ForgetSplit& split, std::span<const std::size_t> widths,
                      const OptimizerConfig& cfg, std::uint64_t init_seed);

/// Continue training the original on D_r only.
UnlearnResult finetune_baseline(const Classifier& original, SplitAccess& split,
                                const OptimizerConfig& cfg);
UnlearnResult finetune_baseline(const Classifier& original, const ForgetSplit& split,
                                const OptimizerConfig& cfg);

/// Finetune on D_f with labels drawn uniformly from {0..K-1} \ {t}.
UnlearnResult random_labels_baseline(const Classifier& original, SplitAccess& split,
                                     const OptimizerConfig& cfg, std::uint64_t seed);
UnlearnResult random_labels_baseline(const Classifier& original, const ForgetSplit& split,
                                     const OptimizerConfig& cfg, std::uint64_t seed);

/// Gradient ascent on the cross-entropy of (x_f, t).
UnlearnResult negative_gradient_baseline(const Classifier& original, SplitAccess& split,
                                         const OptimizerConfig& cfg);
UnlearnResult negative_gradient_baseline(const Classifier& original, const ForgetSplit& split,
                                         const OptimizerConfig& cfg);

}  // namespace bu
