#include "bu/unlearn.hpp"

#include <array>
#include <chrono>
#include <cmath>

#include "bu/error.hpp"
#include "bu/rng.hpp"

namespace bu {
namespace {

constexpr std::array kMethods{
    Method::original,      Method::retrain,         Method::finetune,
    Method::negative_gradient, Method::random_labels, Method::boundary_shrink,
    Method::boundary_expanding,
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void require_unexpanded(const Classifier& model) {
    if (model.expanded()) throw StateError("unlearning expects a model without a shadow output");
}

std::vector<Example> to_examples(const std::vector<RelabeledExample>& relabeled) {
    std::vector<Example> out;
    out.reserve(relabeled.size());
    for (const auto& r : relabeled) out.push_back({r.features, r.new_label});
    return out;
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::original: return "original";
        case Method::retrain: return "retrain";
        case Method::finetune: return "finetune";
        case Method::negative_gradient: return "negative_gradient";
        case Method::random_labels: return "random_labels";
        case Method::boundary_shrink: return "boundary_shrink";
        case Method::boundary_expanding: return "boundary_expanding";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    for (Method m : kMethods) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

std::span<const Method> unlearning_methods() {
    return std::span<const Method>(kMethods).subspan(1);
}

void ShrinkConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be positive");
    finetune.validate();
}

Tensor neighbor_search(const Classifier& model, const Tensor& x, std::size_t label, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be positive");
    const Tensor g = grad_input(model, x, label);
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        out[i] += epsilon * s;
    }
    return out;
}

std::size_t nearest_incorrect_label(const Classifier& model, const Tensor& x_prime,
                                    std::size_t forget_class) {
    if (model.output_width() < 2) throw StateError("no incorrect label exists for a 1-class model");
    if (forget_class >= model.output_width()) throw InvalidInput("forget class out of range");
    const Tensor logits = forward(model, x_prime);
    std::size_t best = forget_class == 0 ? 1 : 0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (k != forget_class && logits[k] > logits[best]) best = k;
    }
    return best;
}

std::vector<RelabeledExample> relabel_nearest_incorrect(const Classifier& model,
                                                        std::span<const Example> forget,
                                                        std::size_t forget_class, double epsilon) {
    std::vector<RelabeledExample> out;
    out.reserve(forget.size());
    for (const auto& ex : forget) {
        const Tensor cross = neighbor_search(model, ex.features, forget_class, epsilon);
        out.push_back({ex.features, nearest_incorrect_label(model, cross, forget_class), ex.label});
    }
    return out;
}

UnlearnResult boundary_shrink(const Classifier& original, SplitAccess& split,
                              const ShrinkConfig& cfg) {
    cfg.validate();
    require_unexpanded(original);
    const Stopwatch clock;
    const auto forget = split.forget_train();
    const std::size_t t = split.forget_class();

    UnlearnResult result{original, Method::boundary_shrink, 0.0, {}};
    if (cfg.finetune.epochs > 0 && !forget.empty()) {
        SgdTrainer trainer(original, cfg.finetune);
        std::vector<Example> relabeled =
            to_examples(relabel_nearest_incorrect(original, forget, t, cfg.epsilon));
        for (std::size_t epoch = 0; epoch < cfg.finetune.epochs; ++epoch) {
            if (cfg.refresh_labels_each_epoch && epoch > 0) {
                relabeled = to_examples(
                    relabel_nearest_incorrect(trainer.model(), forget, t, cfg.epsilon));
            }
            result.per_epoch_loss.push_back(trainer.run_epoch(relabeled));
        }
        result.model = trainer.model();
    }
    result.wall_clock_seconds = clock.seconds();
    return result;
}

UnlearnResult boundary_expand(const Classifier& original, SplitAccess& split,
                              const OptimizerConfig& cfg) {
    cfg.validate();
    require_unexpanded(original);
    const Stopwatch clock;
    const auto forget = split.forget_train();
    const std::size_t shadow = original.num_classes();

    std::vector<Example> remapped;
    remapped.reserve(forget.size());
    for (const auto& ex : forget) remapped.push_back({ex.features, shadow});

    TrainResult trained = fit(expand_output(original), remapped, cfg);
    UnlearnResult result{prune_output(trained.model, shadow), Method::boundary_expanding, 0.0,
                         std::move(trained.epoch_loss)};
    result.wall_clock_seconds = clock.seconds();
    return result;
}

UnlearnResult retrain(SplitAccess& split, std::span<const std::size_t> widths,
                      const OptimizerConfig& cfg, std::uint64_t init_seed) {
    cfg.validate();
    const Stopwatch clock;
    const Classifier fresh = Classifier::initialize(widths, init_seed);
    if (fresh.num_classes() != split.num_classes()) {
        throw InvalidInput("architecture output width does not match the class count");
    }
    TrainResult trained = fit(fresh, split.remain_train(), cfg);
    UnlearnResult result{std::move(trained.model), Method::retrain, 0.0,
                         std::move(trained.epoch_loss)};
    result.wall_clock_seconds = clock.seconds();
    return result;
}

UnlearnResult finetune_baseline(const Classifier& original, SplitAccess& split,
                                const OptimizerConfig& cfg) {
    require_unexpanded(original);
    const Stopwatch clock;
    TrainResult trained = fit(original, split.remain_train(), cfg);
    UnlearnResult result{std::move(trained.model), Method::finetune, 0.0,
                         std::move(trained.epoch_loss)};
    result.wall_clock_seconds = clock.seconds();
    return result;
}

UnlearnResult random_labels_baseline(const Classifier& original, SplitAccess& split,
                                     const OptimizerConfig& cfg, std::uint64_t seed) {
    require_unexpanded(original);
    const std::size_t k = original.num_classes();
    if (k < 2) throw StateError("random relabeling needs at least two classes");
    const Stopwatch clock;
    const std::size_t t = split.forget_class();
    Rng rng(seed);
    std::vector<Example> relabeled;
    for (const auto& ex : split.forget_train()) {
        std::size_t label = rng.uniform_index(k - 1);
        if (label >= t) ++label;
        relabeled.push_back({ex.features, label});
    }
    TrainResult trained = fit(original, relabeled, cfg);
    UnlearnResult result{std::move(trained.model), Method::random_labels, 0.0,
                         std::move(trained.epoch_loss)};
    result.wall_clock_seconds = clock.seconds();
    return result;
}

UnlearnResult negative_gradient_baseline(const Classifier& original, SplitAccess& split,
                                         const OptimizerConfig& cfg) {
    require_unexpanded(original);
    const Stopwatch clock;
    TrainResult trained = fit(original, split.forget_train(), cfg, Objective::maximize);
    UnlearnResult result{std::move(trained.model), Method::negative_gradient, 0.0,
                         std::move(trained.epoch_loss)};
    result.wall_clock_seconds = clock.seconds();
    return result;
}

// Convenience overloads with a throwaway access view.

UnlearnResult boundary_shrink(const Classifier& original, const ForgetSplit& split,
                              const ShrinkConfig& cfg) {
    SplitAccess access(split);
    return boundary_shrink(original, access, cfg);
}

UnlearnResult boundary_expand(const Classifier& original, const ForgetSplit& split,
                              const OptimizerConfig& cfg) {
    SplitAccess access(split);
    return boundary_expand(original, access, cfg);
}

UnlearnResult retrain(const ForgetSplit& split, std::span<const std::size_t> widths,
                      const OptimizerConfig& cfg, std::uint64_t init_seed) {
    SplitAccess access(split);
    return retrain(access, widths, cfg, init_seed);
}

UnlearnResult finetune_baseline(const Classifier& original, const ForgetSplit& split,
                                const OptimizerConfig& cfg) {
    SplitAccess access(split);
    return finetune_baseline(original, access, cfg);
}

UnlearnResult random_labels_baseline(const Classifier& original, const ForgetSplit& split,
                                     const OptimizerConfig& cfg, std::uint64_t seed) {
    SplitAccess access(split);
    return random_labels_baseline(original, access, cfg, seed);
}

UnlearnResult negative_gradient_baseline(const Classifier& original, const ForgetSplit& split,
                                         const OptimizerConfig& cfg) {
    SplitAccess access(split);
    return negative_gradient_baseline(original, access, cfg);
}

}  // namespace bu
