#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bu/rng.hpp"
#include "bu/tensor.hpp"

namespace bu {

/// Fully-connected layer: y = W x + b with W stored [out x in].
struct DenseLayer {
    Tensor weights;
    Tensor bias;

    std::size_t inputs() const { return weights.shape()[1]; }
    std::size_t outputs() const { return weights.shape()[0]; }
    std::size_t parameter_count() const { return weights.size() + bias.size(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward ReLU classifier producing one logit per class.
///
/// Every hidden layer is followed by ReLU; the final layer is linear. When
/// `expanded()` the final layer carries one extra "shadow" output at index K.
/// Instances are immutable; training and surgery return new values.
class Classifier {
public:
    /// Validates that layer dimensions chain and that the final width is
    /// `num_classes` (or `num_classes + 1` when `expanded`).
    Classifier(std::vector<DenseLayer> layers, std::size_t num_classes, bool expanded = false);

    /// He-normal weights, zero biases. `widths` = {input, hidden..., K}.
    static Classifier initialize(std::span<const std::size_t> widths, std::uint64_t seed);

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    bool expanded() const noexcept { return expanded_; }
    std::size_t input_width() const { return layers_.front().inputs(); }
    std::size_t output_width() const { return layers_.back().outputs(); }
    /// {input, hidden..., output}.
    std::vector<std::size_t> widths() const;
    std::size_t parameter_count() const;

    friend bool operator==(const Classifier&, const Classifier&) = default;

private:
    std::vector<DenseLayer> layers_;
    std::size_t num_classes_;
    bool expanded_;
};

struct OptimizerConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;

    /// Throws InvalidInput unless learning_rate > 0, momentum in [0,1), batch_size >= 1.
    void validate() const;
};

/// Gradient of a scalar loss with respect to every weight and bias, laid out
/// like the model's layers.
using ParameterGradients = std::vector<DenseLayer>;

enum class Objective { minimize, maximize };

struct TrainResult {
    Classifier model;
    /// Mean loss over each epoch's examples, measured before each step's update.
    std::vector<double> epoch_loss;
};

/// Pre-softmax logits.
Tensor forward(const Classifier& model, const Tensor& x);

/// Argmax of the logits; lowest index wins ties.
std::size_t predict(const Classifier& model, const Tensor& x);

/// Index of the largest entry; lowest index wins ties.
std::size_t argmax(std::span<const double> values);

Tensor softmax(const Tensor& logits);

/// -log softmax(logits)[label].
double cross_entropy(const Tensor& logits, std::size_t label);

/// Mean cross-entropy over the batch.
double mean_loss(const Classifier& model, std::span<const Example> batch);

/// Mean-over-batch gradient of cross-entropy with respect to the parameters.
ParameterGradients grad_params(const Classifier& model, std::span<const Example> batch);

/// Gradient of cross-entropy at (x, label) with respect to x.
Tensor grad_input(const Classifier& model, const Tensor& x, std::size_t label);

/// Stateful momentum-SGD loop. Holds parameters, velocity and the shuffle
/// stream so that callers can change the training set between epochs.
class SgdTrainer {
public:
    SgdTrainer(const Classifier& model, const OptimizerConfig& cfg,
               Objective objective = Objective::minimize);

    /// One pass over `data` in shuffled mini-batches. Returns the epoch's mean loss.
    double run_epoch(std::span<const Example> data);

    Classifier model() const;

private:
    std::vector<DenseLayer> params_;
    ParameterGradients velocity_;
    ParameterGradients grads_;
    std::size_t num_classes_;
    bool expanded_;
    OptimizerConfig cfg_;
    double direction_;
    Rng rng_;
    std::size_t epoch_ = 0;
};

/// Mini-batch momentum SGD (v <- m v + g; w <- w - lr v). Batch order comes
/// from a Fisher-Yates shuffle seeded by cfg.seed; the run is bit-deterministic.
/// With Objective::maximize the step follows the ascent direction.
TrainResult fit(const Classifier& model, std::span<const Example> data, const OptimizerConfig& cfg,
                Objective objective = Objective::minimize);

Classifier train(const Classifier& model, std::span<const Example> data,
                 const OptimizerConfig& cfg);

/// Append a zero-initialized shadow output at index K.
Classifier expand_output(const Classifier& model);

/// Remove the shadow output. Only index == K is accepted.
Classifier prune_output(const Classifier& model, std::size_t index);

}  // namespace bu
