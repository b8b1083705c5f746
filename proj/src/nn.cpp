#include "bu/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bu/error.hpp"
#include "bu/rng.hpp"

namespace bu {
namespace {

// Activations of one forward pass: pre[l] is layer l's pre-activation,
// post[l] its output after ReLU (the final layer stays linear).
struct Trace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

void check_input(const Classifier& model, std::span<const double> x) {
    if (x.size() != model.input_width()) {
        throw InvalidInput("input has " + std::to_string(x.size()) + " features, model expects " +
                           std::to_string(model.input_width()));
    }
}

void check_label(std::size_t label, std::size_t width) {
    if (label >= width) {
        throw InvalidInput("label " + std::to_string(label) + " out of range for " +
                           std::to_string(width) + " outputs");
    }
}

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
    const std::size_t rows = layer.outputs();
    const std::size_t cols = layer.inputs();
    const auto w = layer.weights.values();
    const auto b = layer.bias.values();
    out.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = w.data() + r * cols;
        double acc = b[r];
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
        out[r] = acc;
    }
}

void run_forward(const std::vector<DenseLayer>& layers, std::span<const double> x, Trace& trace) {
    trace.pre.resize(layers.size());
    trace.post.resize(layers.size());
    std::span<const double> in = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        affine(layers[l], in, trace.pre[l]);
        trace.post[l] = trace.pre[l];
        if (l + 1 < layers.size()) {
            for (double& v : trace.post[l]) v = std::max(v, 0.0);
        }
        in = trace.post[l];
    }
}

void softmax_into(std::span<const double> logits, std::vector<double>& out) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    out.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
}

double cross_entropy_of(std::span<const double> logits, std::size_t label) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - peak);
    return std::max(0.0, peak + std::log(sum) - logits[label]);
}

ParameterGradients zero_like(const Classifier& model) {
    ParameterGradients g;
    g.reserve(model.layers().size());
    for (const auto& layer : model.layers()) {
        g.push_back({Tensor::zeros(layer.weights.shape()), Tensor::zeros(layer.bias.shape())});
    }
    return g;
}

// Backpropagates one example. Adds scale * dL/dparams into `grads` when
// non-null and writes dL/dx into `input_grad` when non-null. Returns the loss.
double backprop(const std::vector<DenseLayer>& layers, std::span<const double> x,
                std::size_t label, Trace& trace, ParameterGradients* grads, double scale,
                std::vector<double>* input_grad) {
    run_forward(layers, x, trace);
    const std::size_t last = layers.size() - 1;

    std::vector<double> delta;
    softmax_into(trace.pre[last], delta);
    const double loss = cross_entropy_of(trace.pre[last], label);
    delta[label] -= 1.0;

    std::vector<double> prev_delta;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const DenseLayer& layer = layers[l];
        const std::size_t rows = layer.outputs();
        const std::size_t cols = layer.inputs();
        const std::span<const double> in =
            l == 0 ? x : std::span<const double>(trace.post[l - 1]);

        if (grads != nullptr) {
            auto gw = (*grads)[l].weights.values();
            auto gb = (*grads)[l].bias.values();
            for (std::size_t r = 0; r < rows; ++r) {
                const double d = scale * delta[r];
                if (d == 0.0) continue;
                double* row = gw.data() + r * cols;
                for (std::size_t c = 0; c < cols; ++c) row[c] += d * in[c];
                gb[r] += d;
            }
        }

        if (l == 0 && input_grad == nullptr) break;

        const auto w = layer.weights.values();
        prev_delta.assign(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = delta[r];
            if (d == 0.0) continue;
            const double* row = w.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) prev_delta[c] += row[c] * d;
        }
        if (l > 0) {
            const auto& z = trace.pre[l - 1];
            for (std::size_t c = 0; c < cols; ++c) {
                if (z[c] <= 0.0) prev_delta[c] = 0.0;
            }
        }
        delta.swap(prev_delta);
    }
    if (input_grad != nullptr) *input_grad = delta;
    return loss;
}

bool parameters_finite(const std::vector<DenseLayer>& layers) {
    return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
        return l.weights.all_finite() && l.bias.all_finite();
    });
}

}  // namespace

Classifier::Classifier(std::vector<DenseLayer> layers, std::size_t num_classes, bool expanded)
    : layers_(std::move(layers)), num_classes_(num_classes), expanded_(expanded) {
    if (layers_.empty()) throw InvalidInput("classifier needs at least one layer");
    if (num_classes_ == 0) throw InvalidInput("classifier needs at least one class");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.weights.rank() != 2 || layer.bias.rank() != 1 ||
            layer.bias.size() != layer.outputs()) {
            throw InvalidInput("layer " + std::to_string(l) + " has inconsistent shapes");
        }
        if (layer.inputs() == 0 || layer.outputs() == 0) {
            throw InvalidInput("layer " + std::to_string(l) + " has zero width");
        }
        if (l > 0 && layers_[l - 1].outputs() != layer.inputs()) {
            throw InvalidInput("layer " + std::to_string(l) + " input width " +
                               std::to_string(layer.inputs()) + " does not match previous output " +
                               std::to_string(layers_[l - 1].outputs()));
        }
    }
    const std::size_t expected = num_classes_ + (expanded_ ? 1 : 0);
    if (output_width() != expected) {
        throw InvalidInput("final layer width " + std::to_string(output_width()) +
                           " does not match " + std::to_string(expected) + " outputs");
    }
}

Classifier Classifier::initialize(std::span<const std::size_t> widths, std::uint64_t seed) {
    if (widths.size() < 2) throw InvalidInput("need at least input and output widths");
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t in = widths[l];
        const std::size_t out = widths[l + 1];
        if (in == 0 || out == 0) throw InvalidInput("layer widths must be positive");
        const double stddev = std::sqrt(2.0 / static_cast<double>(in));
        std::vector<double> w(in * out);
        for (double& v : w) v = stddev * rng.normal();
        layers.push_back({Tensor({out, in}, std::move(w)), Tensor::zeros({out})});
    }
    const std::size_t k = widths.back();
    return Classifier(std::move(layers), k);
}

std::vector<std::size_t> Classifier::widths() const {
    std::vector<std::size_t> w{input_width()};
    for (const auto& layer : layers_) w.push_back(layer.outputs());
    return w;
}

std::size_t Classifier::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.parameter_count();
    return n;
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidInput("learning_rate must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidInput("momentum must lie in [0, 1)");
    if (batch_size == 0) throw InvalidInput("batch_size must be at least 1");
}

Tensor forward(const Classifier& model, const Tensor& x) {
    check_input(model, x.values());
    Trace trace;
    run_forward(model.layers(), x.values(), trace);
    return Tensor::vector(std::move(trace.pre.back()));
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw InvalidInput("argmax of empty range");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                    values.begin());
}

std::size_t predict(const Classifier& model, const Tensor& x) {
    return argmax(forward(model, x).values());
}

Tensor softmax(const Tensor& logits) {
    if (logits.size() == 0) throw InvalidInput("softmax of empty logits");
    std::vector<double> p;
    softmax_into(logits.values(), p);
    return Tensor::vector(std::move(p));
}

double cross_entropy(const Tensor& logits, std::size_t label) {
    check_label(label, logits.size());
    return cross_entropy_of(logits.values(), label);
}

double mean_loss(const Classifier& model, std::span<const Example> batch) {
    if (batch.empty()) throw InvalidInput("empty batch");
    Trace trace;
    double total = 0.0;
    for (const auto& ex : batch) {
        check_input(model, ex.features.values());
        check_label(ex.label, model.output_width());
        run_forward(model.layers(), ex.features.values(), trace);
        total += cross_entropy_of(trace.pre.back(), ex.label);
    }
    return total / static_cast<double>(batch.size());
}

ParameterGradients grad_params(const Classifier& model, std::span<const Example> batch) {
    if (batch.empty()) throw InvalidInput("empty batch");
    ParameterGradients grads = zero_like(model);
    const double scale = 1.0 / static_cast<double>(batch.size());
    Trace trace;
    for (const auto& ex : batch) {
        check_input(model, ex.features.values());
        check_label(ex.label, model.output_width());
        backprop(model.layers(), ex.features.values(), ex.label, trace, &grads, scale, nullptr);
    }
    return grads;
}

Tensor grad_input(const Classifier& model, const Tensor& x, std::size_t label) {
    check_input(model, x.values());
    check_label(label, model.output_width());
    Trace trace;
    std::vector<double> g;
    backprop(model.layers(), x.values(), label, trace, nullptr, 0.0, &g);
    return Tensor::vector(std::move(g));
}

SgdTrainer::SgdTrainer(const Classifier& model, const OptimizerConfig& cfg, Objective objective)
    : params_(model.layers()),
      velocity_(zero_like(model)),
      grads_(zero_like(model)),
      num_classes_(model.num_classes()),
      expanded_(model.expanded()),
      cfg_(cfg),
      direction_(objective == Objective::minimize ? 1.0 : -1.0),
      rng_(cfg.seed) {
    cfg_.validate();
}

Classifier SgdTrainer::model() const { return Classifier(params_, num_classes_, expanded_); }

double SgdTrainer::run_epoch(std::span<const Example> data) {
    if (data.empty()) throw InvalidInput("cannot run an epoch over an empty training set");
    for (const auto& ex : data) {
        if (ex.features.size() != params_.front().inputs()) {
            throw InvalidInput("training example has " + std::to_string(ex.features.size()) +
                               " features, model expects " +
                               std::to_string(params_.front().inputs()));
        }
        check_label(ex.label, params_.back().outputs());
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng_.uniform_index(i)]);
    }

    Trace trace;
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (auto& g : grads_) {
            std::fill(g.weights.values().begin(), g.weights.values().end(), 0.0);
            std::fill(g.bias.values().begin(), g.bias.values().end(), 0.0);
        }
        for (std::size_t i = start; i < stop; ++i) {
            const Example& ex = data[order[i]];
            total += backprop(params_, ex.features.values(), ex.label, trace, &grads_, scale, nullptr);
        }
        auto step = [&](std::span<double> p, std::span<double> v, std::span<const double> g) {
            for (std::size_t k = 0; k < p.size(); ++k) {
                v[k] = cfg_.momentum * v[k] + direction_ * g[k];
                p[k] -= cfg_.learning_rate * v[k];
            }
        };
        for (std::size_t l = 0; l < params_.size(); ++l) {
            step(params_[l].weights.values(), velocity_[l].weights.values(),
                 grads_[l].weights.values());
            step(params_[l].bias.values(), velocity_[l].bias.values(), grads_[l].bias.values());
        }
    }
    if (!parameters_finite(params_)) {
        throw NumericalError("parameters became non-finite in epoch " + std::to_string(epoch_));
    }
    ++epoch_;
    return total / static_cast<double>(data.size());
}

TrainResult fit(const Classifier& model, std::span<const Example> data, const OptimizerConfig& cfg,
                Objective objective) {
    cfg.validate();
    for (const auto& ex : data) {
        check_input(model, ex.features.values());
        check_label(ex.label, model.output_width());
    }
    if (cfg.epochs == 0 || data.empty()) return {model, {}};
    SgdTrainer trainer(model, cfg, objective);
    std::vector<double> losses;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) losses.push_back(trainer.run_epoch(data));
    return {trainer.model(), std::move(losses)};
}

Classifier train(const Classifier& model, std::span<const Example> data,
                 const OptimizerConfig& cfg) {
    return fit(model, data, cfg).model;
}

Classifier expand_output(const Classifier& model) {
    if (model.expanded()) throw StateError("model already has a shadow output");
    std::vector<DenseLayer> layers = model.layers();
    DenseLayer& last = layers.back();
    const std::size_t in = last.inputs();
    const std::size_t out = last.outputs();
    std::vector<double> w(last.weights.values().begin(), last.weights.values().end());
    w.resize((out + 1) * in, 0.0);
    std::vector<double> b(last.bias.values().begin(), last.bias.values().end());
    b.push_back(0.0);
    last = {Tensor({out + 1, in}, std::move(w)), Tensor::vector(std::move(b))};
    return Classifier(std::move(layers), model.num_classes(), true);
}

Classifier prune_output(const Classifier& model, std::size_t index) {
    if (!model.expanded()) throw InvalidInput("model has no shadow output to prune");
    if (index != model.num_classes()) {
        throw InvalidInput("only the shadow output " + std::to_string(model.num_classes()) +
                           " may be pruned, got " + std::to_string(index));
    }
    std::vector<DenseLayer> layers = model.layers();
    DenseLayer& last = layers.back();
    const std::size_t in = last.inputs();
    const std::size_t k = model.num_classes();
    std::vector<double> w(last.weights.values().begin(), last.weights.values().begin() + k * in);
    std::vector<double> b(last.bias.values().begin(), last.bias.values().begin() + k);
    last = {Tensor({k, in}, std::move(w)), Tensor::vector(std::move(b))};
    return Classifier(std::move(layers), k, false);
}

}  // namespace bu
