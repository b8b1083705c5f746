#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "bu/config.hpp"
#include "bu/experiment.hpp"
#include "bu/nn.hpp"
#include "bu/rng.hpp"

namespace bu::test {

inline std::filesystem::path source_dir() { return BU_SOURCE_DIR; }
inline std::filesystem::path default_config_path() { return source_dir() / "configs" / "default.cfg"; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("bu_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Forward pass written independently of the library: returns logits and
/// appends the sign pattern of every hidden pre-activation to `mask`.
inline std::vector<double> naive_logits(const Classifier& m, const std::vector<double>& x,
                                        std::vector<bool>* mask = nullptr) {
    std::vector<double> a = x;
    const auto& layers = m.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& L = layers[l];
        std::vector<double> z(L.outputs());
        for (std::size_t r = 0; r < L.outputs(); ++r) {
            double s = L.bias[r];
            for (std::size_t c = 0; c < L.inputs(); ++c) s += L.weights.at(r, c) * a[c];
            z[r] = s;
        }
        if (l + 1 < layers.size()) {
            for (double& v : z) {
                if (mask) mask->push_back(v > 0.0);
                v = v > 0.0 ? v : 0.0;
            }
        }
        a = std::move(z);
    }
    return a;
}

inline double naive_ce(const std::vector<double>& logits, std::size_t label) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double v : logits) s += std::exp(v - mx);
    return std::log(s) + mx - logits[label];
}

inline double naive_mean_loss(const Classifier& m, const std::vector<Example>& batch,
                              std::vector<bool>* mask = nullptr) {
    double total = 0.0;
    for (const auto& ex : batch) {
        std::vector<double> x(ex.features.values().begin(), ex.features.values().end());
        total += naive_ce(naive_logits(m, x, mask), ex.label);
    }
    return total / static_cast<double>(batch.size());
}

/// Random model with non-zero biases so ReLU kinks land inside the data.
inline Classifier random_model(const std::vector<std::size_t>& widths, Rng& rng) {
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        std::vector<double> w(widths[i + 1] * widths[i]), b(widths[i + 1]);
        for (double& v : w) v = rng.normal() * 0.8;
        for (double& v : b) v = rng.normal() * 0.3;
        layers.push_back({Tensor({widths[i + 1], widths[i]}, w), Tensor::vector(b)});
    }
    return Classifier(std::move(layers), widths.back());
}

inline std::vector<Example> random_batch(std::size_t n, std::size_t dim, std::size_t classes,
                                         Rng& rng) {
    std::vector<Example> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (double& v : x) v = rng.normal();
        out.push_back({Tensor::vector(x), static_cast<std::size_t>(rng.uniform_index(classes))});
    }
    return out;
}

struct FdStats {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

/// Central differences of the mean loss over every weight and bias.
inline FdStats fd_check_params(const Classifier& model, const std::vector<Example>& batch,
                               double h = 1e-5) {
    const ParameterGradients g = grad_params(model, batch);
    std::vector<bool> base_mask;
    naive_mean_loss(model, batch, &base_mask);
    FdStats st;
    auto layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (int which = 0; which < 2; ++which) {
            const std::size_t n = which == 0 ? layers[l].weights.size() : layers[l].bias.size();
            for (std::size_t i = 0; i < n; ++i) {
                auto perturbed = [&](double delta, std::vector<bool>& mask) {
                    auto ls = layers;
                    (which == 0 ? ls[l].weights : ls[l].bias)[i] += delta;
                    return naive_mean_loss(Classifier(ls, model.num_classes(), model.expanded()),
                                           batch, &mask);
                };
                std::vector<bool> mp, mm;
                const double fp = perturbed(h, mp);
                const double fm = perturbed(-h, mm);
                if (mp != base_mask || mm != base_mask) {
                    ++st.skipped;
                    continue;
                }
                const double fd = (fp - fm) / (2.0 * h);
                const double an = which == 0 ? g[l].weights[i] : g[l].bias[i];
                st.max_rel_err = std::max(st.max_rel_err, rel_err(fd, an));
                ++st.checked;
            }
        }
    }
    return st;
}

/// Central differences of the single-example loss over each input coordinate.
inline FdStats fd_check_input(const Classifier& model, const Example& ex, double h = 1e-5) {
    const Tensor g = grad_input(model, ex.features, ex.label);
    std::vector<double> x(ex.features.values().begin(), ex.features.values().end());
    std::vector<bool> base_mask;
    naive_logits(model, x, &base_mask);
    FdStats st;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        std::vector<bool> mp, mm;
        const double fp = naive_ce(naive_logits(model, xp, &mp), ex.label);
        const double fm = naive_ce(naive_logits(model, xm, &mm), ex.label);
        if (mp != base_mask || mm != base_mask) {
            ++st.skipped;
            continue;
        }
        st.max_rel_err = std::max(st.max_rel_err, rel_err((fp - fm) / (2.0 * h), g[i]));
        ++st.checked;
    }
    return st;
}

/// The default desk experiment for one seed, with every method's result.
struct DeskRun {
    ExperimentConfig cfg;
    LabeledDataset dataset;
    ForgetSplit split;
    UnlearnResult original;
    std::vector<UnlearnResult> unlearned;

    const UnlearnResult& result(Method m) const {
        if (m == Method::original) return original;
        for (const auto& r : unlearned) {
            if (r.method == m) return r;
        }
        throw std::out_of_range("method not run");
    }
};

inline ExperimentConfig desk_config(std::uint64_t seed) {
    return ExperimentConfig::from_file(default_config_path(),
                                       {{"seed", std::to_string(seed)},
                                        {"output.dir", scratch_dir("desk").string()}});
}

inline DeskRun desk_run(std::uint64_t seed, const std::vector<Method>& methods) {
    ExperimentConfig cfg = desk_config(seed);
    LabeledDataset ds = build_dataset(cfg);
    ForgetSplit split = forget_split(ds, cfg.forget_class);
    UnlearnResult original = train_original(cfg, ds);
    DeskRun run{cfg, std::move(ds), std::move(split), std::move(original), {}};
    for (Method m : methods) {
        SplitAccess access(run.split);
        run.unlearned.push_back(run_method(run.cfg, m, run.original.model, access));
    }
    return run;
}

}  // namespace bu::test
