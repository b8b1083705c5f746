#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bu/tensor.hpp"

namespace bu {

struct LabeledDataset {
    std::vector<Example> train;
    std::vector<Example> test;
    std::size_t num_classes = 0;
    std::size_t feature_dim = 0;

    /// Throws InvalidInput if any example has the wrong width or an out-of-range label.
    void validate() const;
};

/// The forgetting partition for class `forget_class`.
struct ForgetSplit {
    std::size_t forget_class = 0;
    std::vector<Example> forget_train;   // D_f
    std::vector<Example> remain_train;   // D_r
    std::vector<Example> forget_test;    // D_ft
    std::vector<Example> remain_test;    // D_rt
    std::size_t num_classes = 0;
};

/// Per-feature affine map to zero mean and unit variance.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    /// Population statistics over `examples`. Constant features keep scale 1.
    static Standardizer fit(std::span<const Example> examples);
    void apply(std::vector<Example>& examples) const;
};

/// Gaussian clusters with centers on the unit circle (2D) or on random unit
/// directions (higher dimensions). Each class is split 80/20 into train and
/// test, then both splits are standardized with train statistics.
LabeledDataset make_blobs(std::size_t num_classes, std::size_t per_class, std::size_t feature_dim,
                          double spread, std::uint64_t seed);

struct CsvOptions {
    bool header = false;
    std::uint64_t seed = 0;
};

/// Rows `f1,...,fd,label` exactly as written in the file.
std::vector<Example> read_csv_rows(const std::filesystem::path& path, std::size_t num_classes,
                                   std::size_t feature_dim, bool header = false);

/// read_csv_rows, then a seeded row-hash 80/20 split and train-statistics standardization.
LabeledDataset load_csv(const std::filesystem::path& path, std::size_t num_classes,
                        std::size_t feature_dim, const CsvOptions& options = {});

/// Partition train and test by label == forget_class, keeping relative order.
ForgetSplit forget_split(const LabeledDataset& dataset, std::size_t forget_class);

}  // namespace bu
