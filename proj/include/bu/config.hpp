#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bu/eval.hpp"
#include "bu/nn.hpp"
#include "bu/unlearn.hpp"

namespace bu {

/// Flat `key = value` pairs. `#` starts a comment; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

/// Throws ParseError for malformed lines and duplicate keys.
KeyValues parse_key_values(const std::string& text);

struct DatasetSpec {
    enum class Source { blobs, csv };
    Source source = Source::blobs;
    std::size_t num_classes = 10;
    std::size_t feature_dim = 2;
    std::size_t per_class = 200;
    double spread = 0.05;
    std::filesystem::path csv_path;
    bool csv_header = false;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    DatasetSpec data;
    std::vector<std::size_t> hidden{64, 64};
    OptimizerConfig train;
    std::size_t forget_class = 0;
    /// Unlearning methods to run besides retrain, which always runs.
    std::vector<Method> methods;
    ShrinkConfig shrink;
    OptimizerConfig expand;
    OptimizerConfig finetune;
    OptimizerConfig random_labels;
    OptimizerConfig negative_gradient;
    MiaConfig mia;
    std::size_t raster_resolution = 512;
    double raster_inflate = 0.2;
    std::filesystem::path output_dir;

    /// Builds and validates a config. Unknown keys and missing required keys
    /// throw ConfigError naming the dotted key path.
    static ExperimentConfig from_key_values(const KeyValues& kv);
    static ExperimentConfig from_file(const std::filesystem::path& path,
                                      const KeyValues& overrides = {});

    /// {input, hidden..., K}.
    std::vector<std::size_t> widths() const;
    /// Every key except output.dir with its effective value, sorted. Together
    /// with an output.dir it parses back to an equal config.
    std::string canonical_text() const;
    /// Hex FNV-1a of canonical_text().
    std::string digest() const;

    void validate() const;
};

/// The sub-seed for a named stage ("data", "init", "shuffle", ...).
std::uint64_t stage_seed(const ExperimentConfig& cfg, const std::string& stage);

/// Optimizer config for an unlearning method with its shuffle seed filled in.
OptimizerConfig method_optimizer(const ExperimentConfig& cfg, Method method);

}  // namespace bu
