#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bu/nn.hpp"

namespace bu {

/// Where a stored model came from.
struct Provenance {
    std::string method;
    std::uint64_t seed = 0;
    std::string config_digest;
    double wall_clock_seconds = 0.0;
    std::vector<double> per_epoch_loss;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Checkpoint {
    Classifier model;
    Provenance provenance;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers and reals little-endian:
///
///   "BULN" | u32 version | u32 layer count | (u32 in, u32 out) per layer
///   | per layer: weights row-major (out*in f64) then bias (out f64)
///   | u32 byte length | UTF-8 JSON provenance
///
/// The JSON also records num_classes and the expanded flag.
std::vector<std::uint8_t> encode_checkpoint(const Classifier& model, const Provenance& provenance);

/// Inverse of encode_checkpoint. Throws FormatError naming the failing offset.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Classifier& model, const Provenance& provenance,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bu
