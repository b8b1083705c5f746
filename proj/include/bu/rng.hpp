#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bu {

/// Seedable generator with named stream splitting.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// Distributions are implemented here rather than through <random>'s
/// distribution classes, which are allowed to differ between standard
/// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Seed of the sub-stream `name` of `seed`. Distinct names give unrelated streams.
    static std::uint64_t derive(std::uint64_t seed, std::string_view name);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);
    /// Standard normal (Box-Muller).
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// 64-bit FNV-1a digest.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bu
