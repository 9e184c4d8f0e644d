#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace lrdlab {

/// Mixes a master seed and a stream index into an independent stream key.
/// Stream keys depend only on (master, index), never on evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Deterministic source of uniform and standard normal deviates.
///
/// Uses the standard-specified mt19937_64 sequence and converts it with
/// explicit formulas (53-bit uniforms, Box-Muller normals), so a given key
/// reproduces the same deviates on any conforming platform.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t key);

    /// Uniform deviate in (0, 1].
    double uniform() noexcept;
    double normal() noexcept;
    void fill_normal(std::span<double> out) noexcept;
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace lrdlab
