#include "lrdlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace lrdlab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

NormalStream::NormalStream(std::uint64_t key) {
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    engine_.seed(seq);
}

double NormalStream::uniform() noexcept {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

double NormalStream::normal() noexcept {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

void NormalStream::fill_normal(std::span<double> out) noexcept {
    for (double& v : out) v = normal();
}

std::uint64_t NormalStream::below(std::uint64_t n) noexcept {
    // Rejection keeps the result exactly uniform.
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % n));
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

}  // namespace lrdlab
