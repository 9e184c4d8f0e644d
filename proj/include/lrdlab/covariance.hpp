#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lrdlab {

/// gamma(n) = (1 + |n|)^(2d - 1), constant slowly varying part.
struct PowerLaw {
    double d;
};

/// gamma(n) = rho^|n|.
struct Geometric {
    double rho;
};

/// gamma(h) = values[h] for 0 <= h < values.size().
struct Tabulated {
    std::vector<double> values;
};

/// Autocovariance of a stationary, unit-variance Gaussian series.
class CovarianceModel {
public:
    using Kind = std::variant<PowerLaw, Geometric, Tabulated>;

    static CovarianceModel power_law(double d);
    static CovarianceModel geometric(double rho);
    static CovarianceModel tabulated(std::vector<double> values);
    /// Tabulated increments of fractional Brownian motion, lags 0..max_lag.
    static CovarianceModel fractional_gaussian_noise(double hurst, std::size_t max_lag);

    /// gamma(|lag|). Throws std::out_of_range past the end of a table.
    double operator()(long long lag) const;

    const Kind& kind() const noexcept { return kind_; }
    /// Memory parameter d of a PowerLaw model.
    std::optional<double> memory_parameter() const noexcept;
    /// Largest lag a Tabulated model can answer; empty for closed-form kinds.
    std::optional<std::size_t> max_lag() const noexcept;
    std::string describe() const;

private:
    explicit CovarianceModel(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

double autocovariance(const CovarianceModel& model, long long lag);

/// Eigenvalues of the size-M circulant whose first row is
/// gamma(min(k, M - k)), k = 0..M-1. Negative values are returned as is.
std::vector<double> spectral_density_grid(const CovarianceModel& model, std::size_t M);

/// Var(X_1 + ... + X_N) = sum_{|h|<N} (N - |h|) gamma(h)^power, with power = 1
/// giving the variance of the plain sum.
double lag_weighted_sum(const CovarianceModel& model, std::size_t N, int power = 1);

struct GaussianPath {
    std::vector<double> values;
    CovarianceModel model;
    std::uint64_t seed;
};

/// Exact stationary Gaussian sampler by circulant embedding (Davies-Harte).
///
/// The embedding length starts at the smallest power of two covering
/// 2(N - 1). Negative eigenvalues no larger than 1e-10 of the largest are
/// clipped to zero; otherwise the embedding is doubled, at most three times,
/// before a NumericalError is raised.
class CirculantSampler {
public:
    static constexpr double kClipTolerance = 1e-10;
    static constexpr int kMaxDoublings = 3;

    CirculantSampler(CovarianceModel model, std::size_t N);

    GaussianPath sample(std::uint64_t seed) const;
    /// Fills `out` (size N) with one path driven by the stream `seed`.
    void sample_into(std::uint64_t seed, std::span<double> out) const;

    std::size_t length() const noexcept { return n_; }
    std::size_t embedding_size() const noexcept { return m_; }
    const CovarianceModel& model() const noexcept { return model_; }
    /// Embedding eigenvalues after clipping.
    std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
    std::size_t clipped_count() const noexcept { return clipped_; }

private:
    CovarianceModel model_;
    std::size_t n_;
    std::size_t m_ = 1;
    std::size_t clipped_ = 0;
    std::vector<double> eigenvalues_;
    std::vector<double> scale_;
};

GaussianPath sample_path(const CovarianceModel& model, std::size_t N, std::uint64_t seed);

}  // namespace lrdlab
