#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Core>

namespace lrdlab {

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Kolmogorov distribution survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_sf(double lambda);

double normal_cdf(double x);

/// One-sample KS test against N(mean, sd^2), asymptotic p-value with the
/// Stephens small-sample correction.
KsResult ks_test_normal(std::span<const double> x, double mean = 0.0, double sd = 1.0);

/// Two-sample KS test.
KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b);

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    /// Unbiased.
    double variance = 0.0;
    /// m3 / m2^{3/2} with central sample moments.
    double skewness = 0.0;
    /// m4 / m2^2 - 3.
    double excess_kurtosis = 0.0;
};

Moments sample_moments(std::span<const double> x);

/// Bootstrap standard error of stat over resamples of {0..n-1}.
double bootstrap_se(std::size_t n, const std::function<double(std::span<const std::size_t>)>& stat,
                    std::size_t resamples, std::uint64_t seed);

/// Sample distance correlation between the rows of x and y (same row count).
double distance_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

struct PermutationResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t permutations = 0;
};

/// Distance-correlation permutation test of independence; p = (1 + #{perm >= obs}) / (1 + permutations).
PermutationResult dcor_permutation_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                        std::size_t permutations, std::uint64_t seed);

}  // namespace lrdlab
