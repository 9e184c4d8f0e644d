#include "lrdlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "lrdlab/rng.hpp"

namespace lrdlab {

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

double ks_p_value(double D, double ne) {
    const double root = std::sqrt(ne);
    return kolmogorov_sf((root + 0.12 + 0.11 / root) * D);
}

}  // namespace

KsResult ks_test_normal(std::span<const double> x, double mean, double sd) {
    if (x.size() < 2) throw std::invalid_argument("KS test needs at least 2 observations");
    if (!(sd > 0.0)) throw std::invalid_argument("reference standard deviation must be positive");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double D = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double F = normal_cdf((s[i] - mean) / sd);
        D = std::max({D, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return {D, ks_p_value(D, n)};
}

KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("KS test needs at least 2 observations per sample");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double D = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        D = std::max(D, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {D, ks_p_value(D, n * m / (n + m))};
}

Moments sample_moments(std::span<const double> x) {
    Moments out;
    out.n = x.size();
    if (x.empty()) return out;
    const double n = static_cast<double>(x.size());
    long double s = 0.0L;
    for (double v : x) s += v;
    out.mean = static_cast<double>(s / n);
    long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
    for (double v : x) {
        const long double c = v - out.mean;
        const long double c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    if (x.size() > 1) out.variance = static_cast<double>(m2 / (n - 1.0));
    const double M2 = static_cast<double>(m2 / n);
    if (M2 > 0.0) {
        out.skewness = static_cast<double>(m3 / n) / std::pow(M2, 1.5);
        out.excess_kurtosis = static_cast<double>(m4 / n) / (M2 * M2) - 3.0;
    }
    return out;
}

double bootstrap_se(std::size_t n, const std::function<double(std::span<const std::size_t>)>& stat,
                    std::size_t resamples, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("bootstrap needs at least 2 observations");
    if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
    NormalStream rng(seed);
    std::vector<std::size_t> idx(n);
    long double s = 0.0L, s2 = 0.0L;
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& i : idx) i = rng.below(n);
        const double v = stat(idx);
        s += v;
        s2 += static_cast<long double>(v) * v;
    }
    const double B = static_cast<double>(resamples);
    return std::sqrt(std::max(0.0, static_cast<double>((s2 - s * s / B) / (B - 1.0))));
}

namespace {

// Double-centered Euclidean distance matrix of the rows of x.
Eigen::MatrixXd centered_distances(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd D(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        D(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (x.row(i) - x.row(j)).norm();
    }
    const Eigen::VectorXd row_mean = D.rowwise().mean();
    const double grand = row_mean.mean();
    D.colwise() -= row_mean;
    D.rowwise() -= row_mean.transpose();
    D.array() += grand;
    return D;
}

double dcor_from(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double vx, double vy) {
    if (vx <= 0.0 || vy <= 0.0) return 0.0;
    const double cov = (A.array() * B.array()).mean();
    return std::sqrt(std::max(0.0, cov) / std::sqrt(vx * vy));
}

}  // namespace

double distance_correlation(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows()) throw std::invalid_argument("samples must have equal length");
    if (x.rows() < 2) throw std::invalid_argument("distance correlation needs at least 2 observations");
    const Eigen::MatrixXd A = centered_distances(x);
    const Eigen::MatrixXd B = centered_distances(y);
    return dcor_from(A, B, A.squaredNorm() / double(A.size()), B.squaredNorm() / double(B.size()));
}

PermutationResult dcor_permutation_test(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                        std::size_t permutations, std::uint64_t seed) {
    if (x.rows() != y.rows()) throw std::invalid_argument("samples must have equal length");
    if (x.rows() < 2) throw std::invalid_argument("distance correlation needs at least 2 observations");
    const Eigen::MatrixXd A = centered_distances(x);
    const Eigen::MatrixXd B = centered_distances(y);
    const double vx = A.squaredNorm() / double(A.size());
    const double vy = B.squaredNorm() / double(B.size());
    PermutationResult out;
    out.statistic = dcor_from(A, B, vx, vy);
    out.permutations = permutations;

    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    NormalStream rng(seed);
    Eigen::MatrixXd Bp(B.rows(), B.cols());
    std::size_t at_least = 0;
    for (std::size_t p = 0; p < permutations; ++p) {
        for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                Bp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = B(perm[i], perm[j]);
            }
        }
        if (dcor_from(A, Bp, vx, vy) >= out.statistic) ++at_least;
    }
    out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
    return out;
}

}  // namespace lrdlab
