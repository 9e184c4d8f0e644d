#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace lrdlab {

/// Probabilists' Hermite polynomial H_m(x), by H_{m+1} = x H_m - m H_{m-1}.
double hermite_poly(int m, double x);

/// Writes H_0(x)..H_{out.size()-1}(x).
void hermite_values(double x, std::span<double> out);

/// Gauss-Hermite rule for the standard normal law: sum_i w_i f(x_i) ~ E f(X).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Cached n-point rule (Golub-Welsch). Thread-safe.
const GaussHermiteRule& gauss_hermite_rule(std::size_t n);

/// Hermite coefficients g_0..g_M of a function of a standard Gaussian.
///
/// For a centered expansion g_0 is zero and the original mean E G(X) is kept
/// in mean(). Coefficients below the rank are snapped to zero.
class HermiteExpansion {
public:
    static constexpr double kRankTolerance = 1e-6;

    /// From g_0..g_M. When centered, g_0 is recorded as the mean and zeroed.
    static HermiteExpansion from_coefficients(std::vector<double> g, bool centered = true);
    /// scale * H_m.
    static HermiteExpansion hermite(int m, double scale = 1.0);
    /// Exact Hermite expansion of the polynomial c_0 + c_1 x + ... + c_M x^M.
    static HermiteExpansion from_monomials(std::span<const double> c, bool centered = true);

    std::span<const double> coefficients() const noexcept { return g_; }
    double coefficient(int m) const noexcept;
    int truncation() const noexcept { return static_cast<int>(g_.size()) - 1; }
    bool centered() const noexcept { return centered_; }
    double mean() const noexcept { return mean_; }
    /// sum_{m>=1} m! g_m^2, the variance of G(X).
    double l2_norm_sq() const noexcept { return norm_sq_; }
    /// Hermite rank; throws std::domain_error for the zero function.
    int rank() const;
    bool is_zero() const noexcept { return !rank_.has_value(); }

    /// sum_m g_m H_m(x) (centered value when centered()).
    double operator()(double x) const;
    /// Multiplies all coefficients and the mean by `factor`.
    HermiteExpansion scaled(double factor) const;

private:
    HermiteExpansion(std::vector<double> g, double mean, bool centered);

    std::vector<double> g_;
    double mean_ = 0.0;
    bool centered_ = true;
    double norm_sq_ = 0.0;
    std::optional<int> rank_;
};

/// Gauss-Hermite coefficients of G up to order M with 200 nodes, checked
/// against 400 nodes. When they disagree by more than
/// kCoefficientTolerance * max(1, |g_m|), composite Gauss-Legendre panels with
/// edges on the half-integers are tried (24 against 48 nodes per panel), which
/// handles kinks and jumps at those points; otherwise NumericalError.
inline constexpr double kCoefficientTolerance = 1e-8;
HermiteExpansion expand(const std::function<double(double)>& G, int M, bool centered = true);

/// Smallest m >= 1 with |g_m| > 1e-6 * sqrt(l2_norm_sq). Requires a centered
/// expansion; throws std::domain_error("zero function") when none qualifies.
int hermite_rank(const HermiteExpansion& expansion);

struct TightnessReport {
    bool convergent = true;
    /// Partial sums of 3^{k/2} (k!)^{1/2} |g_k|, k = 1..M.
    std::vector<double> partial_sums;
    /// Largest ratio of consecutive nonzero terms over the tail half; 0 when
    /// the series terminates.
    double tail_ratio = 0.0;
};

/// Checks the weak-convergence tightness series sum_k 3^{k/2}(k!)^{1/2}|g_k|.
/// A terminating series is convergent; otherwise a ratio test over the
/// upper half of the available nonzero terms decides.
TightnessReport tightness_condition(const HermiteExpansion& expansion);

}  // namespace lrdlab
