#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lrdlab/covariance.hpp"
#include "lrdlab/hermite.hpp"

namespace lrdlab {

enum class Regime { SRD, Boundary, LRD };

std::string_view to_string(Regime regime) noexcept;

/// (1/2)(1 - 1/k): a rank-k component is LRD above this memory parameter.
double lrd_threshold(int k);

/// Regime of a rank-k functional of a PowerLaw(d) series. Throws
/// std::domain_error unless 0 < d < 1/2 and k >= 1.
Regime classify(double d, int k);

/// Regime of a rank-k functional under an arbitrary model. Geometric and
/// tabulated models have summable covariances and are always SRD.
Regime classify(const CovarianceModel& model, int k);

/// d_G = (d - 1/2) k + 1/2.
double memory_of_functional(double d, int k);

/// Self-similarity index k (d - 1/2) + 1 of the rank-k Hermite limit.
double hermite_hurst(double d, int k);

/// sum_{n in Z} gamma(n)^m together with a bound on the neglected tail.
struct LagSum {
    double value = 0.0;
    double tail_bound = 0.0;
    /// Largest lag summed directly.
    std::size_t lags = 0;
};

/// sum_{n in Z} gamma(n)^m. Without max_lag the sum is taken to infinity:
/// closed form for Geometric, direct sum plus an Euler-Maclaurin tail for
/// PowerLaw, all table entries for Tabulated. With max_lag only |n| <= max_lag
/// is summed and tail_bound estimates the remainder. Throws
/// std::domain_error("component is not SRD") when the series diverges.
LagSum lag_power_sum(const CovarianceModel& model, int m, std::optional<std::size_t> max_lag = {});

/// One coordinate G_j of the partial-sum vector.
struct ComponentSpec {
    ComponentSpec(HermiteExpansion expansion, std::string label,
                  std::function<double(double)> direct = {});

    HermiteExpansion expansion;
    std::string label;
    /// Optional pointwise evaluation of the (uncentered) function.
    std::function<double(double)> direct;

    int rank() const { return expansion.rank(); }
};

/// sigma^2 = sum_{m >= rank} g_m^2 m! sum_n gamma(n)^m, with the summed tail
/// bounds of the lag sums.
LagSum sigma_sq(const HermiteExpansion& expansion, const CovarianceModel& model,
                std::optional<std::size_t> max_lag = {});

/// (t1 ^ t2) (sigma_1 sigma_2)^{-1} sum_{m >= k1 v k2} g_{m,1} g_{m,2} m! sum_n gamma(n)^m.
double limit_cov_srd(const ComponentSpec& c1, const ComponentSpec& c2, const CovarianceModel& model,
                     double t1, double t2);

/// Var(sum_{n=1}^N G(X_n)) = sum_m g_m^2 m! sum_{|h|<N} (N - |h|) gamma(h)^m.
/// Tabulated models are taken to vanish beyond their last lag.
double exact_variance(const HermiteExpansion& expansion, const CovarianceModel& model, std::size_t N);

/// A(N): sigma sqrt(N) for SRD, the exact standard deviation otherwise.
double normalization(const HermiteExpansion& expansion, const CovarianceModel& model, Regime regime,
                     std::size_t N);

/// b_{k,d}; std::domain_error when d is not above the LRD threshold.
double b_const(int k, double d);

/// S_N = N^{-1} sum_{n1 <= [N t1]} sum_{n2 <= [N t2]} gamma(n1 - n2)^m in O(N).
double cov_limit_lemma(const CovarianceModel& model, int m, double t1, double t2, std::size_t N);

/// [N t], robust to t values that are exact multiples of 1/N.
std::size_t steps_for(std::size_t N, double t);

struct ComponentLimit {
    std::string label;
    int rank = 0;
    Regime regime = Regime::SRD;
    /// SRD only.
    std::optional<double> sigma;
    /// PowerLaw models: d_G from the rank, and the self-similarity index of
    /// the limit (1/2 unless LRD).
    std::optional<double> d_g;
    std::optional<double> hurst;
    /// LRD only.
    std::optional<double> b;
    /// A(N) grows like N^exponent, times (ln N)^{1/2} on the boundary.
    double growth_exponent = 0.5;
    bool log_correction = false;
};

/// Per-component classification, normalizations and the SRD-block limit
/// covariance.
class LimitModel {
public:
    LimitModel(std::vector<ComponentSpec> specs, CovarianceModel model);

    const std::vector<ComponentSpec>& specs() const noexcept { return specs_; }
    const std::vector<ComponentLimit>& components() const noexcept { return components_; }
    const CovarianceModel& model() const noexcept { return model_; }
    std::size_t size() const noexcept { return specs_.size(); }

    double normalization(std::size_t j, std::size_t N) const;
    std::vector<double> normalizations(std::size_t N) const;

    std::vector<std::size_t> indices(Regime regime) const;
    /// Limit Cov(V_i(t1), V_j(t2)) between two SRD components.
    double srd_covariance(std::size_t i, std::size_t j, double t1, double t2) const;
    /// Matrix over the SRD components at (t1, t2).
    Eigen::MatrixXd srd_covariance_matrix(double t1, double t2) const;
    /// Joint covariance of (V_j(t_a)) over SRD components j and grid times,
    /// ordered time-major.
    Eigen::MatrixXd srd_covariance_grid(const std::vector<double>& t_grid) const;
    /// Smallest eigenvalue of srd_covariance_grid.
    double srd_min_eigenvalue(const std::vector<double>& t_grid) const;

private:
    std::vector<ComponentSpec> specs_;
    CovarianceModel model_;
    std::vector<ComponentLimit> components_;
    std::vector<std::size_t> srd_;
    /// Correlation of the SRD limit Brownian motions, indexed like srd_.
    Eigen::MatrixXd srd_corr_;
};

}  // namespace lrdlab
