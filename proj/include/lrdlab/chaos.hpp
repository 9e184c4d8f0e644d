#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lrdlab/covariance.hpp"

namespace lrdlab {

/// Dense kernel of order p on a finite grid with positive weights (a discrete
/// control measure). Entry (i_1, ..., i_p) lives at sum_j i_j n^{p-1-j}.
class ChaosKernel {
public:
    ChaosKernel(int order, std::vector<double> weights, std::vector<double> values, bool symmetric = false);
    static ChaosKernel zeros(int order, std::vector<double> weights);
    /// Order-1 kernel with the given values.
    static ChaosKernel vector(std::vector<double> weights, std::vector<double> values);

    int order() const noexcept { return order_; }
    std::size_t grid_size() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    /// Optional labels of the grid points (frequencies, cell nodes).
    const std::vector<double>& points() const noexcept { return points_; }
    void set_points(std::vector<double> points);

    double operator()(std::initializer_list<std::size_t> idx) const;
    double& operator()(std::initializer_list<std::size_t> idx);
    double at(std::span<const std::size_t> idx) const;

    bool symmetric() const noexcept { return symmetric_; }
    void mark_symmetric(bool flag) noexcept { symmetric_ = flag; }
    /// Checks invariance under `trials` random coordinate permutations at
    /// random entries.
    bool spot_check_symmetry(std::uint64_t seed, std::size_t trials = 64, double tol = 1e-12) const;

    /// Weighted squared L2 norm sum |f|^2 prod w.
    double norm_sq() const;
    double norm() const;
    bool is_zero() const noexcept;

private:
    std::size_t offset(std::span<const std::size_t> idx) const;

    int order_;
    std::vector<double> weights_;
    std::vector<double> values_;
    std::vector<double> points_;
    bool symmetric_;
};

/// Weighted inner product of two kernels of the same order.
double inner(const ChaosKernel& f, const ChaosKernel& g);

/// (f (x)_r g)(x_1..x_{p-r}, y_1..y_{q-r}) = sum_u f(x, u) g(y, u) prod w_u,
/// contracting the last r coordinates of each kernel. r = 0 is the tensor
/// product and r = p = q the inner product (an order-0 kernel).
ChaosKernel contract(const ChaosKernel& f, const ChaosKernel& g, int r);

/// Average over all coordinate permutations; order at most 6.
ChaosKernel symmetrize(const ChaosKernel& f);

/// Discrete multiple integral of f against iid standard normals xi:
/// sum over all index tuples of f(i) prod sqrt(w_i) times the Wick product of
/// the xi's, prod_j H_{c_j}(xi_j) with c_j the multiplicity of index j. On
/// kernels vanishing on the diagonal this is the sum over distinct indices.
double discrete_ito(const ChaosKernel& f, std::span<const double> xi);

/// Checks I_p(f) I_q(g) = sum_r r! C(p,r) C(q,r) I_{p+q-2r}(f (x)_r g) for
/// symmetric f, g by expanding both sides as polynomials in the grid
/// Gaussians. Returns the largest of |E L - E R| / s, |E L^2 - E R^2| / s^2
/// and sqrt(E (L - R)^2) / s, all exact Gaussian moments, with
/// s = max(1, sqrt(E L^2)). Needs p + q <= 6 and at most 6 grid points.
double product_formula_check(const ChaosKernel& f, const ChaosKernel& g);

/// ||f (x)_1 g||.
double independence_criterion(const ChaosKernel& f, const ChaosKernel& g);

/// E[prod_i Y_{factors[i]}] for a centered Gaussian vector Y with the given
/// covariance, by enumerating pairings. At most 8 factors.
double wick_moment(std::span<const int> factors, const Eigen::MatrixXd& cov);

/// Kernel of A(N)^{-1} sum_{n <= [Nt]} H_m(X_n) on the real Fourier basis of a
/// circulant embedding of length L = 2N. Grid points are the basis
/// frequencies (negative values label sine functions) with weights c_j
/// lambda_j / L. The default A(N) is the exact standard deviation of the
/// order-m sum at N. The dense array is limited to 2^24 entries.
ChaosKernel partial_sum_kernel(int m, std::size_t N, double t, const CovarianceModel& model,
                               double normalization = 0.0);

/// ||f_N (x)_r g_N|| for the partial-sum kernels of orders p and q, computed
/// through Gram matrices of the series (no dense kernel). Each kernel uses
/// its exact standard deviation at N.
double partial_sum_contraction_norm(int p, int q, int r, const CovarianceModel& model, std::size_t N,
                                    double t = 1.0);

struct DecayRow {
    std::size_t N = 0;
    int r = 0;
    double norm = 0.0;
};

/// ||f_N (x)_r g_N|| for every N and r, kernels given explicitly.
std::vector<DecayRow> asymptotic_independence_decay(const std::vector<std::size_t>& Ns,
                                                    const std::vector<ChaosKernel>& f_series,
                                                    const std::vector<ChaosKernel>& g_series,
                                                    const std::vector<int>& rs);

/// Same for partial-sum kernels of orders p and q (Gram route). Rows are
/// ordered by N, then r, regardless of `threads`.
std::vector<DecayRow> asymptotic_independence_decay(int p, int q, const CovarianceModel& model,
                                                    const std::vector<std::size_t>& Ns, const std::vector<int>& rs,
                                                    double t = 1.0, unsigned threads = 1);

struct DecaySummary {
    int r = 0;
    bool strictly_decreasing = false;
    double first = 0.0;
    double last = 0.0;
    /// last / first (0 when first is 0).
    double ratio = 0.0;
};

/// Per-r summaries in increasing r.
std::vector<DecaySummary> summarize_decay(const std::vector<DecayRow>& rows);

}  // namespace lrdlab
