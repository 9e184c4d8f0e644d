#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lrdlab/chaos.hpp"
#include "lrdlab/covariance.hpp"

namespace lrdlab {

enum class Representation {
    TimeDomain,
    FiniteInterval,
    PositiveHalfAxis,
    /// Normalized partial sums of H_k(X_n) at a large N.
    PartialSumLimit,
    /// k = 1 only: fractional Gaussian noise on a lattice, summed exactly.
    ExactFgn,
};

std::string_view to_string(Representation r) noexcept;
/// Accepts the names printed by to_string and their snake_case forms.
Representation representation_from_string(std::string_view name);
/// True for the representations simulated as discretized multiple integrals.
bool is_chaos_representation(Representation r) noexcept;

/// Covariance of fractional Brownian motion, (s^{2H} + t^{2H} - |t - s|^{2H}) / 2.
double fbm_cov(double H, double s, double t);

struct HermiteProcessSpec {
    int k = 1;
    /// H0 in (1 - 1/(2k), 1); the memory parameter is d = H0 - 1/2.
    double h0 = 0.9;
    Representation representation = Representation::FiniteInterval;
    /// Number of x-cells for the chaos representations.
    std::size_t resolution = 128;
    /// Series length for PartialSumLimit.
    std::size_t partial_sum_length = std::size_t{1} << 14;

    double d() const noexcept { return h0 - 0.5; }
    /// Self-similarity index k (H0 - 1) + 1.
    double hurst() const noexcept { return k * (h0 - 1.0) + 1.0; }
};

/// Throws std::domain_error for H0 out of range and std::invalid_argument for
/// k > 3 with a chaos representation, or ExactFgn with k != 1.
void validate(const HermiteProcessSpec& spec);

/// Cells of the x-axis shared by every kernel of one simulation.
struct KernelGrid {
    Representation representation = Representation::FiniteInterval;
    double d = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;
    /// Representative point of each cell.
    std::vector<double> nodes;
    /// Lebesgue measure of each cell (an equivalent finite mass for the
    /// unbounded end cell).
    std::vector<double> weights;
    /// Root mean square of x^{-d} over the cell; 1 for TimeDomain.
    std::vector<double> power_factor;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Builds the cell grid of a chaos representation with about `cells` cells.
/// Every time in t_grid (and t = 1) is a cell edge where the representation
/// needs it.
KernelGrid make_kernel_grid(Representation r, double d, std::size_t cells, std::span<const double> t_grid);

/// Kernel of the order-k multiple integral at one time, restricted to cell
/// tuples with distinct indices (the diagonal is excluded).
///
/// Tuples are stored sorted; amplitude = f(tuple) prod sqrt(w), so that
/// Z = k! sum_tuples amplitude prod xi.
class DiscretizedKernel {
public:
    DiscretizedKernel(std::shared_ptr<const KernelGrid> grid, int k, double t);

    int order() const noexcept { return k_; }
    double time() const noexcept { return t_; }
    const KernelGrid& grid() const noexcept { return *grid_; }
    std::size_t tuples() const noexcept { return amplitude_.size(); }
    std::span<const std::uint32_t> tuple(std::size_t i) const;
    double amplitude(std::size_t i) const { return amplitude_[i]; }
    /// f at the tuple (the amplitude divided by prod sqrt(w)).
    double value(std::size_t i) const;

    /// Multiplies the kernel by `factor`.
    void scale(double factor);
    /// k! sum amplitude prod xi for one draw of the cell Gaussians.
    double evaluate(std::span<const double> xi) const;
    /// (k!)^2 sum amplitude^2.
    double variance() const;
    /// Exact E[Z Z'] for two kernels of the same order on the same grid.
    double covariance(const DiscretizedKernel& other) const;

    /// Dense symmetric form on the cell grid with zero diagonal.
    ChaosKernel to_chaos() const;
    /// CSV dump: i1..ik, x1..xk, value.
    void write_csv(std::ostream& os) const;

private:
    std::shared_ptr<const KernelGrid> grid_;
    int k_;
    double t_;
    std::vector<std::uint32_t> index_;
    std::vector<double> amplitude_;
};

/// Samples Z(t) on a fixed time grid. Construction discretizes the kernels
/// once; sampling is reentrant.
class HermiteProcessSimulator {
public:
    HermiteProcessSimulator(HermiteProcessSpec spec, std::vector<double> t_grid);
    ~HermiteProcessSimulator();
    HermiteProcessSimulator(HermiteProcessSimulator&&) noexcept;
    HermiteProcessSimulator& operator=(HermiteProcessSimulator&&) noexcept;

    const HermiteProcessSpec& spec() const noexcept { return spec_; }
    const std::vector<double>& t_grid() const noexcept { return t_grid_; }

    /// One path Z(t_a), a = 0..T-1.
    std::vector<double> sample(std::uint64_t seed) const;
    void sample_into(std::uint64_t seed, std::span<double> out) const;
    /// R paths from derive_seed(master, r), row-major R x T. The result does
    /// not depend on `threads`.
    std::vector<double> sample_many(std::size_t R, std::uint64_t master, unsigned threads = 1) const;

    /// Discretized kernels (chaos representations only).
    const std::vector<DiscretizedKernel>& kernels() const;
    /// Exact covariance of the simulated values at grid times a, b, when
    /// available (chaos representations, ExactFgn).
    std::optional<double> exact_covariance(std::size_t a, std::size_t b) const;

private:
    struct Impl;
    HermiteProcessSpec spec_;
    std::vector<double> t_grid_;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> simulate(const HermiteProcessSpec& spec, std::span<const double> t_grid, std::uint64_t seed);

/// Hermite processes of several orders driven by one array of cell
/// Gaussians on a common grid.
class JointHermiteSimulator {
public:
    JointHermiteSimulator(std::vector<int> orders, double d, std::vector<double> t_grid,
                          Representation representation = Representation::FiniteInterval,
                          std::size_t resolution = 128);

    const std::vector<int>& orders() const noexcept { return orders_; }
    const std::vector<double>& t_grid() const noexcept { return t_grid_; }
    const KernelGrid& grid() const noexcept { return *grid_; }
    /// Kernels of component j, one per grid time.
    const std::vector<DiscretizedKernel>& kernels(std::size_t j) const { return kernels_.at(j); }

    /// values[j * T + a] = Z^{(k_j)}(t_a).
    std::vector<double> sample(std::uint64_t seed) const;
    /// R draws, row-major R x (J T).
    std::vector<double> sample_many(std::size_t R, std::uint64_t master, unsigned threads = 1) const;

private:
    std::vector<int> orders_;
    double d_;
    std::vector<double> t_grid_;
    std::shared_ptr<const KernelGrid> grid_;
    std::vector<std::vector<DiscretizedKernel>> kernels_;
};

std::vector<double> joint_simulate(const std::vector<int>& orders, double d, std::span<const double> t_grid,
                                   std::uint64_t seed, Representation representation = Representation::FiniteInterval,
                                   std::size_t resolution = 128);

/// Exact Corr(Z1^2, Z2) for a first-order kernel f and second-order kernel g
/// on the same grid, both of unit variance: sqrt(2) * sum_{i != j} a_i B_ij a_j.
double square_cross_correlation(const DiscretizedKernel& first, const DiscretizedKernel& second);

/// Exact skewness of a discretized second-order integral,
/// 8 tr(B^3) / (2 tr(B^2))^{3/2}.
double second_order_skewness(const DiscretizedKernel& kernel);
/// Exact excess kurtosis of a discretized second-order integral,
/// 48 tr(B^4) / (2 tr(B^2))^2.
double second_order_excess_kurtosis(const DiscretizedKernel& kernel);

/// Minimum over grid points of the discretized first contraction of the
/// positive half-axis kernels g_{p,d} and g_{q,d} at t = 1.
double contraction_positivity(int p, int q, double d, const KernelGrid& grid);
/// Same on a positive half-axis grid with `cells` cells. Throws
/// std::invalid_argument for an empty grid.
double contraction_positivity(int p, int q, double d, std::size_t cells = 48);

struct EquivalenceReport {
    Eigen::MatrixXd cov_a;
    Eigen::MatrixXd cov_b;
    /// Largest |cov_a - cov_b| over time pairs, and the Monte Carlo SE of
    /// that entry's difference.
    double max_abs_discrepancy = 0.0;
    double se_at_max = 0.0;
    /// Largest |difference| / SE over time pairs.
    double max_z = 0.0;
    /// Variance at t = 1 (or the last grid time) with its SE.
    double variance_a = 0.0;
    double variance_b = 0.0;
    double variance_se_a = 0.0;
    double variance_se_b = 0.0;
    /// SE of the variance estimate computed from the exact fourth moment of
    /// the simulated law (k <= 2 chaos representations and ExactFgn); NaN
    /// when unavailable.
    double variance_exact_se_a = 0.0;
    double variance_exact_se_b = 0.0;
    /// Third moments at the same time (reported for every k).
    double third_moment_a = 0.0;
    double third_moment_b = 0.0;
    double third_moment_se = 0.0;
    std::size_t replications = 0;
};

EquivalenceReport representation_equivalence(int k, Representation a, Representation b, double h0,
                                             std::span<const double> t_grid, std::size_t R, std::uint64_t seed,
                                             std::size_t resolution = 128, unsigned threads = 1);

}  // namespace lrdlab
