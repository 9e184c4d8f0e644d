#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lrdlab/covariance.hpp"
#include "lrdlab/scaling.hpp"

namespace lrdlab {

/// How G_j(X_n) is evaluated.
enum class Evaluation {
    /// Truncated Hermite expansion (default).
    Expansion,
    /// The component's direct function, centered by the expansion mean.
    Direct,
};

/// V_N(t) on a time grid: values[j * t_grid.size() + a] = V_{N,j}(t_a).
struct PartialSumPath {
    std::vector<double> t_grid;
    std::vector<double> values;
    std::size_t N = 0;
    std::vector<std::string> labels;
    std::vector<double> normalization;

    std::size_t components() const noexcept { return labels.size(); }
    double operator()(std::size_t j, std::size_t a) const { return values[j * t_grid.size() + a]; }
};

/// Checks a time grid: nonempty, strictly increasing, within (0, 1], and
/// [N t_min] >= 1. Throws std::invalid_argument otherwise.
void validate_time_grid(std::span<const double> t_grid, std::size_t N);

/// V_{N,j}(t) = A_j(N)^{-1} sum_{n <= [Nt]} (G_j(X_n) - E G_j(X)).
PartialSumPath build_vector(std::span<const double> path, const std::vector<ComponentSpec>& specs,
                            std::span<const double> normalization, std::span<const double> t_grid,
                            Evaluation mode = Evaluation::Expansion);

/// Same, with A_j(N) taken from the limit model.
PartialSumPath build_vector(const GaussianPath& path, const LimitModel& limit, std::span<const double> t_grid,
                            Evaluation mode = Evaluation::Expansion);

/// One row per t, one column per component, header "t,<labels...>".
void write_csv(const PartialSumPath& path, std::ostream& os);

}  // namespace lrdlab
