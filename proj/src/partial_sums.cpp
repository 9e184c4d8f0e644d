#include "lrdlab/partial_sums.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "format.hpp"

namespace lrdlab {

void validate_time_grid(std::span<const double> t_grid, std::size_t N) {
    if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
    for (std::size_t a = 0; a < t_grid.size(); ++a) {
        const double t = t_grid[a];
        if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("time grid values must lie in (0, 1]");
        if (a > 0 && !(t > t_grid[a - 1])) throw std::invalid_argument("time grid must be strictly increasing");
    }
    if (steps_for(N, t_grid.front()) < 1) {
        throw std::invalid_argument("N=" + std::to_string(N) + " is too small for t=" + detail::format_double(t_grid.front()));
    }
}

PartialSumPath build_vector(std::span<const double> path, const std::vector<ComponentSpec>& specs,
                            std::span<const double> normalization, std::span<const double> t_grid, Evaluation mode) {
    const std::size_t N = path.size();
    validate_time_grid(t_grid, N);
    if (specs.empty()) throw std::invalid_argument("no components given");
    if (normalization.size() != specs.size()) throw std::invalid_argument("one normalization per component is required");

    PartialSumPath out;
    out.t_grid.assign(t_grid.begin(), t_grid.end());
    out.N = N;
    out.normalization.assign(normalization.begin(), normalization.end());
    out.values.assign(specs.size() * t_grid.size(), 0.0);

    std::vector<std::size_t> stops(t_grid.size());
    for (std::size_t a = 0; a < t_grid.size(); ++a) stops[a] = steps_for(N, t_grid[a]);

    for (std::size_t j = 0; j < specs.size(); ++j) {
        const ComponentSpec& spec = specs[j];
        out.labels.push_back(spec.label);
        if (mode == Evaluation::Direct && !spec.direct) {
            throw std::invalid_argument("component '" + spec.label + "' has no direct function");
        }
        const HermiteExpansion& e = spec.expansion;
        // Centered expansions already evaluate G - E G.
        const double shift = mode == Evaluation::Direct ? e.mean() : (e.centered() ? 0.0 : e.mean());
        const double inv = 1.0 / normalization[j];
        long double running = 0.0L;
        std::size_t n = 0;
        for (std::size_t a = 0; a < t_grid.size(); ++a) {
            for (; n < stops[a]; ++n) {
                const double x = path[n];
                const double value = mode == Evaluation::Direct ? spec.direct(x) : e(x);
                running += value - shift;
            }
            out.values[j * t_grid.size() + a] = static_cast<double>(running) * inv;
        }
    }
    return out;
}

PartialSumPath build_vector(const GaussianPath& path, const LimitModel& limit, std::span<const double> t_grid,
                            Evaluation mode) {
    const auto norms = limit.normalizations(path.values.size());
    return build_vector(path.values, limit.specs(), norms, t_grid, mode);
}

void write_csv(const PartialSumPath& path, std::ostream& os) {
    os << "t";
    for (const auto& label : path.labels) os << ',' << detail::csv_field(label);
    os << '\n';
    for (std::size_t a = 0; a < path.t_grid.size(); ++a) {
        os << detail::format_double(path.t_grid[a]);
        for (std::size_t j = 0; j < path.components(); ++j) os << ',' << detail::format_double(path(j, a));
        os << '\n';
    }
}

}  // namespace lrdlab
