#include "lrdlab/hermite_process.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "format.hpp"
#include "lrdlab/errors.hpp"
#include "lrdlab/hermite.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/scaling.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace lrdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr std::array<double, 4> kGlNodes = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                            0.9602898564975363};
constexpr std::array<double, 4> kGlWeights = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};
constexpr int kPanels = 10;

template <class F>
double gauss_legendre(double a, double b, F&& f) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
        s += kGlWeights[i] * (f(mid - half * kGlNodes[i]) + f(mid + half * kGlNodes[i]));
    }
    return s * half;
}

// int_lo^hi |s - s_star|^{d - 1} phi(s) ds with s_star outside (lo, hi).
// With sigma = |s - s_star| and tau = sigma^d the weight disappears:
// sigma^{d-1} dsigma = dtau / d. Panels are graded toward the end nearest
// s_star, where phi may still vary quickly.
template <class Phi>
double singular_integral(double lo, double hi, double s_star, double d, Phi&& phi) {
    if (!(hi > lo)) return 0.0;
    const bool below = s_star <= lo;
    const double sa = below ? lo - s_star : s_star - hi;
    const double sb = below ? hi - s_star : s_star - lo;
    const double ta = std::pow(std::max(sa, 0.0), d);
    const double tb = std::pow(sb, d);
    const double inv_d = 1.0 / d;
    auto g = [&](double tau) {
        const double sigma = std::pow(tau, inv_d);
        return phi(below ? s_star + sigma : s_star - sigma);
    };
    double total = 0.0;
    double right = tb;
    const double span = tb - ta;
    for (int i = 1; i <= kPanels; ++i) {
        const double left = i == kPanels ? ta : ta + span * std::ldexp(1.0, -i);
        total += gauss_legendre(left, right, g);
        right = left;
    }
    return total * inv_d;
}

// Root mean square of x^{-d} over [a, b].
double rms_power(double a, double b, double d) {
    const double e = 1.0 - 2.0 * d;
    return std::sqrt((std::pow(b, e) - std::pow(a, e)) / (e * (b - a)));
}

// Replaces the base edge nearest to each required point by that point, or
// inserts it when no edge is close.
std::vector<double> place_points(std::vector<double> edges, std::vector<double> points) {
    std::sort(points.begin(), points.end());
    for (double p : points) {
        auto it = std::lower_bound(edges.begin(), edges.end(), p);
        if (it != edges.end() && *it == p) continue;
        const std::size_t hi = static_cast<std::size_t>(it - edges.begin());
        if (hi == 0 || hi == edges.size()) {
            edges.insert(it, p);
            continue;
        }
        const double a = edges[hi - 1];
        const double b = edges[hi];
        const double width = b - a;
        if (p - a < 0.25 * width && hi - 1 > 0) {
            edges[hi - 1] = p;
        } else if (b - p < 0.25 * width && hi + 1 < edges.size()) {
            edges[hi] = p;
        } else {
            edges.insert(edges.begin() + static_cast<std::ptrdiff_t>(hi), p);
        }
    }
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

void add_cell(KernelGrid& g, double lo, double hi, double node, double weight, double power) {
    g.lower.push_back(lo);
    g.upper.push_back(hi);
    g.nodes.push_back(node);
    g.weights.push_back(weight);
    g.power_factor.push_back(power);
}

// Kernel value f at cell nodes x (k of them, distinct cells) for time t.
double kernel_value(const KernelGrid& grid, std::span<const std::uint32_t> idx, double t) {
    const double d = grid.d;
    const int k = static_cast<int>(idx.size());
    std::size_t arg = 0;
    for (std::size_t j = 1; j < idx.size(); ++j) {
        if (grid.nodes[idx[j]] > grid.nodes[idx[arg]]) arg = j;
    }
    const double xmax = grid.nodes[idx[arg]];
    double factor = 1.0;
    for (auto i : idx) factor *= grid.power_factor[i];

    switch (grid.representation) {
        case Representation::FiniteInterval: {
            if (!(t > xmax)) return 0.0;
            auto phi = [&](double s) {
                double v = std::pow(s, k * d);
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    if (j != arg) v *= std::pow(s - grid.nodes[idx[j]], d - 1.0);
                }
                return v;
            };
            return factor * singular_integral(xmax, t, xmax, d, phi);
        }
        case Representation::PositiveHalfAxis: {
            const double hi = std::min(t, 1.0 / xmax);
            auto phi = [&](double s) {
                double v = std::pow(xmax, d - 1.0);
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    if (j != arg) v *= std::pow(1.0 - s * grid.nodes[idx[j]], d - 1.0);
                }
                return v;
            };
            return factor * singular_integral(0.0, hi, 1.0 / xmax, d, phi);
        }
        case Representation::TimeDomain: {
            const double lo = std::max(0.0, xmax);
            if (!(t > lo)) return 0.0;
            auto phi = [&](double s) {
                double v = 1.0;
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    if (j != arg) v *= std::pow(s - grid.nodes[idx[j]], d - 1.0);
                }
                return v;
            };
            return factor * singular_integral(lo, t, xmax, d, phi);
        }
        default:
            throw std::invalid_argument("not a chaos representation");
    }
}

void check_times(std::span<const double> t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
    for (std::size_t a = 0; a < t_grid.size(); ++a) {
        if (!(t_grid[a] > 0.0) || !std::isfinite(t_grid[a])) throw std::invalid_argument("times must be positive");
        if (a > 0 && !(t_grid[a] > t_grid[a - 1])) throw std::invalid_argument("time grid must be strictly increasing");
    }
}

std::optional<std::size_t> index_of_one(std::span<const double> t_grid) {
    for (std::size_t a = 0; a < t_grid.size(); ++a) {
        if (std::abs(t_grid[a] - 1.0) < 1e-12) return a;
    }
    return std::nullopt;
}

// Kernels at every grid time, standardized so that Var Z(1) = 1.
std::vector<DiscretizedKernel> standardized_kernels(const std::shared_ptr<const KernelGrid>& grid, int k,
                                                    std::span<const double> t_grid) {
    std::vector<DiscretizedKernel> kernels;
    kernels.reserve(t_grid.size());
    for (double t : t_grid) kernels.emplace_back(grid, k, t);
    const auto one = index_of_one(t_grid);
    const double var = one ? kernels[*one].variance() : DiscretizedKernel(grid, k, 1.0).variance();
    if (!(var > 0.0)) throw NumericalError("discretized kernel at t = 1 has zero variance");
    const double scale = 1.0 / std::sqrt(var);
    for (auto& kernel : kernels) kernel.scale(scale);
    return kernels;
}

std::size_t fgn_lattice(std::span<const double> t_grid) {
    for (std::size_t n = 1024; n <= (std::size_t{1} << 20); ++n) {
        bool ok = true;
        for (double t : t_grid) {
            const double x = t * static_cast<double>(n);
            if (std::abs(x - std::round(x)) > 1e-7) {
                ok = false;
                break;
            }
        }
        if (ok) return n;
    }
    throw std::invalid_argument("time grid has no common lattice with at most 2^20 steps per unit time");
}

}  // namespace

std::string_view to_string(Representation r) noexcept {
    switch (r) {
        case Representation::TimeDomain: return "TimeDomain";
        case Representation::FiniteInterval: return "FiniteInterval";
        case Representation::PositiveHalfAxis: return "PositiveHalfAxis";
        case Representation::PartialSumLimit: return "PartialSumLimit";
        case Representation::ExactFgn: return "ExactFgn";
    }
    return "?";
}

Representation representation_from_string(std::string_view name) {
    for (auto r : {Representation::TimeDomain, Representation::FiniteInterval, Representation::PositiveHalfAxis,
                   Representation::PartialSumLimit, Representation::ExactFgn}) {
        std::string snake;
        for (char c : to_string(r)) {
            if (std::isupper(static_cast<unsigned char>(c)) && !snake.empty()) snake += '_';
            snake += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        if (name == to_string(r) || name == snake) return r;
    }
    throw std::invalid_argument("unknown representation '" + std::string(name) + "'");
}

bool is_chaos_representation(Representation r) noexcept {
    return r == Representation::TimeDomain || r == Representation::FiniteInterval ||
           r == Representation::PositiveHalfAxis;
}

double fbm_cov(double H, double s, double t) {
    if (!(H > 0.0 && H < 1.0)) throw std::domain_error("Hurst index must lie in (0, 1)");
    if (s < 0.0 || t < 0.0) throw std::invalid_argument("times must be nonnegative");
    const double e = 2.0 * H;
    return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
}

void validate(const HermiteProcessSpec& spec) {
    if (spec.k < 1) throw std::invalid_argument("Hermite process order must be at least 1");
    const double lo = 1.0 - 1.0 / (2.0 * spec.k);
    if (!(spec.h0 > lo && spec.h0 < 1.0)) {
        throw std::domain_error("H0 must lie in (" + detail::format_double(lo) + ", 1) for k=" + std::to_string(spec.k));
    }
    if (is_chaos_representation(spec.representation)) {
        if (spec.k > 3) throw std::invalid_argument("chaos representations are limited to k <= 3");
        if (spec.resolution < 4) throw std::invalid_argument("resolution must be at least 4 cells");
    }
    if (spec.representation == Representation::ExactFgn && spec.k != 1) {
        throw std::invalid_argument("the exact fGn representation needs k = 1");
    }
    if (spec.representation == Representation::PartialSumLimit && spec.partial_sum_length < 1) {
        throw std::invalid_argument("partial-sum length must be at least 1");
    }
}

KernelGrid make_kernel_grid(Representation r, double d, std::size_t cells, std::span<const double> t_grid) {
    if (!is_chaos_representation(r)) throw std::invalid_argument("not a chaos representation");
    if (!(d > 0.0 && d < 0.5)) throw std::domain_error("memory parameter d must lie in (0, 1/2)");
    if (cells < 4) throw std::invalid_argument("kernel grid needs at least 4 cells");
    std::vector<double> times(t_grid.begin(), t_grid.end());
    check_times(times);
    times.push_back(1.0);
    const double T = *std::max_element(times.begin(), times.end());
    const double t_min = *std::min_element(times.begin(), times.end());

    KernelGrid g;
    g.representation = r;
    g.d = d;
    switch (r) {
        case Representation::FiniteInterval: {
            std::vector<double> edges(cells + 1);
            for (std::size_t i = 0; i <= cells; ++i) edges[i] = T * std::pow(double(i) / double(cells), 1.5);
            edges = place_points(std::move(edges), times);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                const double a = edges[i];
                const double b = edges[i + 1];
                add_cell(g, a, b, 0.5 * (a + b), b - a, rms_power(a, b, d));
            }
            break;
        }
        case Representation::PositiveHalfAxis: {
            const double x_min = 1e-3;
            const double x_max = 1e3 / t_min;
            const std::size_t inner = cells - 2;
            std::vector<double> edges(inner + 1);
            for (std::size_t i = 0; i <= inner; ++i) {
                edges[i] = x_min * std::pow(x_max / x_min, double(i) / double(inner));
            }
            edges.front() = x_min;
            edges.back() = x_max;
            std::vector<double> kinks;
            for (double t : times) kinks.push_back(1.0 / t);
            edges = place_points(std::move(edges), kinks);
            add_cell(g, 0.0, x_min, 0.5 * x_min, x_min, rms_power(0.0, x_min, d));
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                const double a = edges[i];
                const double b = edges[i + 1];
                add_cell(g, a, b, 0.5 * (a + b), b - a, rms_power(a, b, d));
            }
            // Beyond x_max every kernel decays like x^{-d-1} in each
            // coordinate; one cell carries that tail's L2 mass.
            add_cell(g, x_max, kInf, x_max, x_max / (2.0 * d + 1.0), std::pow(x_max, -d));
            break;
        }
        case Representation::TimeDomain: {
            const std::size_t positive = cells / 2;
            const std::size_t negative = cells - positive;
            const double x_min = 1e-3 * T;
            const double x_far = 1e4 * T;
            // Tail (-inf, -x_far] where kernels decay like |x|^{d-1}.
            add_cell(g, -kInf, -x_far, -x_far, x_far / (1.0 - 2.0 * d), 1.0);
            const std::size_t geo = negative - 2;
            for (std::size_t i = 0; i < geo; ++i) {
                const double a = -x_far * std::pow(x_min / x_far, double(i) / double(geo));
                const double b = -x_far * std::pow(x_min / x_far, double(i + 1) / double(geo));
                add_cell(g, a, b, 0.5 * (a + b), b - a, 1.0);
            }
            add_cell(g, -x_min, 0.0, -0.5 * x_min, x_min, 1.0);
            std::vector<double> edges(positive + 1);
            for (std::size_t i = 0; i <= positive; ++i) edges[i] = T * double(i) / double(positive);
            edges = place_points(std::move(edges), times);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                const double a = edges[i];
                const double b = edges[i + 1];
                add_cell(g, a, b, 0.5 * (a + b), b - a, 1.0);
            }
            break;
        }
        default:
            break;
    }
    return g;
}

DiscretizedKernel::DiscretizedKernel(std::shared_ptr<const KernelGrid> grid, int k, double t)
    : grid_(std::move(grid)), k_(k), t_(t) {
    if (!grid_ || grid_->size() == 0) throw std::invalid_argument("kernel grid is empty");
    if (k < 1 || k > 3) throw std::invalid_argument("discretized kernels support orders 1 to 3");
    if (!(t > 0.0)) throw std::invalid_argument("time must be positive");
    const KernelGrid& g = *grid_;
    const bool bounded = g.representation != Representation::PositiveHalfAxis;
    std::vector<std::uint32_t> eligible;
    for (std::uint32_t i = 0; i < g.size(); ++i) {
        if (!bounded || g.upper[i] <= t * (1.0 + 1e-12)) eligible.push_back(i);
    }
    const std::size_t n = eligible.size();
    std::array<std::uint32_t, 3> idx{};
    auto emit = [&](std::span<const std::uint32_t> tuple) {
        const double v = kernel_value(g, tuple, t);
        if (v == 0.0) return;
        double amp = v;
        for (auto i : tuple) amp *= std::sqrt(g.weights[i]);
        index_.insert(index_.end(), tuple.begin(), tuple.end());
        amplitude_.push_back(amp);
    };
    for (std::size_t a = 0; a < n; ++a) {
        idx[0] = eligible[a];
        if (k == 1) {
            emit(std::span<const std::uint32_t>(idx.data(), 1));
            continue;
        }
        for (std::size_t b = a + 1; b < n; ++b) {
            idx[1] = eligible[b];
            if (k == 2) {
                emit(std::span<const std::uint32_t>(idx.data(), 2));
                continue;
            }
            for (std::size_t c = b + 1; c < n; ++c) {
                idx[2] = eligible[c];
                emit(std::span<const std::uint32_t>(idx.data(), 3));
            }
        }
    }
}

std::span<const std::uint32_t> DiscretizedKernel::tuple(std::size_t i) const {
    return std::span<const std::uint32_t>(index_.data() + i * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_));
}

double DiscretizedKernel::value(std::size_t i) const {
    double w = 1.0;
    for (auto c : tuple(i)) w *= grid_->weights[c];
    return amplitude_[i] / std::sqrt(w);
}

void DiscretizedKernel::scale(double factor) {
    for (double& a : amplitude_) a *= factor;
}

double DiscretizedKernel::evaluate(std::span<const double> xi) const {
    if (xi.size() != grid_->size()) throw std::invalid_argument("Gaussian array does not match the kernel grid");
    double total = 0.0;
    const auto k = static_cast<std::size_t>(k_);
    const std::uint32_t* ix = index_.data();
    for (std::size_t i = 0; i < amplitude_.size(); ++i, ix += k) {
        double term = amplitude_[i];
        for (std::size_t j = 0; j < k; ++j) term *= xi[ix[j]];
        total += term;
    }
    return factorial(k_) * total;
}

double DiscretizedKernel::variance() const {
    long double s = 0.0L;
    for (double a : amplitude_) s += static_cast<long double>(a) * a;
    const double f = factorial(k_);
    return f * f * static_cast<double>(s);
}

double DiscretizedKernel::covariance(const DiscretizedKernel& other) const {
    if (other.k_ != k_) return 0.0;
    if (other.grid_ != grid_ && other.grid_->nodes != grid_->nodes) {
        throw std::invalid_argument("kernels live on different grids");
    }
    // Both tuple lists are in lexicographic order.
    const auto k = static_cast<std::size_t>(k_);
    long double s = 0.0L;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < amplitude_.size() && j < other.amplitude_.size()) {
        const auto a = tuple(i);
        const auto b = other.tuple(j);
        const int cmp = std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end())   ? -1
                        : std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()) ? 1
                                                                                               : 0;
        if (cmp == 0) {
            s += static_cast<long double>(amplitude_[i]) * other.amplitude_[j];
            ++i;
            ++j;
        } else if (cmp < 0) {
            ++i;
        } else {
            ++j;
        }
    }
    (void)k;
    const double f = factorial(k_);
    return f * f * static_cast<double>(s);
}

ChaosKernel DiscretizedKernel::to_chaos() const {
    const std::size_t n = grid_->size();
    ChaosKernel out = ChaosKernel::zeros(k_, grid_->weights);
    out.set_points(grid_->nodes);
    auto vals = out.values();
    for (std::size_t i = 0; i < amplitude_.size(); ++i) {
        const auto t = tuple(i);
        std::array<std::uint32_t, 3> p{};
        std::copy(t.begin(), t.end(), p.begin());
        const double v = value(i);
        std::sort(p.begin(), p.begin() + k_);
        do {
            std::size_t off = 0;
            for (int j = 0; j < k_; ++j) off = off * n + p[static_cast<std::size_t>(j)];
            vals[off] = v;
        } while (std::next_permutation(p.begin(), p.begin() + k_));
    }
    return out;
}

void DiscretizedKernel::write_csv(std::ostream& os) const {
    for (int j = 0; j < k_; ++j) os << 'i' << j + 1 << ',';
    for (int j = 0; j < k_; ++j) os << 'x' << j + 1 << ',';
    os << "value\n";
    for (std::size_t i = 0; i < amplitude_.size(); ++i) {
        const auto t = tuple(i);
        for (auto c : t) os << c << ',';
        for (auto c : t) os << detail::format_double(grid_->nodes[c]) << ',';
        os << detail::format_double(value(i)) << '\n';
    }
}

struct HermiteProcessSimulator::Impl {
    std::shared_ptr<const KernelGrid> grid;
    std::vector<DiscretizedKernel> kernels;
    std::unique_ptr<CirculantSampler> sampler;
    std::vector<std::size_t> stops;
    std::size_t length = 0;
    double scale = 1.0;
};

HermiteProcessSimulator::HermiteProcessSimulator(HermiteProcessSpec spec, std::vector<double> t_grid)
    : spec_(spec), t_grid_(std::move(t_grid)), impl_(std::make_unique<Impl>()) {
    validate(spec_);
    check_times(t_grid_);
    const double d = spec_.d();
    switch (spec_.representation) {
        case Representation::TimeDomain:
        case Representation::FiniteInterval:
        case Representation::PositiveHalfAxis:
            impl_->grid = std::make_shared<const KernelGrid>(
                make_kernel_grid(spec_.representation, d, spec_.resolution, t_grid_));
            impl_->kernels = standardized_kernels(impl_->grid, spec_.k, t_grid_);
            break;
        case Representation::ExactFgn: {
            const std::size_t n = fgn_lattice(t_grid_);
            for (double t : t_grid_) impl_->stops.push_back(static_cast<std::size_t>(std::llround(t * double(n))));
            impl_->length = impl_->stops.back();
            impl_->sampler = std::make_unique<CirculantSampler>(
                CovarianceModel::fractional_gaussian_noise(spec_.h0, impl_->length), impl_->length);
            impl_->scale = std::pow(static_cast<double>(n), -spec_.h0);
            break;
        }
        case Representation::PartialSumLimit: {
            const std::size_t N = spec_.partial_sum_length;
            if (t_grid_.back() > 1.0) throw std::invalid_argument("partial-sum limit needs times in (0, 1]");
            for (double t : t_grid_) impl_->stops.push_back(steps_for(N, t));
            if (impl_->stops.front() == 0) throw std::invalid_argument("partial-sum length too small for the time grid");
            impl_->length = N;
            const auto model = CovarianceModel::power_law(d);
            impl_->sampler = std::make_unique<CirculantSampler>(model, N);
            impl_->scale = 1.0 / std::sqrt(exact_variance(HermiteExpansion::hermite(spec_.k), model, N));
            break;
        }
    }
}

HermiteProcessSimulator::~HermiteProcessSimulator() = default;
HermiteProcessSimulator::HermiteProcessSimulator(HermiteProcessSimulator&&) noexcept = default;
HermiteProcessSimulator& HermiteProcessSimulator::operator=(HermiteProcessSimulator&&) noexcept = default;

void HermiteProcessSimulator::sample_into(std::uint64_t seed, std::span<double> out) const {
    if (out.size() != t_grid_.size()) throw std::invalid_argument("output span does not match the time grid");
    if (impl_->grid) {
        std::vector<double> xi(impl_->grid->size());
        NormalStream(seed).fill_normal(xi);
        for (std::size_t a = 0; a < out.size(); ++a) out[a] = impl_->kernels[a].evaluate(xi);
        return;
    }
    std::vector<double> x(impl_->length);
    impl_->sampler->sample_into(seed, x);
    const bool fgn = spec_.representation == Representation::ExactFgn;
    long double running = 0.0L;
    std::size_t n = 0;
    for (std::size_t a = 0; a < out.size(); ++a) {
        for (; n < impl_->stops[a]; ++n) running += fgn ? x[n] : hermite_poly(spec_.k, x[n]);
        out[a] = static_cast<double>(running) * impl_->scale;
    }
}

std::vector<double> HermiteProcessSimulator::sample(std::uint64_t seed) const {
    std::vector<double> out(t_grid_.size());
    sample_into(seed, out);
    return out;
}

std::vector<double> HermiteProcessSimulator::sample_many(std::size_t R, std::uint64_t master, unsigned threads) const {
    const std::size_t T = t_grid_.size();
    std::vector<double> out(R * T);
    detail::parallel_for(R, threads, [&](std::size_t r) {
        sample_into(derive_seed(master, r), std::span<double>(out.data() + r * T, T));
    });
    return out;
}

const std::vector<DiscretizedKernel>& HermiteProcessSimulator::kernels() const {
    if (!impl_->grid) throw std::logic_error("representation has no discretized kernels");
    return impl_->kernels;
}

std::optional<double> HermiteProcessSimulator::exact_covariance(std::size_t a, std::size_t b) const {
    if (a >= t_grid_.size() || b >= t_grid_.size()) throw std::out_of_range("time index out of range");
    if (impl_->grid) return impl_->kernels[a].covariance(impl_->kernels[b]);
    if (spec_.representation == Representation::ExactFgn) return fbm_cov(spec_.h0, t_grid_[a], t_grid_[b]);
    const std::size_t N = impl_->length;
    const auto model = CovarianceModel::power_law(spec_.d());
    const double s = cov_limit_lemma(model, spec_.k, t_grid_[a], t_grid_[b], N) * static_cast<double>(N);
    return factorial(spec_.k) * s * impl_->scale * impl_->scale;
}

std::vector<double> simulate(const HermiteProcessSpec& spec, std::span<const double> t_grid, std::uint64_t seed) {
    return HermiteProcessSimulator(spec, std::vector<double>(t_grid.begin(), t_grid.end())).sample(seed);
}

JointHermiteSimulator::JointHermiteSimulator(std::vector<int> orders, double d, std::vector<double> t_grid,
                                             Representation representation, std::size_t resolution)
    : orders_(std::move(orders)), d_(d), t_grid_(std::move(t_grid)) {
    if (orders_.empty()) throw std::invalid_argument("no orders given");
    if (!is_chaos_representation(representation)) {
        throw std::invalid_argument("joint simulation needs a shared-grid chaos representation");
    }
    for (int k : orders_) {
        HermiteProcessSpec spec;
        spec.k = k;
        spec.h0 = d + 0.5;
        spec.representation = representation;
        spec.resolution = resolution;
        validate(spec);
    }
    check_times(t_grid_);
    grid_ = std::make_shared<const KernelGrid>(make_kernel_grid(representation, d, resolution, t_grid_));
    for (int k : orders_) kernels_.push_back(standardized_kernels(grid_, k, t_grid_));
}

std::vector<double> JointHermiteSimulator::sample(std::uint64_t seed) const {
    std::vector<double> xi(grid_->size());
    NormalStream(seed).fill_normal(xi);
    const std::size_t T = t_grid_.size();
    std::vector<double> out(orders_.size() * T);
    for (std::size_t j = 0; j < orders_.size(); ++j) {
        for (std::size_t a = 0; a < T; ++a) out[j * T + a] = kernels_[j][a].evaluate(xi);
    }
    return out;
}

std::vector<double> JointHermiteSimulator::sample_many(std::size_t R, std::uint64_t master, unsigned threads) const {
    const std::size_t width = orders_.size() * t_grid_.size();
    std::vector<double> out(R * width);
    detail::parallel_for(R, threads, [&](std::size_t r) {
        const auto row = sample(derive_seed(master, r));
        std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(r * width));
    });
    return out;
}

std::vector<double> joint_simulate(const std::vector<int>& orders, double d, std::span<const double> t_grid,
                                   std::uint64_t seed, Representation representation, std::size_t resolution) {
    return JointHermiteSimulator(orders, d, std::vector<double>(t_grid.begin(), t_grid.end()), representation,
                                 resolution)
        .sample(seed);
}

namespace {

Eigen::MatrixXd second_order_matrix(const DiscretizedKernel& kernel) {
    const auto n = static_cast<Eigen::Index>(kernel.grid().size());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    // Z = 2 sum_{i<j} a_ij xi_i xi_j = xi' B xi with B_ij = B_ji = a_ij.
    for (std::size_t i = 0; i < kernel.tuples(); ++i) {
        const auto t = kernel.tuple(i);
        B(t[0], t[1]) = B(t[1], t[0]) = kernel.amplitude(i);
    }
    return B;
}

}  // namespace

double square_cross_correlation(const DiscretizedKernel& first, const DiscretizedKernel& second) {
    if (first.order() != 1 || second.order() != 2) {
        throw std::invalid_argument("square cross-correlation needs kernels of orders 1 and 2");
    }
    if (&first.grid() != &second.grid() && first.grid().nodes != second.grid().nodes) {
        throw std::invalid_argument("kernels live on different grids");
    }
    const auto n = static_cast<Eigen::Index>(first.grid().size());
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < first.tuples(); ++i) a(first.tuple(i)[0]) = first.amplitude(i);
    const Eigen::MatrixXd B = second_order_matrix(second);
    // E[Z1^2 Z2] = sum_{i != j} B_ij E[Z1^2 xi_i xi_j] = 2 a'Ba (B has zero diagonal).
    const double cross = 2.0 * a.dot(B * a);
    const double var1 = a.squaredNorm();
    const double var2 = 2.0 * B.squaredNorm();
    return cross / (std::sqrt(2.0) * var1 * std::sqrt(var2));
}

double second_order_skewness(const DiscretizedKernel& kernel) {
    if (kernel.order() != 2) throw std::invalid_argument("skewness formula needs a second-order kernel");
    const Eigen::MatrixXd B = second_order_matrix(kernel);
    const Eigen::MatrixXd B2 = B * B;
    const double tr2 = B2.trace();
    const double tr3 = (B2.cwiseProduct(B)).sum();
    return 8.0 * tr3 / std::pow(2.0 * tr2, 1.5);
}

double second_order_excess_kurtosis(const DiscretizedKernel& kernel) {
    if (kernel.order() != 2) throw std::invalid_argument("kurtosis formula needs a second-order kernel");
    const Eigen::MatrixXd B = second_order_matrix(kernel);
    const Eigen::MatrixXd B2 = B * B;
    const double tr2 = B2.trace();
    return 48.0 * B2.squaredNorm() / (4.0 * tr2 * tr2);
}

double contraction_positivity(int p, int q, double d, const KernelGrid& grid) {
    if (grid.size() == 0) throw std::invalid_argument("contraction grid is empty");
    if (p < 1 || q < 1) throw std::invalid_argument("orders must be at least 1");
    auto shared = std::make_shared<const KernelGrid>(grid);
    if (std::abs(shared->d - d) > 1e-15) throw std::invalid_argument("grid was built for a different d");
    const ChaosKernel f = DiscretizedKernel(shared, p, 1.0).to_chaos();
    const ChaosKernel g = DiscretizedKernel(shared, q, 1.0).to_chaos();
    const ChaosKernel h = contract(f, g, 1);
    const auto v = h.values();
    return *std::min_element(v.begin(), v.end());
}

double contraction_positivity(int p, int q, double d, std::size_t cells) {
    if (cells == 0) throw std::invalid_argument("contraction grid is empty");
    const std::vector<double> one{1.0};
    return contraction_positivity(p, q, d, make_kernel_grid(Representation::PositiveHalfAxis, d, cells, one));
}

EquivalenceReport representation_equivalence(int k, Representation a, Representation b, double h0,
                                             std::span<const double> t_grid, std::size_t R, std::uint64_t seed,
                                             std::size_t resolution, unsigned threads) {
    if (R < 2) throw std::invalid_argument("at least 2 replications are required");
    std::vector<double> times(t_grid.begin(), t_grid.end());
    auto make = [&](Representation r) {
        HermiteProcessSpec spec;
        spec.k = k;
        spec.h0 = h0;
        spec.representation = r;
        spec.resolution = resolution;
        return HermiteProcessSimulator(spec, times);
    };
    const auto sim_a = make(a);
    const auto sim_b = make(b);
    const auto xa = sim_a.sample_many(R, seed, threads);
    const auto xb = sim_b.sample_many(R, seed, threads);
    const std::size_t T = times.size();
    const double Rd = static_cast<double>(R);

    // Mean and variance of a per-replication statistic.
    auto moments = [&](const std::vector<double>& x, auto&& stat) {
        long double s = 0.0L, s2 = 0.0L;
        for (std::size_t r = 0; r < R; ++r) {
            const double v = stat(&x[r * T]);
            s += v;
            s2 += static_cast<long double>(v) * v;
        }
        const double mean = static_cast<double>(s / Rd);
        const double var = std::max(0.0, static_cast<double>((s2 - s * s / Rd) / (Rd - 1.0)));
        return std::pair{mean, var / Rd};
    };

    EquivalenceReport rep;
    rep.replications = R;
    rep.cov_a.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
    rep.cov_b.resizeLike(rep.cov_a);
    for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t j = i; j < T; ++j) {
            auto prod = [i, j](const double* row) { return row[i] * row[j]; };
            const auto [ma, va] = moments(xa, prod);
            const auto [mb, vb] = moments(xb, prod);
            rep.cov_a(i, j) = rep.cov_a(j, i) = ma;
            rep.cov_b(i, j) = rep.cov_b(j, i) = mb;
            const double diff = std::abs(ma - mb);
            const double se = std::sqrt(va + vb);
            const double z = diff == 0.0 ? 0.0 : (se > 0.0 ? diff / se : kInf);
            if (diff > rep.max_abs_discrepancy || (i == 0 && j == 0)) {
                rep.max_abs_discrepancy = diff;
                rep.se_at_max = se;
            }
            rep.max_z = std::max(rep.max_z, z);
        }
    }
    const std::size_t at = index_of_one(times).value_or(T - 1);
    auto square = [at](const double* row) { return row[at] * row[at]; };
    auto cube = [at](const double* row) { return row[at] * row[at] * row[at]; };
    const auto [va, sva] = moments(xa, square);
    const auto [vb, svb] = moments(xb, square);
    rep.variance_a = va;
    rep.variance_b = vb;
    rep.variance_se_a = std::sqrt(sva);
    rep.variance_se_b = std::sqrt(svb);
    // Var(Z^2) = E Z^4 - (E Z^2)^2 = (kappa_4 + 2) sigma^4 under the simulated law.
    auto exact_se = [&](const HermiteProcessSimulator& sim) {
        const auto v = sim.exact_covariance(at, at);
        if (!v) return std::numeric_limits<double>::quiet_NaN();
        double kurt = 0.0;
        if (k == 2 && is_chaos_representation(sim.spec().representation)) {
            kurt = second_order_excess_kurtosis(sim.kernels()[at]);
        } else if (k != 1) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return *v * std::sqrt((kurt + 2.0) / Rd);
    };
    rep.variance_exact_se_a = exact_se(sim_a);
    rep.variance_exact_se_b = exact_se(sim_b);
    const auto [ca, sca] = moments(xa, cube);
    const auto [cb, scb] = moments(xb, cube);
    rep.third_moment_a = ca;
    rep.third_moment_b = cb;
    rep.third_moment_se = std::sqrt(sca + scb);
    return rep;
}

}  // namespace lrdlab
