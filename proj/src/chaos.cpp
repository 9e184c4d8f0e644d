#include "lrdlab/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "lrdlab/errors.hpp"
#include "lrdlab/hermite.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/scaling.hpp"
#include "numeric.hpp"
#include "parallel.hpp"

namespace lrdlab {

namespace {

constexpr std::size_t kMaxDenseEntries = std::size_t{1} << 24;

std::size_t checked_power(std::size_t n, int p) {
    std::size_t out = 1;
    for (int i = 0; i < p; ++i) {
        if (n != 0 && out > kMaxDenseEntries / n) throw std::invalid_argument("dense kernel is too large");
        out *= n;
    }
    return out;
}

// prod_{j} w_{i_j} over all r-tuples, laid out like kernel entries.
std::vector<double> weight_tensor(std::span<const double> w, int r) {
    std::vector<double> out{1.0};
    for (int k = 0; k < r; ++k) {
        std::vector<double> next;
        next.reserve(out.size() * w.size());
        for (double a : out) {
            for (double b : w) next.push_back(a * b);
        }
        out.swap(next);
    }
    return out;
}

void require_same_grid(const ChaosKernel& f, const ChaosKernel& g) {
    if (f.grid_size() != g.grid_size()) throw std::invalid_argument("kernels live on different grids");
    const auto a = f.weights();
    const auto b = g.weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > 1e-14 * std::max(std::abs(a[i]), std::abs(b[i]))) {
            throw std::invalid_argument("kernels have different grid weights");
        }
    }
}

// Multivariate polynomial in at most 8 variables with exponents below 256,
// keyed by packed exponents.
using Poly = std::map<std::uint64_t, double>;

unsigned exponent(std::uint64_t key, std::size_t var) { return static_cast<unsigned>((key >> (8 * var)) & 0xFF); }

void add_term(Poly& p, std::uint64_t key, double c) {
    if (c == 0.0) return;
    p[key] += c;
}

Poly multiply(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ka, ca] : a) {
        for (const auto& [kb, cb] : b) add_term(out, ka + kb, ca * cb);
    }
    return out;
}

double gaussian_expectation(const Poly& p) {
    long double total = 0.0L;
    for (const auto& [key, c] : p) {
        double m = 1.0;
        for (std::size_t v = 0; v < 8 && m != 0.0; ++v) {
            const unsigned e = exponent(key, v);
            if (e % 2 == 1) {
                m = 0.0;
            } else {
                for (unsigned k = e; k > 1; k -= 2) m *= k - 1;
            }
        }
        total += static_cast<long double>(c) * m;
    }
    return static_cast<double>(total);
}

// Monomial coefficients of H_c: H_c(x) = sum_j (-1)^j c! / (j! (c-2j)! 2^j) x^{c-2j}.
std::vector<double> hermite_monomials(unsigned c) {
    std::vector<double> out(c + 1, 0.0);
    for (unsigned j = 0; 2 * j <= c; ++j) {
        const double v = std::round(std::exp(std::lgamma(c + 1.0) - std::lgamma(j + 1.0) - std::lgamma(c - 2.0 * j + 1.0) -
                                             j * std::numbers::ln2));
        out[c - 2 * j] = (j % 2 == 0 ? 1.0 : -1.0) * v;
    }
    return out;
}

Poly ito_polynomial(const ChaosKernel& f) {
    const std::size_t n = f.grid_size();
    const int p = f.order();
    Poly out;
    if (p == 0) {
        add_term(out, 0, f.values()[0]);
        return out;
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
    const auto vals = f.values();
    const auto w = f.weights();
    for (std::size_t flat = 0; flat < vals.size(); ++flat) {
        std::size_t rem = flat;
        for (int j = p - 1; j >= 0; --j) {
            idx[static_cast<std::size_t>(j)] = rem % n;
            rem /= n;
        }
        if (vals[flat] == 0.0) continue;
        double amp = vals[flat];
        std::vector<unsigned> mult(n, 0);
        for (std::size_t i : idx) {
            amp *= std::sqrt(w[i]);
            ++mult[i];
        }
        // Expand prod_i H_{mult_i}(xi_i).
        Poly term;
        term[0] = amp;
        for (std::size_t v = 0; v < n; ++v) {
            if (mult[v] == 0) continue;
            const auto h = hermite_monomials(mult[v]);
            Poly factor;
            for (unsigned e = 0; e < h.size(); ++e) add_term(factor, std::uint64_t{e} << (8 * v), h[e]);
            term = multiply(term, factor);
        }
        for (const auto& [k, c] : term) add_term(out, k, c);
    }
    return out;
}

double binomial(int n, int k) { return std::round(factorial(n) / (factorial(k) * factorial(n - k))); }

}  // namespace

ChaosKernel::ChaosKernel(int order, std::vector<double> weights, std::vector<double> values, bool symmetric)
    : order_(order), weights_(std::move(weights)), values_(std::move(values)), symmetric_(symmetric) {
    if (order_ < 0) throw std::invalid_argument("kernel order must be nonnegative");
    if (weights_.empty() && order_ > 0) throw std::invalid_argument("kernel grid is empty");
    for (double w : weights_) {
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("grid weights must be positive and finite");
    }
    if (values_.size() != checked_power(weights_.size(), order_)) {
        throw std::invalid_argument("kernel value count does not match grid size and order");
    }
}

ChaosKernel ChaosKernel::zeros(int order, std::vector<double> weights) {
    const std::size_t size = checked_power(weights.size(), order);
    return ChaosKernel(order, std::move(weights), std::vector<double>(size, 0.0), true);
}

ChaosKernel ChaosKernel::vector(std::vector<double> weights, std::vector<double> values) {
    return ChaosKernel(1, std::move(weights), std::move(values), true);
}

void ChaosKernel::set_points(std::vector<double> points) {
    if (!points.empty() && points.size() != weights_.size()) throw std::invalid_argument("one point per grid cell");
    points_ = std::move(points);
}

std::size_t ChaosKernel::offset(std::span<const std::size_t> idx) const {
    if (idx.size() != static_cast<std::size_t>(order_)) throw std::invalid_argument("index count must equal order");
    std::size_t off = 0;
    for (std::size_t i : idx) {
        if (i >= weights_.size()) throw std::out_of_range("kernel index out of range");
        off = off * weights_.size() + i;
    }
    return off;
}

double ChaosKernel::operator()(std::initializer_list<std::size_t> idx) const {
    return values_[offset(std::span<const std::size_t>(idx.begin(), idx.size()))];
}

double& ChaosKernel::operator()(std::initializer_list<std::size_t> idx) {
    return values_[offset(std::span<const std::size_t>(idx.begin(), idx.size()))];
}

double ChaosKernel::at(std::span<const std::size_t> idx) const { return values_[offset(idx)]; }

bool ChaosKernel::spot_check_symmetry(std::uint64_t seed, std::size_t trials, double tol) const {
    if (order_ < 2) return true;
    NormalStream rng(seed);
    const auto p = static_cast<std::size_t>(order_);
    std::vector<std::size_t> idx(p), perm(p), permuted(p);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& i : idx) i = rng.below(weights_.size());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = p - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        for (std::size_t i = 0; i < p; ++i) permuted[i] = idx[perm[i]];
        const double a = at(idx);
        const double b = at(permuted);
        if (std::abs(a - b) > tol * std::max(1.0, std::abs(a))) return false;
    }
    return true;
}

double ChaosKernel::norm_sq() const {
    const std::size_t n = weights_.size();
    long double total = 0.0L;
    std::vector<std::size_t> idx(static_cast<std::size_t>(order_), 0);
    for (std::size_t flat = 0; flat < values_.size(); ++flat) {
        const double v = values_[flat];
        if (v != 0.0) {
            double w = 1.0;
            for (std::size_t i : idx) w *= weights_[i];
            total += static_cast<long double>(v) * v * w;
        }
        for (int j = order_ - 1; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < n) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
    }
    return static_cast<double>(total);
}

double ChaosKernel::norm() const { return std::sqrt(norm_sq()); }

bool ChaosKernel::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double inner(const ChaosKernel& f, const ChaosKernel& g) {
    if (f.order() != g.order()) throw std::invalid_argument("inner product needs kernels of equal order");
    require_same_grid(f, g);
    const auto W = weight_tensor(f.weights(), f.order());
    long double total = 0.0L;
    for (std::size_t i = 0; i < W.size(); ++i) total += static_cast<long double>(f.values()[i]) * g.values()[i] * W[i];
    return static_cast<double>(total);
}

ChaosKernel contract(const ChaosKernel& f, const ChaosKernel& g, int r) {
    require_same_grid(f, g);
    if (r < 0 || r > std::min(f.order(), g.order())) throw std::invalid_argument("contraction index out of range");
    const std::size_t n = f.grid_size();
    const std::size_t inner_size = checked_power(n, r);
    const std::size_t rows = checked_power(n, f.order() - r);
    const std::size_t cols = checked_power(n, g.order() - r);
    checked_power(n, f.order() + g.order() - 2 * r);

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMat> F(f.values().data(), static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(inner_size));
    const Eigen::Map<const RowMat> G(g.values().data(), static_cast<Eigen::Index>(cols),
                                     static_cast<Eigen::Index>(inner_size));
    const auto W = weight_tensor(f.weights(), r);
    const Eigen::Map<const Eigen::VectorXd> w(W.data(), static_cast<Eigen::Index>(W.size()));

    std::vector<double> values(rows * cols);
    Eigen::Map<RowMat> H(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    H.noalias() = F * w.asDiagonal() * G.transpose();

    std::vector<double> weights(f.weights().begin(), f.weights().end());
    ChaosKernel out(f.order() + g.order() - 2 * r, std::move(weights), std::move(values), false);
    out.set_points(f.points());
    return out;
}

ChaosKernel symmetrize(const ChaosKernel& f) {
    const int p = f.order();
    if (p > 6) throw std::invalid_argument("symmetrization is limited to order 6");
    if (p < 2) {
        ChaosKernel out = f;
        out.mark_symmetric(true);
        return out;
    }
    const std::size_t n = f.grid_size();
    std::vector<int> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<int>> perms;
    do {
        perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<double> values(f.values().size(), 0.0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0), permuted(static_cast<std::size_t>(p));
    const double inv = 1.0 / static_cast<double>(perms.size());
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        double acc = 0.0;
        for (const auto& s : perms) {
            for (std::size_t j = 0; j < idx.size(); ++j) permuted[j] = idx[static_cast<std::size_t>(s[j])];
            acc += f.at(permuted);
        }
        values[flat] = acc * inv;
        for (int j = p - 1; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < n) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
    }
    ChaosKernel out(p, std::vector<double>(f.weights().begin(), f.weights().end()), std::move(values), true);
    out.set_points(f.points());
    return out;
}

double discrete_ito(const ChaosKernel& f, std::span<const double> xi) {
    const std::size_t n = f.grid_size();
    if (xi.size() != n) throw std::invalid_argument("Gaussian array does not match the kernel grid");
    const int p = f.order();
    if (p == 0) return f.values()[0];
    std::vector<double> root(n);
    for (std::size_t i = 0; i < n; ++i) root[i] = std::sqrt(f.weights()[i]);
    // Hermite values H_0..H_p at each xi.
    std::vector<double> H(n * static_cast<std::size_t>(p + 1));
    for (std::size_t i = 0; i < n; ++i) hermite_values(xi[i], std::span<double>(&H[i * (p + 1)], p + 1));

    long double total = 0.0L;
    std::vector<std::size_t> idx(static_cast<std::size_t>(p), 0);
    std::vector<std::size_t> sorted(idx.size());
    const auto vals = f.values();
    for (std::size_t flat = 0; flat < vals.size(); ++flat) {
        const double v = vals[flat];
        if (v != 0.0) {
            double amp = v;
            sorted = idx;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t a = 0; a < sorted.size();) {
                std::size_t b = a;
                while (b < sorted.size() && sorted[b] == sorted[a]) ++b;
                const std::size_t i = sorted[a];
                const std::size_t mult = b - a;
                amp *= H[i * (p + 1) + mult];
                for (std::size_t c = 0; c < mult; ++c) amp *= root[i];
                a = b;
            }
            total += amp;
        }
        for (int j = p - 1; j >= 0; --j) {
            if (++idx[static_cast<std::size_t>(j)] < n) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
    }
    return static_cast<double>(total);
}

double product_formula_check(const ChaosKernel& f, const ChaosKernel& g) {
    require_same_grid(f, g);
    const int p = f.order();
    const int q = g.order();
    if (p + q > 6) throw std::invalid_argument("product formula check needs p + q <= 6");
    if (f.grid_size() > 6) throw std::invalid_argument("product formula check needs at most 6 grid points");

    const Poly left = multiply(ito_polynomial(f), ito_polynomial(g));
    Poly right;
    for (int r = 0; r <= std::min(p, q); ++r) {
        const double c = factorial(r) * binomial(p, r) * binomial(q, r);
        for (const auto& [k, v] : ito_polynomial(contract(f, g, r))) add_term(right, k, c * v);
    }
    Poly diff = left;
    for (const auto& [k, v] : right) diff[k] -= v;

    const double second = gaussian_expectation(multiply(left, left));
    const double scale = std::max(1.0, std::sqrt(std::abs(second)));
    const double m1 = std::abs(gaussian_expectation(left) - gaussian_expectation(right)) / scale;
    const double m2 = std::abs(second - gaussian_expectation(multiply(right, right))) / (scale * scale);
    const double d2 = std::sqrt(std::max(0.0, gaussian_expectation(multiply(diff, diff)))) / scale;
    return std::max({m1, m2, d2});
}

double independence_criterion(const ChaosKernel& f, const ChaosKernel& g) { return contract(f, g, 1).norm(); }

double wick_moment(std::span<const int> factors, const Eigen::MatrixXd& cov) {
    const std::size_t n = factors.size();
    if (n > 8) throw std::invalid_argument("pairing enumeration is limited to 8 factors");
    if (n == 0) return 1.0;
    if (n % 2 == 1) return 0.0;
    for (int f : factors) {
        if (f < 0 || f >= cov.rows()) throw std::out_of_range("factor index outside the covariance matrix");
    }
    // Recursive pairing of the first unpaired factor with each later one.
    std::vector<bool> used(n, false);
    auto rec = [&](auto&& self) -> double {
        std::size_t first = 0;
        while (first < n && used[first]) ++first;
        if (first == n) return 1.0;
        used[first] = true;
        double total = 0.0;
        for (std::size_t j = first + 1; j < n; ++j) {
            if (used[j]) continue;
            used[j] = true;
            total += cov(factors[first], factors[j]) * self(self);
            used[j] = false;
        }
        used[first] = false;
        return total;
    };
    return rec(rec);
}

ChaosKernel partial_sum_kernel(int m, std::size_t N, double t, const CovarianceModel& model, double normalization) {
    if (m < 1) throw std::invalid_argument("Hermite order must be at least 1");
    if (N < 1) throw std::invalid_argument("N must be at least 1");
    const std::size_t L = 2 * N;
    std::vector<double> lambda = spectral_density_grid(model, L);
    const double top = *std::max_element(lambda.begin(), lambda.end());
    for (double& v : lambda) {
        if (v < 0.0) {
            if (v < -CirculantSampler::kClipTolerance * top) {
                throw NumericalError("spectral masses of the embedding are negative");
            }
            v = 0.0;
        }
    }
    // Real basis: cos at frequencies 0..L/2, sin at 1..L/2-1.
    std::vector<double> freq, weights;
    std::vector<bool> is_sin;
    const double step = 2.0 * std::numbers::pi / static_cast<double>(L);
    for (std::size_t j = 0; j <= L / 2; ++j) {
        const bool edge = j == 0 || j == L / 2;
        const double w = (edge ? 1.0 : 2.0) * lambda[j] / static_cast<double>(L);
        if (w <= 0.0) continue;
        freq.push_back(static_cast<double>(j) * step);
        weights.push_back(w);
        is_sin.push_back(false);
        if (!edge) {
            freq.push_back(-static_cast<double>(j) * step);
            weights.push_back(w);
            is_sin.push_back(true);
        }
    }
    const std::size_t B = weights.size();
    ChaosKernel out = ChaosKernel::zeros(m, weights);
    out.set_points(freq);

    const double A = normalization > 0.0 ? normalization
                                         : std::sqrt(exact_variance(HermiteExpansion::hermite(m), model, N));
    const std::size_t stop = steps_for(N, t);
    std::vector<double> phi(B);
    auto vals = out.values();
    std::vector<double> power;
    for (std::size_t n = 1; n <= stop; ++n) {
        for (std::size_t b = 0; b < B; ++b) {
            const double arg = static_cast<double>(n) * std::abs(freq[b]);
            phi[b] = is_sin[b] ? std::sin(arg) : std::cos(arg);
        }
        // phi^{(x) m}, built up one factor at a time.
        power.assign(1, 1.0 / A);
        for (int k = 0; k < m; ++k) {
            std::vector<double> next(power.size() * B);
            for (std::size_t a = 0; a < power.size(); ++a) {
                for (std::size_t b = 0; b < B; ++b) next[a * B + b] = power[a] * phi[b];
            }
            power.swap(next);
        }
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += power[i];
    }
    return out;
}

double partial_sum_contraction_norm(int p, int q, int r, const CovarianceModel& model, std::size_t N, double t) {
    if (p < 1 || q < 1) throw std::invalid_argument("kernel orders must be at least 1");
    if (r < 1 || r > std::min(p, q)) throw std::invalid_argument("contraction index out of range");
    const std::size_t S = steps_for(N, t);
    if (S == 0) return 0.0;
    const auto n = static_cast<Eigen::Index>(S);
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = model(static_cast<long long>(i - j));
    }
    auto hadamard_power = [&](int e) -> Eigen::MatrixXd {
        Eigen::MatrixXd out = Eigen::MatrixXd::Ones(n, n);
        for (int k = 0; k < e; ++k) out.array() *= gram.array();
        return out;
    };
    const Eigen::MatrixXd A = hadamard_power(r);
    const Eigen::MatrixXd C = hadamard_power(p - r);
    const Eigen::MatrixXd D = hadamard_power(q - r);
    const Eigen::MatrixXd AD = A * D;
    const Eigen::MatrixXd CA = C * A;
    const double a = std::sqrt(exact_variance(HermiteExpansion::hermite(p), model, N));
    const double b = std::sqrt(exact_variance(HermiteExpansion::hermite(q), model, N));
    const double total = (AD.array() * CA.array()).sum();
    return std::sqrt(std::max(0.0, total)) / (a * b);
}

std::vector<DecayRow> asymptotic_independence_decay(const std::vector<std::size_t>& Ns,
                                                    const std::vector<ChaosKernel>& f_series,
                                                    const std::vector<ChaosKernel>& g_series,
                                                    const std::vector<int>& rs) {
    if (Ns.size() != f_series.size() || Ns.size() != g_series.size()) {
        throw std::invalid_argument("one kernel pair per N is required");
    }
    std::vector<DecayRow> rows;
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        for (int r : rs) rows.push_back({Ns[i], r, contract(f_series[i], g_series[i], r).norm()});
    }
    return rows;
}

std::vector<DecayRow> asymptotic_independence_decay(int p, int q, const CovarianceModel& model,
                                                    const std::vector<std::size_t>& Ns, const std::vector<int>& rs,
                                                    double t, unsigned threads) {
    std::vector<DecayRow> rows;
    for (std::size_t N : Ns) {
        for (int r : rs) rows.push_back({N, r, 0.0});
    }
    detail::parallel_for(rows.size(), threads, [&](std::size_t i) {
        rows[i].norm = partial_sum_contraction_norm(p, q, rows[i].r, model, rows[i].N, t);
    });
    return rows;
}

std::vector<DecaySummary> summarize_decay(const std::vector<DecayRow>& rows) {
    std::map<int, std::vector<const DecayRow*>> by_r;
    for (const auto& row : rows) by_r[row.r].push_back(&row);
    std::vector<DecaySummary> out;
    for (auto& [r, list] : by_r) {
        std::sort(list.begin(), list.end(), [](const DecayRow* a, const DecayRow* b) { return a->N < b->N; });
        DecaySummary s;
        s.r = r;
        s.first = list.front()->norm;
        s.last = list.back()->norm;
        s.ratio = s.first > 0.0 ? s.last / s.first : 0.0;
        s.strictly_decreasing = list.size() > 1;
        for (std::size_t i = 1; i < list.size(); ++i) {
            if (!(list[i]->norm < list[i - 1]->norm)) s.strictly_decreasing = false;
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace lrdlab
