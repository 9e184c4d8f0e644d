#include "lrdlab/hermite.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lrdlab/errors.hpp"

namespace lrdlab {

double hermite_poly(int m, double x) {
    if (m < 0) throw std::invalid_argument("Hermite order must be nonnegative");
    if (m == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < m; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

void hermite_values(double x, std::span<double> out) {
    if (out.empty()) return;
    out[0] = 1.0;
    if (out.size() > 1) out[1] = x;
    for (std::size_t k = 1; k + 1 < out.size(); ++k) {
        out[k + 1] = x * out[k] - static_cast<double>(k) * out[k - 1];
    }
}

namespace {

GaussHermiteRule golub_welsch(std::size_t n) {
    // Jacobi matrix of the monic probabilists' Hermite recurrence.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n - 1));
    for (std::size_t k = 1; k < n; ++k) sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(double(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("Gauss-Hermite eigenproblem failed for n=" + std::to_string(n));
    }
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        rule.nodes[i] = solver.eigenvalues()[col];
        const double v0 = solver.eigenvectors()(0, col);
        rule.weights[i] = v0 * v0;
    }
    // Enforce exact symmetry of the rule.
    for (std::size_t i = 0; i < n / 2; ++i) {
        const std::size_t j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

// Normalized Hermite values h_m = H_m / sqrt(m!), m = 0..M.
void normalized_hermite(double x, std::span<double> out) {
    out[0] = 1.0;
    if (out.size() > 1) out[1] = x;
    for (std::size_t m = 1; m + 1 < out.size(); ++m) {
        out[m + 1] = (x * out[m] - std::sqrt(double(m)) * out[m - 1]) / std::sqrt(double(m + 1));
    }
}

std::vector<double> project(const std::function<double(double)>& G, int M, std::size_t nodes) {
    const GaussHermiteRule& rule = gauss_hermite_rule(nodes);
    std::vector<long double> acc(static_cast<std::size_t>(M) + 1, 0.0L);
    std::vector<double> h(static_cast<std::size_t>(M) + 1);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double w = rule.weights[i];
        if (w == 0.0) continue;
        const double gx = G(rule.nodes[i]);
        normalized_hermite(rule.nodes[i], h);
        for (std::size_t m = 0; m < h.size(); ++m) acc[m] += static_cast<long double>(w * gx * h[m]);
    }
    std::vector<double> g(acc.size());
    for (std::size_t m = 0; m < g.size(); ++m) {
        g[m] = static_cast<double>(acc[m]) / std::sqrt(std::tgamma(double(m) + 1.0));
    }
    return g;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
    std::vector<double> x(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * double(k) - 1.0) * z * p1 - (double(k) - 1.0) * p0) / double(k);
                p0 = p1;
                p1 = p2;
            }
            dp = double(n) * (z * p1 - p0) / (z * z - 1.0);
            const double step = p1 / dp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

// Composite Gauss-Legendre against the Gaussian density on [-13, 13] with
// panel edges on the half-integers, for functions with kinks or jumps there.
std::vector<double> project_panels(const std::function<double(double)>& G, int M, std::size_t nodes) {
    const auto [x, w] = gauss_legendre(nodes);
    constexpr double width = 0.5;
    constexpr int panels = 52;
    std::vector<long double> acc(static_cast<std::size_t>(M) + 1, 0.0L);
    std::vector<double> h(static_cast<std::size_t>(M) + 1);
    for (int p = 0; p < panels; ++p) {
        const double a = -13.0 + width * p;
        for (std::size_t i = 0; i < nodes; ++i) {
            const double t = a + 0.5 * width * (x[i] + 1.0);
            const double wt = 0.5 * width * w[i] * std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
            const double gx = G(t);
            normalized_hermite(t, h);
            for (std::size_t m = 0; m < h.size(); ++m) acc[m] += static_cast<long double>(wt * gx * h[m]);
        }
    }
    std::vector<double> g(acc.size());
    for (std::size_t m = 0; m < g.size(); ++m) {
        g[m] = static_cast<double>(acc[m]) / std::sqrt(std::tgamma(double(m) + 1.0));
    }
    return g;
}

bool agree(const std::vector<double>& a, const std::vector<double>& b, std::size_t* bad) {
    for (std::size_t m = 0; m < a.size(); ++m) {
        const double tol = kCoefficientTolerance * std::max(1.0, std::abs(b[m]));
        if (!std::isfinite(a[m]) || !std::isfinite(b[m]) || std::abs(a[m] - b[m]) > tol) {
            *bad = m;
            return false;
        }
    }
    return true;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(std::size_t n) {
    if (n < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussHermiteRule>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        GaussHermiteRule rule = n == 1 ? GaussHermiteRule{{0.0}, {1.0}} : golub_welsch(n);
        it = cache.emplace(n, std::make_unique<GaussHermiteRule>(std::move(rule))).first;
    }
    return *it->second;
}

HermiteExpansion::HermiteExpansion(std::vector<double> g, double mean, bool centered)
    : g_(std::move(g)), mean_(mean), centered_(centered) {
    if (g_.empty()) g_.push_back(0.0);
    auto weighted_norm = [this] {
        double s = 0.0;
        double fact = 1.0;
        for (std::size_t m = 1; m < g_.size(); ++m) {
            fact *= static_cast<double>(m);
            s += fact * g_[m] * g_[m];
        }
        return s;
    };
    norm_sq_ = weighted_norm();
    const double threshold = kRankTolerance * std::sqrt(norm_sq_);
    for (std::size_t m = 1; m < g_.size(); ++m) {
        if (std::abs(g_[m]) > threshold) {
            rank_ = static_cast<int>(m);
            break;
        }
    }
    if (rank_) {
        for (int m = 1; m < *rank_; ++m) g_[static_cast<std::size_t>(m)] = 0.0;
        norm_sq_ = weighted_norm();
    }
}

HermiteExpansion HermiteExpansion::from_coefficients(std::vector<double> g, bool centered) {
    if (g.empty()) throw std::invalid_argument("Hermite coefficient list is empty");
    for (double v : g) {
        if (!std::isfinite(v)) throw std::invalid_argument("Hermite coefficient is not finite");
    }
    const double mean = g.front();
    if (centered) g.front() = 0.0;
    return HermiteExpansion(std::move(g), mean, centered);
}

HermiteExpansion HermiteExpansion::hermite(int m, double scale) {
    if (m < 0) throw std::invalid_argument("Hermite order must be nonnegative");
    std::vector<double> g(static_cast<std::size_t>(m) + 1, 0.0);
    g[static_cast<std::size_t>(m)] = scale;
    return from_coefficients(std::move(g), true);
}

HermiteExpansion HermiteExpansion::from_monomials(std::span<const double> c, bool centered) {
    if (c.empty()) throw std::invalid_argument("polynomial coefficient list is empty");
    std::vector<double> g(c.size(), 0.0);
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (c[n] == 0.0) continue;
        // x^n = sum_j n! / (j! (n-2j)! 2^j) H_{n-2j}(x)
        for (std::size_t j = 0; 2 * j <= n; ++j) {
            const double coeff = std::exp(std::lgamma(double(n) + 1.0) - std::lgamma(double(j) + 1.0) -
                                          std::lgamma(double(n - 2 * j) + 1.0) - double(j) * std::numbers::ln2);
            g[n - 2 * j] += c[n] * std::round(coeff);
        }
    }
    return from_coefficients(std::move(g), centered);
}

double HermiteExpansion::coefficient(int m) const noexcept {
    if (m < 0 || m >= static_cast<int>(g_.size())) return 0.0;
    return g_[static_cast<std::size_t>(m)];
}

int HermiteExpansion::rank() const {
    if (!rank_) throw std::domain_error("zero function has no Hermite rank");
    return *rank_;
}

double HermiteExpansion::operator()(double x) const {
    double prev = 1.0;
    double cur = x;
    double total = g_[0];
    if (g_.size() > 1) total += g_[1] * x;
    for (std::size_t k = 1; k + 1 < g_.size(); ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
        total += g_[k + 1] * cur;
    }
    return total;
}

HermiteExpansion HermiteExpansion::scaled(double factor) const {
    std::vector<double> g = g_;
    for (double& v : g) v *= factor;
    return HermiteExpansion(std::move(g), mean_ * factor, centered_);
}

HermiteExpansion expand(const std::function<double(double)>& G, int M, bool centered) {
    if (M < 1) throw std::invalid_argument("expansion truncation must be at least 1");
    std::size_t bad = 0;
    std::vector<double> coarse = project(G, M, 200);
    if (agree(coarse, project(G, M, 400), &bad)) return HermiteExpansion::from_coefficients(std::move(coarse), centered);
    // Gauss-Hermite converges slowly for non-smooth G; retry on panels.
    coarse = project_panels(G, M, 24);
    if (agree(coarse, project_panels(G, M, 48), &bad)) {
        return HermiteExpansion::from_coefficients(std::move(coarse), centered);
    }
    throw NumericalError("Hermite coefficient g_" + std::to_string(bad) + " did not converge under quadrature refinement");
}

int hermite_rank(const HermiteExpansion& expansion) {
    if (!expansion.centered()) throw std::invalid_argument("Hermite rank needs a centered expansion");
    return expansion.rank();
}

TightnessReport tightness_condition(const HermiteExpansion& expansion) {
    TightnessReport report;
    const auto g = expansion.coefficients();
    double largest = 0.0;
    for (std::size_t k = 1; k < g.size(); ++k) largest = std::max(largest, std::abs(g[k]));
    const double floor = 1e-12 * largest;

    std::vector<std::pair<std::size_t, double>> terms;
    double sum = 0.0;
    for (std::size_t k = 1; k < g.size(); ++k) {
        double term = 0.0;
        if (std::abs(g[k]) > floor && g[k] != 0.0) {
            const double kd = static_cast<double>(k);
            term = std::exp(0.5 * kd * std::log(3.0) + 0.5 * std::lgamma(kd + 1.0) + std::log(std::abs(g[k])));
            terms.emplace_back(k, term);
        }
        sum += term;
        report.partial_sums.push_back(sum);
    }

    const bool terminates = terms.empty() || terms.back().first + 1 < g.size();
    if (terminates || terms.size() < 4) {
        report.convergent = true;
        return report;
    }
    double worst = 0.0;
    for (std::size_t i = terms.size() / 2; i + 1 < terms.size(); ++i) {
        worst = std::max(worst, terms[i + 1].second / terms[i].second);
    }
    report.tail_ratio = worst;
    report.convergent = worst < 1.0;
    return report;
}

}  // namespace lrdlab
