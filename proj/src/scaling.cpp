#include "lrdlab/scaling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "lrdlab/errors.hpp"
#include "numeric.hpp"

namespace lrdlab {

namespace {

constexpr std::size_t kDirectLags = 1000;

// gamma(h), with tabulated models continued by zero.
double gamma_or_zero(const CovarianceModel& model, std::size_t h) {
    const auto top = model.max_lag();
    if (top && h > *top) return 0.0;
    return model(static_cast<long long>(h));
}

// Euler-Maclaurin estimate of sum_{j >= J} j^{-a}, a > 1, and the size of the
// first omitted correction.
std::pair<double, double> zeta_tail(double a, double J) {
    const double f = std::pow(J, -a);
    double value = J * f / (a - 1.0) + 0.5 * f;
    value += a * f / J / 12.0;
    value -= a * (a + 1) * (a + 2) * f / (J * J * J) / 720.0;
    value += a * (a + 1) * (a + 2) * (a + 3) * (a + 4) * f / std::pow(J, 5) / 30240.0;
    const double next = a * (a + 1) * (a + 2) * (a + 3) * (a + 4) * (a + 5) * (a + 6) * f / std::pow(J, 7) /
                        1209600.0;
    return {value, next};
}

}  // namespace

std::string_view to_string(Regime regime) noexcept {
    switch (regime) {
        case Regime::SRD: return "SRD";
        case Regime::Boundary: return "BOUNDARY";
        case Regime::LRD: return "LRD";
    }
    return "?";
}

double lrd_threshold(int k) {
    if (k < 1) throw std::invalid_argument("Hermite rank must be at least 1");
    return 0.5 * (1.0 - 1.0 / k);
}

Regime classify(double d, int k) {
    if (!(d > 0.0 && d < 0.5)) throw std::domain_error("memory parameter d must lie in (0, 1/2)");
    const double threshold = lrd_threshold(k);
    // Thresholds are rationals; compare with a few ulps of slack so that
    // d = 0.25, k = 2 lands on the boundary.
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(d, threshold);
    if (std::abs(d - threshold) <= slack) return Regime::Boundary;
    return d < threshold ? Regime::SRD : Regime::LRD;
}

Regime classify(const CovarianceModel& model, int k) {
    if (auto d = model.memory_parameter()) return classify(*d, k);
    if (k < 1) throw std::invalid_argument("Hermite rank must be at least 1");
    return Regime::SRD;
}

double memory_of_functional(double d, int k) { return (d - 0.5) * k + 0.5; }

double hermite_hurst(double d, int k) { return k * (d - 0.5) + 1.0; }

LagSum lag_power_sum(const CovarianceModel& model, int m, std::optional<std::size_t> max_lag) {
    if (m < 1) throw std::invalid_argument("lag-sum power must be at least 1");
    LagSum out;
    if (const auto* p = std::get_if<PowerLaw>(&model.kind())) {
        const double a = m * (1.0 - 2.0 * p->d);
        if (a <= 1.0 + 1e-12) throw std::domain_error("component is not SRD");
        const std::size_t lags = max_lag.value_or(kDirectLags);
        long double s = 0.0L;
        for (std::size_t n = lags; n >= 1; --n) s += std::pow(static_cast<long double>(n + 1), -a);
        const auto [tail, next] = zeta_tail(a, static_cast<double>(lags) + 2.0);
        out.lags = lags;
        if (max_lag) {
            out.value = static_cast<double>(1.0L + 2.0L * s);
            out.tail_bound = 2.0 * tail;
        } else {
            out.value = static_cast<double>(1.0L + 2.0L * (s + tail));
            out.tail_bound = 2.0 * next;
        }
        return out;
    }
    if (const auto* g = std::get_if<Geometric>(&model.kind())) {
        const double q = ipow(g->rho, m);
        if (!max_lag) {
            out.value = (1.0 + q) / (1.0 - q);
            out.lags = 0;
            return out;
        }
        long double s = 1.0L;
        double term = 1.0;
        for (std::size_t n = 1; n <= *max_lag; ++n) {
            term *= q;
            s += 2.0L * term;
        }
        out.value = static_cast<double>(s);
        out.lags = *max_lag;
        out.tail_bound = 2.0 * std::abs(term * q) / (1.0 - std::abs(q));
        return out;
    }
    const std::size_t top = *model.max_lag();
    const std::size_t lags = std::min(top, max_lag.value_or(top));
    long double s = 1.0L;
    for (std::size_t n = 1; n <= lags; ++n) s += 2.0L * ipow(model(static_cast<long long>(n)), m);
    long double rest = 0.0L;
    for (std::size_t n = lags + 1; n <= top; ++n) rest += 2.0L * std::abs(ipow(model(static_cast<long long>(n)), m));
    out.value = static_cast<double>(s);
    out.tail_bound = static_cast<double>(rest);
    out.lags = lags;
    return out;
}

ComponentSpec::ComponentSpec(HermiteExpansion expansion_, std::string label_, std::function<double(double)> direct_)
    : expansion(std::move(expansion_)), label(std::move(label_)), direct(std::move(direct_)) {
    if (expansion.is_zero()) throw std::domain_error("component '" + label + "' is the zero function");
}

LagSum sigma_sq(const HermiteExpansion& expansion, const CovarianceModel& model, std::optional<std::size_t> max_lag) {
    const int k = expansion.rank();
    const auto g = expansion.coefficients();
    LagSum out;
    for (int m = k; m < static_cast<int>(g.size()); ++m) {
        const double gm = g[static_cast<std::size_t>(m)];
        if (gm == 0.0) continue;
        const LagSum s = lag_power_sum(model, m, max_lag);
        const double c = gm * gm * factorial(m);
        out.value += c * s.value;
        out.tail_bound += c * s.tail_bound;
        out.lags = std::max(out.lags, s.lags);
    }
    return out;
}

double limit_cov_srd(const ComponentSpec& c1, const ComponentSpec& c2, const CovarianceModel& model, double t1,
                     double t2) {
    if (t1 < 0.0 || t2 < 0.0) throw std::invalid_argument("times must be nonnegative");
    const double s1 = std::sqrt(sigma_sq(c1.expansion, model).value);
    const double s2 = std::sqrt(sigma_sq(c2.expansion, model).value);
    const int from = std::max(c1.rank(), c2.rank());
    const int to = std::min(c1.expansion.truncation(), c2.expansion.truncation());
    double cross = 0.0;
    for (int m = from; m <= to; ++m) {
        const double prod = c1.expansion.coefficient(m) * c2.expansion.coefficient(m);
        if (prod == 0.0) continue;
        cross += prod * factorial(m) * lag_power_sum(model, m).value;
    }
    return std::min(t1, t2) * cross / (s1 * s2);
}

double exact_variance(const HermiteExpansion& expansion, const CovarianceModel& model, std::size_t N) {
    if (N == 0) return 0.0;
    const auto g = expansion.coefficients();
    const int M = expansion.truncation();
    std::vector<long double> sums(static_cast<std::size_t>(M) + 1, static_cast<long double>(N));
    const auto top = model.max_lag();
    const std::size_t last = top ? std::min(N - 1, *top) : N - 1;
    for (std::size_t h = 1; h <= last; ++h) {
        const long double gamma = model(static_cast<long long>(h));
        const long double mult = 2.0L * static_cast<long double>(N - h);
        long double power = 1.0L;
        for (int m = 1; m <= M; ++m) {
            power *= gamma;
            sums[static_cast<std::size_t>(m)] += mult * power;
        }
    }
    long double total = 0.0L;
    for (int m = 1; m <= M; ++m) {
        const long double gm = g[static_cast<std::size_t>(m)];
        if (gm == 0.0L) continue;
        total += gm * gm * static_cast<long double>(factorial(m)) * sums[static_cast<std::size_t>(m)];
    }
    return static_cast<double>(total);
}

double normalization(const HermiteExpansion& expansion, const CovarianceModel& model, Regime regime, std::size_t N) {
    if (N == 0) throw std::invalid_argument("N must be at least 1");
    if (regime == Regime::SRD) return std::sqrt(sigma_sq(expansion, model).value * static_cast<double>(N));
    return std::sqrt(exact_variance(expansion, model, N));
}

double b_const(int k, double d) {
    if (k < 1) throw std::invalid_argument("Hermite rank must be at least 1");
    if (!(d > 0.0 && d < 0.5)) throw std::domain_error("memory parameter d must lie in (0, 1/2)");
    const double x = k * (d - 0.5);
    const double num = (x + 1.0) * (2.0 * x + 1.0);
    if (!(num > 0.0) || classify(d, k) != Regime::LRD) {
        throw std::domain_error("b_{k,d} needs d above the LRD threshold (1/2)(1 - 1/k)");
    }
    const double base = 2.0 * std::tgamma(1.0 - 2.0 * d) * std::sin(d * std::numbers::pi);
    return std::sqrt(num / (factorial(k) * std::pow(base, k)));
}

std::size_t steps_for(std::size_t N, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("time must be finite and nonnegative");
    const double x = static_cast<double>(N) * t;
    return static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
}

double cov_limit_lemma(const CovarianceModel& model, int m, double t1, double t2, std::size_t N) {
    if (N == 0) throw std::invalid_argument("N must be at least 1");
    if (m < 1) throw std::invalid_argument("power must be at least 1");
    const auto A = static_cast<long long>(steps_for(N, t1));
    const auto B = static_cast<long long>(steps_for(N, t2));
    if (A == 0 || B == 0) return 0.0;
    long double total = 0.0L;
    // h = n1 - n2 occurs for n2 in [max(1, 1 - h), min(B, A - h)].
    for (long long h = 1 - B; h <= A - 1; ++h) {
        const long long count = std::min(B, A - h) - std::max(1LL, 1 - h) + 1;
        if (count <= 0) continue;
        const double g = gamma_or_zero(model, static_cast<std::size_t>(h < 0 ? -h : h));
        if (g == 0.0) continue;
        total += static_cast<long double>(count) * ipow(g, m);
    }
    return static_cast<double>(total / static_cast<long double>(N));
}

LimitModel::LimitModel(std::vector<ComponentSpec> specs, CovarianceModel model)
    : specs_(std::move(specs)), model_(std::move(model)) {
    if (specs_.empty()) throw std::invalid_argument("limit model needs at least one component");
    const auto d = model_.memory_parameter();
    std::map<int, double> lag_sums;
    for (std::size_t j = 0; j < specs_.size(); ++j) {
        const ComponentSpec& spec = specs_[j];
        ComponentLimit c;
        c.label = spec.label;
        c.rank = spec.rank();
        c.regime = classify(model_, c.rank);
        if (d) {
            c.d_g = memory_of_functional(*d, c.rank);
            // Brownian limits outside the LRD regime.
            c.hurst = c.regime == Regime::LRD ? hermite_hurst(*d, c.rank) : 0.5;
        }
        switch (c.regime) {
            case Regime::SRD: {
                const auto g = spec.expansion.coefficients();
                double s2 = 0.0;
                for (int m = c.rank; m < static_cast<int>(g.size()); ++m) {
                    const double gm = g[static_cast<std::size_t>(m)];
                    if (gm == 0.0) continue;
                    auto it = lag_sums.find(m);
                    if (it == lag_sums.end()) it = lag_sums.emplace(m, lag_power_sum(model_, m).value).first;
                    s2 += gm * gm * factorial(m) * it->second;
                }
                if (!(s2 > 0.0)) throw NumericalError("component '" + c.label + "' has nonpositive limit variance");
                c.sigma = std::sqrt(s2);
                c.growth_exponent = 0.5;
                srd_.push_back(j);
                break;
            }
            case Regime::Boundary:
                c.growth_exponent = 0.5;
                c.log_correction = true;
                break;
            case Regime::LRD:
                c.b = b_const(c.rank, *d);
                c.growth_exponent = *c.hurst;
                break;
        }
        components_.push_back(std::move(c));
    }

    const auto n = static_cast<Eigen::Index>(srd_.size());
    srd_corr_ = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const auto& ea = specs_[srd_[static_cast<std::size_t>(a)]].expansion;
            const auto& eb = specs_[srd_[static_cast<std::size_t>(b)]].expansion;
            const int from = std::max(ea.rank(), eb.rank());
            const int to = std::min(ea.truncation(), eb.truncation());
            double cross = 0.0;
            for (int m = from; m <= to; ++m) {
                const double prod = ea.coefficient(m) * eb.coefficient(m);
                if (prod != 0.0) cross += prod * factorial(m) * lag_sums.at(m);
            }
            const double value = cross / (*components_[srd_[static_cast<std::size_t>(a)]].sigma *
                                          *components_[srd_[static_cast<std::size_t>(b)]].sigma);
            srd_corr_(a, b) = srd_corr_(b, a) = value;
        }
    }
}

double LimitModel::normalization(std::size_t j, std::size_t N) const {
    if (j >= specs_.size()) throw std::out_of_range("component index out of range");
    if (N == 0) throw std::invalid_argument("N must be at least 1");
    const ComponentLimit& c = components_[j];
    if (c.regime == Regime::SRD) return *c.sigma * std::sqrt(static_cast<double>(N));
    return std::sqrt(exact_variance(specs_[j].expansion, model_, N));
}

std::vector<double> LimitModel::normalizations(std::size_t N) const {
    std::vector<double> out(specs_.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = normalization(j, N);
    return out;
}

std::vector<std::size_t> LimitModel::indices(Regime regime) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < components_.size(); ++j) {
        if (components_[j].regime == regime) out.push_back(j);
    }
    return out;
}

double LimitModel::srd_covariance(std::size_t i, std::size_t j, double t1, double t2) const {
    const auto pos = [this](std::size_t c) {
        const auto it = std::find(srd_.begin(), srd_.end(), c);
        if (it == srd_.end()) throw std::invalid_argument("component '" + specs_.at(c).label + "' is not SRD");
        return static_cast<Eigen::Index>(it - srd_.begin());
    };
    if (t1 < 0.0 || t2 < 0.0) throw std::invalid_argument("times must be nonnegative");
    return std::min(t1, t2) * srd_corr_(pos(i), pos(j));
}

Eigen::MatrixXd LimitModel::srd_covariance_matrix(double t1, double t2) const {
    if (t1 < 0.0 || t2 < 0.0) throw std::invalid_argument("times must be nonnegative");
    return std::min(t1, t2) * srd_corr_;
}

Eigen::MatrixXd LimitModel::srd_covariance_grid(const std::vector<double>& t_grid) const {
    const auto J = srd_corr_.rows();
    const auto T = static_cast<Eigen::Index>(t_grid.size());
    Eigen::MatrixXd out(J * T, J * T);
    for (Eigen::Index a = 0; a < T; ++a) {
        for (Eigen::Index b = 0; b < T; ++b) {
            out.block(a * J, b * J, J, J) =
                srd_covariance_matrix(t_grid[static_cast<std::size_t>(a)], t_grid[static_cast<std::size_t>(b)]);
        }
    }
    return out;
}

double LimitModel::srd_min_eigenvalue(const std::vector<double>& t_grid) const {
    const Eigen::MatrixXd cov = srd_covariance_grid(t_grid);
    if (cov.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

}  // namespace lrdlab
