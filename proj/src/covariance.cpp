#include "lrdlab/covariance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "fft.hpp"
#include "lrdlab/errors.hpp"
#include "lrdlab/rng.hpp"

namespace lrdlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

CovarianceModel CovarianceModel::power_law(double d) {
    if (!(d > 0.0 && d < 0.5)) {
        throw std::domain_error("power-law memory parameter d must lie in (0, 1/2)");
    }
    return CovarianceModel(PowerLaw{d});
}

CovarianceModel CovarianceModel::geometric(double rho) {
    if (!(rho > -1.0 && rho < 1.0)) {
        throw std::domain_error("geometric lag-1 correlation must lie in (-1, 1)");
    }
    return CovarianceModel(Geometric{rho});
}

CovarianceModel CovarianceModel::tabulated(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("tabulated autocovariance is empty");
    if (std::abs(values.front() - 1.0) > 1e-12) {
        throw std::invalid_argument("tabulated autocovariance must have gamma(0) = 1");
    }
    return CovarianceModel(Tabulated{std::move(values)});
}

CovarianceModel CovarianceModel::fractional_gaussian_noise(double hurst, std::size_t max_lag) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw std::domain_error("Hurst index must lie in (0, 1)");
    std::vector<double> v(max_lag + 1);
    const double two_h = 2.0 * hurst;
    for (std::size_t h = 0; h <= max_lag; ++h) {
        const double x = static_cast<double>(h);
        v[h] = 0.5 * (std::pow(x + 1.0, two_h) - 2.0 * std::pow(x, two_h) +
                      std::pow(std::abs(x - 1.0), two_h));
    }
    v[0] = 1.0;
    return tabulated(std::move(v));
}

double CovarianceModel::operator()(long long lag) const {
    const auto h = static_cast<unsigned long long>(lag < 0 ? -lag : lag);
    return std::visit(
        overloaded{
            [h](const PowerLaw& m) {
                return h == 0 ? 1.0 : std::pow(1.0 + static_cast<double>(h), 2.0 * m.d - 1.0);
            },
            [h](const Geometric& m) { return h == 0 ? 1.0 : std::pow(m.rho, static_cast<double>(h)); },
            [h](const Tabulated& m) {
                if (h >= m.values.size()) {
                    throw std::out_of_range("tabulated autocovariance has no value for lag " +
                                            std::to_string(h));
                }
                return m.values[h];
            },
        },
        kind_);
}

std::optional<double> CovarianceModel::memory_parameter() const noexcept {
    if (const auto* p = std::get_if<PowerLaw>(&kind_)) return p->d;
    return std::nullopt;
}

std::optional<std::size_t> CovarianceModel::max_lag() const noexcept {
    if (const auto* t = std::get_if<Tabulated>(&kind_)) return t->values.size() - 1;
    return std::nullopt;
}

std::string CovarianceModel::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const PowerLaw& m) { os << "power_law(d=" << m.d << ")"; },
                   [&](const Geometric& m) { os << "geometric(rho=" << m.rho << ")"; },
                   [&](const Tabulated& m) { os << "tabulated(" << m.values.size() << " lags)"; },
               },
               kind_);
    return os.str();
}

double autocovariance(const CovarianceModel& model, long long lag) { return model(lag); }

std::vector<double> spectral_density_grid(const CovarianceModel& model, std::size_t M) {
    if (M < 2) throw std::invalid_argument("spectral grid size must be at least 2");
    std::vector<std::complex<double>> row(M);
    for (std::size_t k = 0; k < M; ++k) {
        const std::size_t lag = std::min(k, M - k);
        row[k] = model(static_cast<long long>(lag));
    }
    detail::fft_forward(row);
    std::vector<double> eig(M);
    std::transform(row.begin(), row.end(), eig.begin(), [](auto z) { return z.real(); });
    return eig;
}

double lag_weighted_sum(const CovarianceModel& model, std::size_t N, int power) {
    if (N == 0) return 0.0;
    long double total = static_cast<long double>(N);
    for (std::size_t h = 1; h < N; ++h) {
        const double g = model(static_cast<long long>(h));
        total += 2.0L * static_cast<long double>(N - h) * std::pow(static_cast<long double>(g), power);
    }
    return static_cast<double>(total);
}

CirculantSampler::CirculantSampler(CovarianceModel model, std::size_t N)
    : model_(std::move(model)), n_(N) {
    if (N == 0) throw std::invalid_argument("path length must be at least 1");
    if (N == 1) {
        eigenvalues_ = {1.0};
        scale_ = {1.0};
        return;
    }
    std::size_t m = std::bit_ceil(2 * (N - 1));
    const auto table_lag = model_.max_lag();
    if (table_lag && *table_lag < m / 2) {
        if (*table_lag < N - 1) {
            throw std::out_of_range("tabulated autocovariance is missing lags needed for length " +
                                    std::to_string(N));
        }
        m = 2 * (N - 1);
    }

    for (int attempt = 0;; ++attempt) {
        std::vector<double> eig = spectral_density_grid(model_, m);
        const double top = *std::max_element(eig.begin(), eig.end());
        const double low = *std::min_element(eig.begin(), eig.end());
        if (low >= -kClipTolerance * top) {
            for (double& v : eig) {
                if (v < 0.0) {
                    v = 0.0;
                    ++clipped_;
                }
            }
            m_ = m;
            eigenvalues_ = std::move(eig);
            break;
        }
        const bool can_grow = !table_lag || *table_lag >= m;
        if (attempt >= kMaxDoublings || !can_grow) {
            std::ostringstream os;
            os << "circulant embedding of " << model_.describe() << " for N=" << N
               << " has eigenvalue " << low << " below -" << kClipTolerance << " * " << top
               << " at embedding size " << m << " after " << attempt << " doublings";
            throw NumericalError(os.str());
        }
        m *= 2;
    }

    scale_.resize(m_);
    const double inv_m = 1.0 / static_cast<double>(m_);
    for (std::size_t j = 0; j < m_; ++j) scale_[j] = std::sqrt(eigenvalues_[j] * inv_m);
}

void CirculantSampler::sample_into(std::uint64_t seed, std::span<double> out) const {
    if (out.size() != n_) throw std::invalid_argument("output span does not match path length");
    NormalStream stream(seed);
    if (n_ == 1) {
        out[0] = stream.normal();
        return;
    }
    std::vector<std::complex<double>> z(m_);
    for (std::size_t j = 0; j < m_; ++j) {
        const double re = stream.normal();
        const double im = stream.normal();
        z[j] = std::complex<double>(scale_[j] * re, scale_[j] * im);
    }
    detail::fft_forward(z);
    for (std::size_t n = 0; n < n_; ++n) out[n] = z[n].real();
}

GaussianPath CirculantSampler::sample(std::uint64_t seed) const {
    GaussianPath path{std::vector<double>(n_), model_, seed};
    sample_into(seed, path.values);
    return path;
}

GaussianPath sample_path(const CovarianceModel& model, std::size_t N, std::uint64_t seed) {
    return CirculantSampler(model, N).sample(seed);
}

}  // namespace lrdlab
