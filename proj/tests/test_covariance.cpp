#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lrdlab/covariance.hpp"
#include "lrdlab/errors.hpp"
#include "lrdlab/rng.hpp"

using namespace lrdlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("power-law autocovariance values", "[covariance]") {
    const auto m = CovarianceModel::power_law(0.3);
    CHECK(m(0) == 1.0);
    CHECK_THAT(m(3), WithinRel(std::pow(4.0, -0.4), 1e-15));
    CHECK(m(-3) == m(3));
    CHECK(m.memory_parameter().value() == 0.3);
    CHECK_FALSE(m.max_lag().has_value());
}

TEST_CASE("model parameters are validated", "[covariance]") {
    CHECK_THROWS_AS(CovarianceModel::power_law(0.0), std::domain_error);
    CHECK_THROWS_AS(CovarianceModel::power_law(0.5), std::domain_error);
    CHECK_THROWS_AS(CovarianceModel::geometric(1.0), std::domain_error);
    CHECK_THROWS_AS(CovarianceModel::tabulated({}), std::invalid_argument);
    CHECK_THROWS_AS(CovarianceModel::tabulated({0.5, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(CovarianceModel::fractional_gaussian_noise(1.0, 10), std::domain_error);
}

TEST_CASE("geometric and tabulated models", "[covariance]") {
    const auto g = CovarianceModel::geometric(0.5);
    CHECK_THAT(g(4), WithinRel(0.0625, 1e-15));
    CHECK_FALSE(g.memory_parameter().has_value());

    const auto t = CovarianceModel::tabulated({1.0, 0.4, 0.1});
    CHECK(t(2) == 0.1);
    CHECK(t.max_lag().value() == 2);
    CHECK_THROWS_AS(t(3), std::out_of_range);
}

TEST_CASE("fractional Gaussian noise increments", "[covariance]") {
    const double H = 0.8;
    const auto f = CovarianceModel::fractional_gaussian_noise(H, 50);
    for (int n : {1, 2, 7, 50}) {
        const double expect =
            0.5 * (std::pow(n + 1.0, 2 * H) - 2.0 * std::pow(double(n), 2 * H) + std::pow(n - 1.0, 2 * H));
        CHECK_THAT(f(n), WithinRel(expect, 1e-12));
    }
}

TEST_CASE("lag-weighted sum matches the double sum", "[covariance]") {
    const auto m = CovarianceModel::power_law(0.2);
    const std::size_t N = 40;
    for (int power : {1, 2, 3}) {
        double brute = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < N; ++j) brute += std::pow(m(long(i) - long(j)), power);
        }
        CHECK_THAT(lag_weighted_sum(m, N, power), WithinRel(brute, 1e-12));
    }
}

TEST_CASE("circulant spectrum of a power law is nonnegative", "[covariance]") {
    for (double d : {0.05, 0.25, 0.45}) {
        const auto lam = spectral_density_grid(CovarianceModel::power_law(d), 1 << 12);
        double mx = 0.0, mn = 0.0;
        for (double v : lam) {
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        CHECK(mn >= -1e-10 * mx);
    }
}

TEST_CASE("sampler is deterministic per seed", "[covariance]") {
    const CirculantSampler s(CovarianceModel::power_law(0.3), 1000);
    CHECK(s.embedding_size() >= 2 * (1000 - 1));
    CHECK((s.embedding_size() & (s.embedding_size() - 1)) == 0);
    CHECK(s.clipped_count() == 0);
    const auto a = s.sample(42).values;
    const auto b = s.sample(42).values;
    const auto c = s.sample(43).values;
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.size() == 1000);
}

TEST_CASE("sampler reproduces the target covariance", "[covariance]") {
    const auto model = CovarianceModel::power_law(0.35);
    const std::size_t N = 64;
    const std::size_t R = 4000;
    const CirculantSampler s(model, N);
    const std::vector<std::size_t> lags = {0, 1, 5, 63};
    std::vector<double> acc(lags.size(), 0.0);
    std::vector<double> path(N);
    for (std::size_t r = 0; r < R; ++r) {
        s.sample_into(derive_seed(9, r), path);
        for (std::size_t i = 0; i < lags.size(); ++i) acc[i] += path[0] * path[lags[i]];
    }
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const double g = model(long(lags[i]));
        const double se = std::sqrt((1.0 + g * g) / double(R));
        CHECK_THAT(acc[i] / double(R), WithinAbs(g, 4.0 * se));
    }
}

TEST_CASE("sampler handles tables and rejects short ones", "[covariance]") {
    const auto fgn = CovarianceModel::fractional_gaussian_noise(0.7, 255);
    const CirculantSampler s(fgn, 256);
    CHECK(s.sample(1).values.size() == 256);
    CHECK_THROWS_AS(CirculantSampler(CovarianceModel::tabulated({1.0, 0.5}), 10), std::out_of_range);
    CHECK_THROWS_AS(CirculantSampler(CovarianceModel::power_law(0.2), 0), std::invalid_argument);
}

TEST_CASE("indefinite tables raise a numerical error", "[covariance]") {
    // |gamma(1)| > 1 cannot be a correlation.
    CHECK_THROWS_AS(CirculantSampler(CovarianceModel::tabulated({1.0, 1.5, 0.0, 0.0}), 4), NumericalError);
}

TEST_CASE("derived seeds are distinct and stable", "[rng]") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    NormalStream a(5), b(5);
    for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
    NormalStream u(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK((x > 0.0 && x <= 1.0));
        CHECK(u.below(3) < 3);
    }
}
