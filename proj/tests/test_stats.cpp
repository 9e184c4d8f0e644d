#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lrdlab/rng.hpp"
#include "lrdlab/stats.hpp"

using namespace lrdlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Kolmogorov survival function", "[stats]") {
    CHECK(kolmogorov_sf(0.0) == 1.0);
    CHECK_THAT(kolmogorov_sf(1.36), WithinAbs(0.0494, 1e-3));
    CHECK_THAT(kolmogorov_sf(1.63), WithinAbs(0.0098, 1e-3));
    CHECK_THAT(normal_cdf(1.96), WithinAbs(0.975, 1e-4));
}

TEST_CASE("KS tests", "[stats]") {
    NormalStream rng(1);
    std::vector<double> x(2000), y(2000);
    rng.fill_normal(x);
    rng.fill_normal(y);
    CHECK(ks_test_normal(x).p_value > 0.01);
    CHECK(ks_test_two_sample(x, y).p_value > 0.01);
    for (auto& v : y) v = v * v;
    CHECK(ks_test_normal(y).p_value < 1e-6);
    CHECK(ks_test_two_sample(x, y).p_value < 1e-6);
    for (auto& v : x) v = 2.0 + 3.0 * v;
    CHECK(ks_test_normal(x, 2.0, 3.0).p_value > 0.01);
}

TEST_CASE("sample moments", "[stats]") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 10.0};
    const auto m = sample_moments(x);
    CHECK(m.n == 5);
    CHECK_THAT(m.mean, WithinAbs(4.0, 1e-15));
    CHECK_THAT(m.variance, WithinAbs(12.5, 1e-12));
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        m2 += std::pow(v - 4.0, 2) / 5;
        m3 += std::pow(v - 4.0, 3) / 5;
        m4 += std::pow(v - 4.0, 4) / 5;
    }
    CHECK_THAT(m.skewness, WithinRel(m3 / std::pow(m2, 1.5), 1e-12));
    CHECK_THAT(m.excess_kurtosis, WithinRel(m4 / (m2 * m2) - 3.0, 1e-12));
}

TEST_CASE("bootstrap standard error of the mean", "[stats]") {
    NormalStream rng(4);
    std::vector<double> x(400);
    rng.fill_normal(x);
    const double se = bootstrap_se(
        x.size(),
        [&](std::span<const std::size_t> idx) {
            double s = 0.0;
            for (auto i : idx) s += x[i];
            return s / double(idx.size());
        },
        400, 9);
    CHECK_THAT(se, WithinRel(std::sqrt(sample_moments(x).variance / 400.0), 0.2));
}

TEST_CASE("distance correlation", "[stats]") {
    NormalStream rng(8);
    const int n = 300;
    Eigen::MatrixXd a(n, 1), b(n, 1), c(n, 1);
    for (int i = 0; i < n; ++i) {
        a(i, 0) = rng.normal();
        b(i, 0) = rng.normal();
        c(i, 0) = a(i, 0) * a(i, 0);
    }
    CHECK_THAT(distance_correlation(a, a), WithinAbs(1.0, 1e-12));
    CHECK(distance_correlation(a, b) < 0.2);
    const auto indep = dcor_permutation_test(a, b, 199, 3);
    CHECK(indep.p_value > 0.01);
    CHECK(indep.permutations == 199);
    // Uncorrelated but dependent.
    const auto dep = dcor_permutation_test(a, c, 199, 3);
    CHECK(dep.p_value == 1.0 / 200.0);
    CHECK(dcor_permutation_test(a, c, 199, 3).statistic == dep.statistic);
}
