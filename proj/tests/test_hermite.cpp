#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "lrdlab/hermite.hpp"

using namespace lrdlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double factorial(int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
}

}  // namespace

TEST_CASE("probabilists' Hermite polynomials", "[hermite]") {
    for (double x : {-2.5, -0.3, 0.0, 1.0, 3.7}) {
        CHECK(hermite_poly(0, x) == 1.0);
        CHECK(hermite_poly(1, x) == x);
        CHECK_THAT(hermite_poly(2, x), WithinAbs(x * x - 1.0, 1e-12));
        CHECK_THAT(hermite_poly(3, x), WithinAbs(x * x * x - 3.0 * x, 1e-12));
        CHECK_THAT(hermite_poly(4, x), WithinAbs(std::pow(x, 4) - 6 * x * x + 3, 1e-11));
        std::vector<double> v(8);
        hermite_values(x, v);
        for (int m = 0; m < 8; ++m) CHECK_THAT(v[m], WithinAbs(hermite_poly(m, x), 1e-9 * std::max(1.0, std::abs(v[m]))));
    }
    CHECK_THROWS_AS(hermite_poly(-1, 0.0), std::invalid_argument);
}

TEST_CASE("Gauss-Hermite rule integrates Gaussian moments", "[hermite]") {
    const auto& rule = gauss_hermite_rule(40);
    REQUIRE(rule.nodes.size() == 40);
    double w = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
        const double x = rule.nodes[i];
        w += rule.weights[i];
        m2 += rule.weights[i] * x * x;
        m4 += rule.weights[i] * std::pow(x, 4);
        m6 += rule.weights[i] * std::pow(x, 6);
    }
    CHECK_THAT(w, WithinAbs(1.0, 1e-13));
    CHECK_THAT(m2, WithinAbs(1.0, 1e-12));
    CHECK_THAT(m4, WithinAbs(3.0, 1e-11));
    CHECK_THAT(m6, WithinAbs(15.0, 1e-10));
    CHECK(&gauss_hermite_rule(40) == &rule);
}

TEST_CASE("expand recovers H_m exactly", "[hermite]") {
    for (int m = 1; m <= 10; ++m) {
        const auto e = expand([m](double x) { return hermite_poly(m, x); }, 12);
        for (int k = 0; k <= 12; ++k) {
            CHECK_THAT(e.coefficient(k), WithinAbs(k == m ? 1.0 : 0.0, 1e-8));
        }
        CHECK(e.rank() == m);
    }
}

TEST_CASE("Mehler identity by two-dimensional quadrature", "[hermite]") {
    const auto& rule = gauss_hermite_rule(60);
    for (double rho : {-0.7, 0.2, 0.9}) {
        const double s = std::sqrt(1.0 - rho * rho);
        for (int m = 0; m <= 6; ++m) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                    const double x = rule.nodes[i];
                    const double y = rho * x + s * rule.nodes[j];
                    acc += rule.weights[i] * rule.weights[j] * hermite_poly(m, x) * hermite_poly(m, y);
                }
            }
            CHECK_THAT(acc, WithinAbs(factorial(m) * std::pow(rho, m), 1e-6));
        }
    }
}

TEST_CASE("monomials convert exactly", "[hermite]") {
    // x^2 = H_2 + 1, x^3 = H_3 + 3 H_1.
    const std::vector<double> sq = {0.0, 0.0, 1.0};
    const auto e2 = HermiteExpansion::from_monomials(sq);
    CHECK(e2.mean() == 1.0);
    CHECK(e2.coefficient(0) == 0.0);
    CHECK(e2.coefficient(2) == 1.0);
    CHECK(e2.rank() == 2);

    const std::vector<double> cube = {0.0, 0.0, 0.0, 1.0};
    const auto e3 = HermiteExpansion::from_monomials(cube);
    CHECK(e3.coefficient(1) == 3.0);
    CHECK(e3.coefficient(3) == 1.0);
    CHECK(e3.rank() == 1);
    CHECK_THAT(e3.l2_norm_sq(), WithinAbs(15.0, 1e-12));
    for (double x : {-1.3, 0.4, 2.0}) CHECK_THAT(e3(x), WithinAbs(x * x * x, 1e-12));
}

TEST_CASE("expansion of a non-polynomial function", "[hermite]") {
    // exp(x) = e^{1/2} sum H_k(x) / k!.
    const auto e = expand([](double x) { return std::exp(x); }, 14);
    CHECK_THAT(e.mean(), WithinRel(std::exp(0.5), 1e-12));
    for (int k = 1; k <= 14; ++k) CHECK_THAT(e.coefficient(k), WithinRel(std::exp(0.5) / factorial(k), 1e-8));
    // |x| is even: rank 2, g_2 = E|X|(X^2-1)/2 = 1/sqrt(2 pi).
    const auto a = expand([](double x) { return std::abs(x); }, 8);
    CHECK(a.rank() == 2);
    CHECK_THAT(a.coefficient(2), WithinAbs(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-6));
}

TEST_CASE("Hermite rank", "[hermite]") {
    CHECK(HermiteExpansion::from_coefficients({5.0, 0.0, 0.0, 2.0}).rank() == 3);
    CHECK(hermite_rank(HermiteExpansion::hermite(4, 2.0)) == 4);
    const auto tiny = HermiteExpansion::from_coefficients({0.0, 1e-9, 1.0});
    CHECK(tiny.rank() == 2);
    CHECK(tiny.coefficient(1) == 0.0);
    const auto zero = HermiteExpansion::from_coefficients({3.0, 0.0});
    CHECK(zero.is_zero());
    CHECK_THROWS_AS(zero.rank(), std::domain_error);
    CHECK_THROWS_AS(hermite_rank(HermiteExpansion::from_coefficients({1.0, 1.0}, false)), std::invalid_argument);
}

TEST_CASE("L2 norm and scaling", "[hermite]") {
    const auto e = HermiteExpansion::from_coefficients({0.0, 0.0, 2.0, 1.0});
    CHECK_THAT(e.l2_norm_sq(), WithinAbs(4.0 * 2.0 + 6.0, 1e-12));
    const auto s = e.scaled(3.0);
    CHECK_THAT(s.l2_norm_sq(), WithinAbs(9.0 * e.l2_norm_sq(), 1e-12));
}

TEST_CASE("tightness series", "[hermite]") {
    CHECK(tightness_condition(HermiteExpansion::hermite(3)).convergent);
    std::vector<double> g(16);
    for (int k = 1; k < 16; ++k) g[k] = 1.0 / factorial(k);
    const auto ok = tightness_condition(HermiteExpansion::from_coefficients(g));
    CHECK(ok.convergent);
    CHECK(ok.tail_ratio < 1.0);
    for (int k = 1; k < 16; ++k) g[k] = 1.0 / std::sqrt(factorial(k));
    const auto bad = tightness_condition(HermiteExpansion::from_coefficients(g));
    CHECK_FALSE(bad.convergent);
    CHECK_THAT(bad.tail_ratio, WithinRel(std::sqrt(3.0), 1e-9));
    REQUIRE(bad.partial_sums.size() == 15);
    CHECK(bad.partial_sums.back() > bad.partial_sums.front());
}
