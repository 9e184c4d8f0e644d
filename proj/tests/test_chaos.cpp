#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lrdlab/chaos.hpp"
#include "lrdlab/rng.hpp"
#include "lrdlab/scaling.hpp"

using namespace lrdlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_weights(std::size_t n, NormalStream& rng) {
    std::vector<double> w(n);
    for (auto& v : w) v = 0.2 + rng.uniform();
    return w;
}

ChaosKernel random_kernel(int order, const std::vector<double>& w, NormalStream& rng, bool sym = true) {
    std::size_t size = 1;
    for (int i = 0; i < order; ++i) size *= w.size();
    std::vector<double> v(size);
    for (auto& x : v) x = rng.normal();
    ChaosKernel k(order, w, v);
    return sym ? symmetrize(k) : k;
}

double factorial(int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
}

}  // namespace

TEST_CASE("kernel construction and indexing", "[chaos]") {
    ChaosKernel k(2, {1.0, 2.0, 0.5}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(k({0, 2}) == 3.0);
    CHECK(k({2, 0}) == 7.0);
    k({1, 1}) = -1.0;
    CHECK(k({1, 1}) == -1.0);
    CHECK_THROWS_AS(k({3, 0}), std::out_of_range);
    CHECK_THROWS_AS(ChaosKernel(2, {1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(ChaosKernel(1, {0.0}, {1.0}), std::invalid_argument);
    CHECK_FALSE(k.spot_check_symmetry(1));
    CHECK(symmetrize(k).spot_check_symmetry(1));
    CHECK(ChaosKernel::zeros(3, {1.0, 1.0}).is_zero());
    CHECK_THAT(ChaosKernel::vector({2.0, 0.5}, {1.0, 2.0}).norm_sq(), WithinAbs(4.0, 1e-15));
}

TEST_CASE("contractions at the ends of the range", "[chaos]") {
    NormalStream rng(11);
    const auto w = random_weights(4, rng);
    const auto f = random_kernel(2, w, rng);
    const auto g = random_kernel(2, w, rng);
    const auto full = contract(f, g, 2);
    CHECK(full.order() == 0);
    CHECK_THAT(full.values()[0], WithinAbs(inner(f, g), 1e-12));
    const auto tensor = contract(f, g, 0);
    CHECK(tensor.order() == 4);
    CHECK_THAT(tensor({1, 2, 3, 0}), WithinAbs(f({1, 2}) * g({3, 0}), 1e-14));
    CHECK_THAT(tensor.norm(), WithinRel(f.norm() * g.norm(), 1e-12));
    CHECK_THAT(independence_criterion(f, g), WithinAbs(contract(f, g, 1).norm(), 1e-14));
    CHECK_THROWS_AS(contract(f, g, 3), std::invalid_argument);
}

TEST_CASE("symmetrization is an idempotent projection", "[chaos]") {
    NormalStream rng(3);
    const auto w = random_weights(3, rng);
    const auto raw = random_kernel(3, w, rng, false);
    const auto s = symmetrize(raw);
    const auto s2 = symmetrize(s);
    for (std::size_t i = 0; i < s.values().size(); ++i) CHECK_THAT(s2.values()[i], WithinAbs(s.values()[i], 1e-14));
    CHECK(s.norm() <= raw.norm() + 1e-12);
    CHECK_THAT(inner(raw, s), WithinRel(s.norm_sq(), 1e-12));
}

TEST_CASE("Isserlis moments", "[chaos]") {
    Eigen::MatrixXd cov(2, 2);
    cov << 2.0, 0.6, 0.6, 1.5;
    const std::vector<int> four = {0, 0, 0, 0};
    CHECK_THAT(wick_moment(four, cov), WithinAbs(3.0 * 4.0, 1e-14));
    const std::vector<int> mix = {0, 0, 1, 1};
    CHECK_THAT(wick_moment(mix, cov), WithinAbs(2.0 * 1.5 + 2.0 * 0.36, 1e-14));
    const std::vector<int> odd = {0, 1, 1};
    CHECK(wick_moment(odd, cov) == 0.0);
    const std::vector<int> six = {1, 1, 1, 1, 1, 1};
    CHECK_THAT(wick_moment(six, cov), WithinRel(15.0 * std::pow(1.5, 3), 1e-14));
    const std::vector<int> none = {};
    CHECK(wick_moment(none, cov) == 1.0);
    const std::vector<int> nine(9, 0);
    CHECK_THROWS_AS(wick_moment(nine, cov), std::invalid_argument);
}

TEST_CASE("discrete multiple integrals", "[chaos]") {
    // Off-diagonal second order integral by hand.
    ChaosKernel f(2, {0.5, 2.0}, {0.0, 1.5, 1.5, 0.0}, true);
    const std::vector<double> xi = {0.7, -1.2};
    CHECK_THAT(discrete_ito(f, xi), WithinAbs(2.0 * 1.5 * std::sqrt(0.5 * 2.0) * 0.7 * -1.2, 1e-14));
    // Diagonal mass is Wick ordered: w (xi^2 - 1).
    ChaosKernel d(2, {0.5}, {3.0}, true);
    const std::vector<double> one = {1.3};
    CHECK_THAT(discrete_ito(d, one), WithinAbs(3.0 * 0.5 * (1.3 * 1.3 - 1.0), 1e-14));
    // Variance p! ||f||^2 by Monte Carlo.
    NormalStream rng(5);
    const auto w = random_weights(3, rng);
    const auto g = random_kernel(3, w, rng);
    std::vector<double> z(3);
    double s = 0.0, s2 = 0.0;
    const int R = 40000;
    for (int r = 0; r < R; ++r) {
        rng.fill_normal(z);
        const double v = discrete_ito(g, z);
        s += v;
        s2 += v * v;
    }
    const double var = 6.0 * g.norm_sq();
    CHECK_THAT(s / R, WithinAbs(0.0, 5.0 * std::sqrt(var / R)));
    CHECK_THAT(s2 / R, WithinRel(var, 0.1));
}

TEST_CASE("product formula holds exactly", "[chaos]") {
    NormalStream rng(2024);
    for (int p = 1; p <= 5; ++p) {
        for (int q = 1; p + q <= 6; ++q) {
            for (std::size_t n : {1, 2, 3}) {
                const auto w = random_weights(n, rng);
                const auto f = random_kernel(p, w, rng);
                const auto g = random_kernel(q, w, rng);
                CHECK(product_formula_check(f, g) < 1e-10);
            }
        }
    }
    const auto w = random_weights(7, rng);
    CHECK_THROWS_AS(product_formula_check(random_kernel(1, w, rng), random_kernel(1, w, rng)), std::invalid_argument);
}

TEST_CASE("contraction norm identities on random kernels", "[chaos]") {
    NormalStream rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 1 + static_cast<int>(rng.below(3));
        const int q = 1 + static_cast<int>(rng.below(3));
        const auto w = random_weights(2 + rng.below(3), rng);
        const auto f = random_kernel(p, w, rng);
        const auto g = random_kernel(q, w, rng);
        for (int r = 1; r <= std::min(p, q); ++r) {
            const auto c = contract(f, g, r);
            // Cauchy-Schwarz.
            CHECK(c.norm() <= f.norm() * g.norm() * (1.0 + 1e-10));
            // ||f (x)_r g||^2 = <f (x)_{p-r} f, g (x)_{q-r} g>.
            const double lhs = c.norm_sq();
            const double rhs = inner(contract(f, f, p - r), contract(g, g, q - r));
            CHECK_THAT(lhs, WithinAbs(rhs, 1e-10 * std::max(1.0, std::abs(lhs))));
        }
    }
}

TEST_CASE("partial-sum kernels have unit variance", "[chaos]") {
    const auto model = CovarianceModel::power_law(0.3);
    for (int m : {1, 2, 3}) {
        const auto f = partial_sum_kernel(m, 16, 1.0, model);
        CHECK(f.order() == m);
        CHECK(f.symmetric());
        CHECK(f.spot_check_symmetry(4));
        CHECK_THAT(factorial(m) * f.norm_sq(), WithinAbs(1.0, 1e-10));
    }
    CHECK_THROWS_AS(partial_sum_kernel(3, 1024, 1.0, model), std::invalid_argument);
}

TEST_CASE("Gram route matches dense contractions", "[chaos]") {
    const auto model = CovarianceModel::power_law(0.3);
    for (std::size_t N : {8, 12}) {
        const auto f = partial_sum_kernel(3, N, 1.0, model);
        const auto g = partial_sum_kernel(2, N, 1.0, model);
        for (int r : {1, 2}) {
            CHECK_THAT(partial_sum_contraction_norm(3, 2, r, model, N), WithinRel(contract(f, g, r).norm(), 1e-9));
        }
        const auto h = partial_sum_kernel(2, N, 1.0, model, 3.0);
        const double sd = std::sqrt(exact_variance(HermiteExpansion::hermite(2), model, N));
        CHECK_THAT(h.norm() * 3.0, WithinRel(partial_sum_kernel(2, N, 1.0, model).norm() * sd, 1e-12));
    }
}

TEST_CASE("decay tables do not depend on the thread count", "[chaos]") {
    const auto model = CovarianceModel::power_law(0.3);
    const std::vector<std::size_t> Ns = {16, 32, 64};
    const std::vector<int> rs = {1, 2};
    const auto a = asymptotic_independence_decay(3, 2, model, Ns, rs, 1.0, 1);
    const auto b = asymptotic_independence_decay(3, 2, model, Ns, rs, 1.0, 3);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].N == b[i].N);
        CHECK(a[i].r == b[i].r);
        CHECK(a[i].norm == b[i].norm);
    }
    CHECK(a[0].N == 16);
    CHECK(a[1].r == 2);
    const auto s = summarize_decay(a);
    REQUIRE(s.size() == 2);
    CHECK(s[0].r == 1);
    CHECK_THAT(s[0].ratio, WithinRel(a[4].norm / a[0].norm, 1e-15));

    std::vector<ChaosKernel> fs, gs;
    for (std::size_t N : {4, 8}) {
        fs.push_back(partial_sum_kernel(2, N, 1.0, model));
        gs.push_back(partial_sum_kernel(1, N, 1.0, model));
    }
    const std::vector<std::size_t> small = {4, 8};
    const std::vector<int> r1 = {1};
    const auto dense = asymptotic_independence_decay(small, fs, gs, r1);
    CHECK_THAT(dense[1].norm, WithinRel(partial_sum_contraction_norm(2, 1, 1, model, 8), 1e-9));
}
