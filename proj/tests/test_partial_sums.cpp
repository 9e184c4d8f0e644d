#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "lrdlab/partial_sums.hpp"

using namespace lrdlab;
using Catch::Matchers::WithinAbs;

TEST_CASE("time grid validation", "[partial_sums]") {
    const std::vector<double> ok = {0.25, 0.5, 1.0};
    CHECK_NOTHROW(validate_time_grid(ok, 8));
    CHECK_THROWS_AS(validate_time_grid(std::vector<double>{}, 8), std::invalid_argument);
    CHECK_THROWS_AS(validate_time_grid(std::vector<double>{0.5, 0.5}, 8), std::invalid_argument);
    CHECK_THROWS_AS(validate_time_grid(std::vector<double>{0.5, 1.5}, 8), std::invalid_argument);
    CHECK_THROWS_AS(validate_time_grid(std::vector<double>{0.0, 1.0}, 8), std::invalid_argument);
    CHECK_THROWS_AS(validate_time_grid(std::vector<double>{0.1, 1.0}, 8), std::invalid_argument);
}

TEST_CASE("partial sums by hand", "[partial_sums]") {
    const std::vector<double> path = {0.5, -1.0, 2.0, 0.1, -0.3, 1.2, 0.0, -2.0};
    // G = H_2 + x^2 polynomial pieces; check against explicit sums.
    const std::vector<double> sq = {0.0, 0.0, 1.0};
    std::vector<ComponentSpec> specs = {
        ComponentSpec(HermiteExpansion::hermite(2), "H2", [](double x) { return x * x - 1.0; }),
        ComponentSpec(HermiteExpansion::from_monomials(sq), "sq", [](double x) { return x * x; }),
        ComponentSpec(HermiteExpansion::hermite(1, 3.0), "lin"),
    };
    const std::vector<double> norm = {2.0, 4.0, 0.5};
    const std::vector<double> t = {0.25, 0.5, 1.0};
    const auto v = build_vector(path, specs, norm, t);
    REQUIRE(v.values.size() == 9);
    for (std::size_t a = 0; a < t.size(); ++a) {
        const std::size_t n = static_cast<std::size_t>(8 * t[a]);
        double s2 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s2 += path[i] * path[i] - 1.0;
            s1 += 3.0 * path[i];
        }
        CHECK_THAT(v(0, a), WithinAbs(s2 / 2.0, 1e-12));
        CHECK_THAT(v(1, a), WithinAbs(s2 / 4.0, 1e-12));
        CHECK_THAT(v(2, a), WithinAbs(s1 / 0.5, 1e-12));
    }
    std::vector<ComponentSpec> direct(specs.begin(), specs.begin() + 2);
    const std::vector<double> norm2 = {2.0, 4.0};
    const auto d = build_vector(path, direct, norm2, t, Evaluation::Direct);
    for (std::size_t a = 0; a < t.size(); ++a) {
        CHECK_THAT(d(0, a), WithinAbs(v(0, a), 1e-12));
        CHECK_THAT(d(1, a), WithinAbs(v(1, a), 1e-12));
    }
    CHECK_THROWS_AS(build_vector(path, specs, norm, t, Evaluation::Direct), std::invalid_argument);
    CHECK_THROWS_AS(build_vector(path, specs, norm2, t), std::invalid_argument);
}

TEST_CASE("build from a sampled path and write CSV", "[partial_sums]") {
    const LimitModel lm({ComponentSpec(HermiteExpansion::hermite(1), "X")}, CovarianceModel::power_law(0.2));
    const auto path = sample_path(lm.model(), 64, 3);
    const std::vector<double> t = {0.5, 1.0};
    const auto v = build_vector(path, lm, t);
    double s = 0.0;
    for (double x : path.values) s += x;
    CHECK_THAT(v(0, 1), WithinAbs(s / lm.normalization(0, 64), 1e-12));
    std::ostringstream os;
    write_csv(v, os);
    const std::string text = os.str();
    CHECK(text.rfind("t,X\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
