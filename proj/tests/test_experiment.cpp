#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lrdlab/experiment.hpp"

using namespace lrdlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("lrdlab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

json basic() {
    return json::parse(R"({
        "model": {"kind": "power_law", "d": 0.3},
        "components": [
            {"label": "L", "builtin": "H2"},
            {"label": "S", "hermite": [0, 0, 0, 1]},
            {"label": "A", "function": {"name": "abs", "truncation": 8}}
        ],
        "t_grid": [0.5, 1.0],
        "R": 50,
        "seed": 3
    })");
}

std::string read(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing", "[experiment]") {
    const auto cfg = parse_config(basic());
    CHECK(cfg.components.size() == 3);
    CHECK(cfg.d().value() == 0.3);
    CHECK(cfg.R == 50);
    CHECK(cfg.seed == 3);
    CHECK(cfg.block("classify").empty());

    auto doc = basic();
    doc["model"]["d"] = 0.5;
    CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    doc["model"]["d"] = 0.0;
    CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    doc = basic();
    doc["components"][0]["builtin"] = "Q7";
    CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    doc = basic();
    doc["R"] = 1;
    CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    doc = basic();
    doc["t_grid"] = json::array({1.5});
    CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    doc = basic();
    doc["model"] = {{"kind", "geometric"}, {"rho", 0.5}};
    CHECK_FALSE(parse_config(doc).d().has_value());
    CHECK_THROWS_AS(parse_model(json{{"kind", "nope"}}), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), std::invalid_argument);
}

TEST_CASE("classify writes a table and a report", "[experiment]") {
    const auto cfg = parse_config(basic());
    const auto dir = scratch("classify");
    RunOptions opt;
    opt.out = dir;
    const auto res = run_command("classify", cfg, opt);
    CHECK(res.exit_code() == 0);
    CHECK(fs::exists(dir / "classify.csv"));
    CHECK(fs::exists(dir / "report.json"));
    const auto report = json::parse(read(dir / "report.json"));
    const auto& comps = report.at("components");
    REQUIRE(comps.size() == 3);
    CHECK(comps[0].at("regime") == "LRD");
    CHECK(comps[1].at("regime") == "SRD");
    CHECK(comps[2].at("rank") == 2);
    CHECK(report.at("config").at("seed") == 3);
    CHECK_FALSE(report.at("config").contains("out"));

    opt.format = TableFormat::Json;
    opt.seed = 99;
    const auto res2 = run_command("classify", cfg, opt);
    CHECK(fs::exists(dir / "classify.json"));
    CHECK(res2.report.at("config").at("seed") == 99);
    CHECK_THROWS_AS(run_command("bogus", cfg, opt), std::invalid_argument);
}

TEST_CASE("constants list lag sums per Hermite order", "[experiment]") {
    auto doc = basic();
    doc["components"] = json::parse(R"([{"label": "G", "hermite": [0, 0, 1, 2]}])");
    doc["model"]["d"] = 0.1;
    RunOptions opt;
    opt.out = scratch("constants");
    const auto res = run_command("constants", parse_config(doc), opt);
    const auto& comp = res.report.at("components").at(0);
    const auto& terms = comp.at("terms");
    REQUIRE(terms.size() == 2);
    double total = 0.0;
    for (const auto& t : terms) total += t.at("sigma_term").get<double>();
    CHECK_THAT(total, Catch::Matchers::WithinRel(comp.at("sigma_sq").get<double>(), 1e-12));

    // H2 at d = 0.3 is long-range dependent: no finite lag sum.
    doc["model"]["d"] = 0.3;
    doc["components"] = json::parse(R"([{"label": "L", "builtin": "H2"}])");
    const auto lrd = run_command("constants", parse_config(doc), opt);
    CHECK(lrd.report.at("components").at(0).at("terms").at(0).at("lag_sum").is_null());
    CHECK(lrd.report.at("components").at(0).at("b").is_number());
}

TEST_CASE("failing tests give exit code 1", "[experiment]") {
    // At N = 8, 16 the mixed contractions are nowhere near a quarter of their start.
    auto doc = basic();
    doc["contraction_decay"] = {{"case", "mixed"}, {"N_grid", {8, 16}}};
    const auto cfg = parse_config(doc);
    RunOptions opt;
    opt.out = scratch("decay");
    const auto res = run_command("contraction-decay", cfg, opt);
    CHECK(res.exit_code() == 1);
    CHECK_FALSE(res.failures.empty());

    doc["contraction_decay"] = {{"case", "disjoint"}};
    const auto ok = run_command("contraction-decay", parse_config(doc), opt);
    CHECK(ok.exit_code() == 0);
}
