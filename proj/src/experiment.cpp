#include "lrdlab/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "format.hpp"
#include "lrdlab/chaos.hpp"
#include "lrdlab/harness.hpp"
#include "lrdlab/hermite.hpp"
#include "lrdlab/hermite_process.hpp"

namespace lrdlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("config: " + what); }

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) bad(std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::vector<double> numbers(const json& j, const char* what) {
    if (!j.is_array()) bad(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) bad(std::string(what) + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::size_t count(const json& j, const char* what) {
    if (!j.is_number_integer() || j.get<long long>() < 1) bad(std::string(what) + " must be a positive integer");
    return j.get<std::size_t>();
}

std::vector<std::size_t> counts(const json& j, const char* what) {
    if (!j.is_array()) bad(std::string(what) + " must be an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& v : j) out.push_back(count(v, what));
    return out;
}

std::vector<std::pair<double, double>> t_pairs_of(const json& block, const std::vector<double>& t_grid) {
    std::vector<std::pair<double, double>> out;
    if (block.contains("t_pairs")) {
        for (const auto& p : block.at("t_pairs")) {
            const auto v = numbers(p, "t_pairs entry");
            if (v.size() != 2) bad("t_pairs entries must have two times");
            out.emplace_back(v[0], v[1]);
        }
    } else {
        for (std::size_t a = 0; a < t_grid.size(); ++a) {
            for (std::size_t b = a; b < t_grid.size(); ++b) out.emplace_back(t_grid[a], t_grid[b]);
        }
    }
    if (out.empty()) bad("no t-pairs");
    return out;
}

int builtin_order(std::string name) {
    name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); }), name.end());
    std::string digits;
    if (name.rfind("Hm(", 0) == 0 && name.back() == ')') {
        digits = name.substr(3, name.size() - 4);
    } else if (name.rfind("H_", 0) == 0) {
        digits = name.substr(2);
    } else if (!name.empty() && name[0] == 'H') {
        digits = name.substr(1);
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
        bad("unknown builtin component '" + name + "'");
    }
    const int m = std::stoi(digits);
    if (m < 1 || m > 30) bad("builtin Hermite order must be in 1..30");
    return m;
}

std::function<double(double)> named_function(const std::string& name) {
    if (name == "abs") return [](double x) { return std::abs(x); };
    if (name == "sign") return [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    if (name == "exp") return [](double x) { return std::exp(x); };
    if (name == "cos") return [](double x) { return std::cos(x); };
    if (name == "sin") return [](double x) { return std::sin(x); };
    if (name == "square") return [](double x) { return x * x; };
    bad("unknown function '" + name + "'");
}

void write_text(const fs::path& path, const std::string& text, RunResult& result) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    result.files.push_back(path);
}

std::string fmt(double x) { return detail::format_double(x); }

// Table with a header, written as CSV or as a JSON array of row objects.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<json>> rows;

    void write(const fs::path& stem, TableFormat format, RunResult& result) const {
        if (format == TableFormat::Csv) {
            std::ostringstream os;
            for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << detail::csv_field(header[i]);
            os << '\n';
            for (const auto& row : rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    if (i) os << ',';
                    const auto& v = row[i];
                    if (v.is_number_float()) {
                        os << fmt(v.get<double>());
                    } else if (v.is_string()) {
                        os << detail::csv_field(v.get<std::string>());
                    } else if (v.is_null()) {
                        os << "";
                    } else {
                        os << v.dump();
                    }
                }
                os << '\n';
            }
            write_text(fs::path(stem).concat(".csv"), os.str(), result);
        } else {
            json arr = json::array();
            for (const auto& row : rows) {
                json obj;
                for (std::size_t i = 0; i < row.size(); ++i) obj[header[i]] = row[i];
                arr.push_back(std::move(obj));
            }
            write_text(fs::path(stem).concat(".json"), arr.dump(2) + "\n", result);
        }
    }
};

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void add_test(RunResult& result, json& tests, const std::string& name, bool pass, json detail) {
    detail["name"] = name;
    detail["verdict"] = pass ? "pass" : "fail";
    tests.push_back(std::move(detail));
    if (!pass) result.failures.push_back(name);
}

const LimitModel limit_of(const ExperimentConfig& cfg) {
    if (!cfg.model) bad("a covariance model is required");
    if (cfg.components.empty()) bad("at least one component is required");
    return LimitModel(cfg.components, *cfg.model);
}

// --- classify ---------------------------------------------------------------

void run_classify(const ExperimentConfig& cfg, const RunOptions& options, const fs::path& dir, RunResult& result) {
    const auto limit = limit_of(cfg);
    const auto& block = cfg.block("classify");
    std::vector<std::size_t> samples = {1000, 10000, 100000};
    if (block.contains("N_samples")) {
        samples = counts(block.at("N_samples"), "classify.N_samples");
    } else if (!cfg.N_grid.empty()) {
        samples = cfg.N_grid;
    }
    json rows = json::array();
    Table table{{"label", "rank", "regime", "sigma", "d_G", "hurst", "b", "N", "A_N"}, {}};
    for (std::size_t j = 0; j < limit.size(); ++j) {
        const auto& c = limit.components()[j];
        json row;
        row["label"] = c.label;
        row["rank"] = c.rank;
        row["regime"] = std::string(to_string(c.regime));
        row["sigma"] = opt(c.sigma);
        row["d_G"] = opt(c.d_g);
        row["hurst"] = opt(c.hurst);
        row["b"] = opt(c.b);
        row["growth_exponent"] = c.growth_exponent;
        if (c.log_correction) row["note"] = "boundary case: A(N) grows like (N ln N)^{1/2}";
        row["tightness_convergent"] = tightness_condition(limit.specs()[j].expansion).convergent;
        json an = json::array();
        for (std::size_t N : samples) {
            const double A = limit.normalization(j, N);
            an.push_back({{"N", N}, {"A_N", A}});
            table.rows.push_back({c.label, c.rank, std::string(to_string(c.regime)), opt(c.sigma), opt(c.d_g),
                                  opt(c.hurst), opt(c.b), N, A});
        }
        row["A_N"] = std::move(an);
        rows.push_back(std::move(row));
    }
    result.report["model"] = cfg.model->describe();
    result.report["components"] = std::move(rows);
    table.write(dir / "classify", options.format, result);
}

// --- constants --------------------------------------------------------------

void run_constants(const ExperimentConfig& cfg, const RunOptions& options, const fs::path& dir, RunResult& result) {
    const auto limit = limit_of(cfg);
    const auto& model = limit.model();
    Table table{{"label", "m", "g_m", "lag_sum", "tail_bound", "sigma_term"}, {}};
    json comps = json::array();
    for (std::size_t j = 0; j < limit.size(); ++j) {
        const auto& c = limit.components()[j];
        const auto g = limit.specs()[j].expansion.coefficients();
        json terms = json::array();
        for (std::size_t m = 1; m < g.size(); ++m) {
            if (g[m] == 0.0) continue;
            json sum = nullptr, tail = nullptr, term = nullptr;
            try {
                const auto s = lag_power_sum(model, static_cast<int>(m));
                sum = s.value;
                tail = s.tail_bound;
                term = std::tgamma(double(m) + 1.0) * g[m] * g[m] * s.value;
            } catch (const std::domain_error&) {
                // Divergent lag sum: this order is long-range dependent.
            }
            table.rows.push_back({c.label, m, g[m], sum, tail, term});
            terms.push_back({{"m", m}, {"g_m", g[m]}, {"lag_sum", sum}, {"tail_bound", tail}, {"sigma_term", term}});
        }
        json row{{"label", c.label},
                 {"rank", c.rank},
                 {"regime", std::string(to_string(c.regime))},
                 {"sigma_sq", c.sigma ? json(*c.sigma * *c.sigma) : json(nullptr)},
                 {"b", opt(c.b)},
                 {"d_G", opt(c.d_g)},
                 {"hurst", opt(c.hurst)},
                 {"terms", std::move(terms)}};
        comps.push_back(std::move(row));
    }
    result.report["model"] = model.describe();
    result.report["components"] = std::move(comps);
    table.write(dir / "constants", options.format, result);
}

// --- limit-cov --------------------------------------------------------------

void run_limit_cov(const ExperimentConfig& cfg, const RunOptions& options, const fs::path& dir, RunResult& result) {
    const auto limit = limit_of(cfg);
    const auto srd = limit.indices(Regime::SRD);
    if (srd.empty()) bad("limit-cov needs at least one SRD component");
    const auto& block = cfg.block("limit_cov");
    std::vector<double> t_grid = cfg.t_grid;
    if (t_grid.empty()) t_grid = {1.0};
    const auto pairs = t_pairs_of(block, t_grid);

    Table table{{"t1", "t2", "row", "col", "value"}, {}};
    json mats = json::array();
    for (const auto& [t1, t2] : pairs) {
        const Eigen::MatrixXd M = limit.srd_covariance_matrix(t1, t2);
        json m = json::array();
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            json r = json::array();
            for (Eigen::Index k = 0; k < M.cols(); ++k) {
                r.push_back(M(i, k));
                table.rows.push_back({t1, t2, limit.components()[srd[static_cast<std::size_t>(i)]].label,
                                      limit.components()[srd[static_cast<std::size_t>(k)]].label, M(i, k)});
            }
            m.push_back(std::move(r));
        }
        mats.push_back({{"t1", t1}, {"t2", t2}, {"matrix", std::move(m)}});
    }
    json labels = json::array();
    for (std::size_t j : srd) labels.push_back(limit.components()[j].label);
    result.report["srd_components"] = std::move(labels);
    result.report["matrices"] = std::move(mats);

    const double min_eig = limit.srd_min_eigenvalue(t_grid);
    const double tol = 1e-10;
    json tests = json::array();
    add_test(result, tests, "limit_cov_psd", min_eig >= -tol,
             {{"min_eigenvalue", min_eig}, {"tolerance", -tol}, {"t_grid", t_grid}});
    result.report["tests"] = std::move(tests);
    table.write(dir / "limit_cov", options.format, result);
}

// --- convergence ------------------------------------------------------------

void run_convergence(const ExperimentConfig& cfg, const RunOptions& options, const fs::path& dir,
                     RunResult& result) {
    if (!cfg.model) bad("a covariance model is required");
    if (cfg.components.empty()) bad("at least one component is required");
    if (cfg.N_grid.empty()) bad("convergence needs N or N_grid");
    if (cfg.t_grid.empty()) bad("convergence needs t_grid");
    const auto& block = cfg.block("convergence");
    SweepOptions so;
    so.t_pairs = t_pairs_of(block, cfg.t_grid);
    if (block.contains("permutations")) so.harness.permutations = count(block.at("permutations"), "permutations");
    if (block.contains("bootstrap")) so.harness.bootstrap_resamples = count(block.at("bootstrap"), "bootstrap");
    if (block.contains("reference_factor")) {
        so.reference_factor = count(block.at("reference_factor"), "reference_factor");
    }
    if (block.contains("reference_resolution")) {
        so.reference_resolution = count(block.at("reference_resolution"), "reference_resolution");
    }
    if (block.contains("evaluation")) {
        const auto e = block.at("evaluation").get<std::string>();
        if (e == "expansion") {
            so.mode = Evaluation::Expansion;
        } else if (e == "direct") {
            so.mode = Evaluation::Direct;
        } else {
            bad("evaluation must be 'expansion' or 'direct'");
        }
    }
    const std::uint64_t seed = options.seed.value_or(cfg.seed);
    const auto sweep = convergence_sweep(cfg.components, *cfg.model, cfg.N_grid, cfg.t_grid, cfg.R, seed, so,
                                         options.threads);
    result.report["sweep"] = to_json(sweep);
    for (const auto& name : sweep.failing_tests()) result.failures.push_back(name);

    Table trend{{"N", "test", "quantity", "value"}, {}};
    for (const auto& row : sweep.trend) trend.rows.push_back({row.N, row.test, row.quantity, row.value});
    trend.write(dir / "trend", options.format, result);
}

// --- hermite-process --------------------------------------------------------

void run_hermite_process(const ExperimentConfig& cfg, const RunOptions& options, const fs::path& dir,
                         RunResult& result) {
    const auto& block = cfg.block("hermite_process");
    HermiteProcessSpec spec;
    if (block.contains("k")) spec.k = static_cast<int>(count(block.at("k"), "hermite_process.k"));
    if (block.contains("h0")) {
        spec.h0 = number(block, "h0");
    } else if (cfg.d()) {
        spec.h0 = *cfg.d() + 0.5;
    }
    if (block.contains("representation")) {
        spec.representation = representation_from_string(block.at("representation").get<std::string>());
    }
    if (block.contains("resolution")) spec.resolution = count(block.at("resolution"), "resolution");
    if (block.contains("partial_sum_length")) {
        spec.partial_sum_length = count(block.at("partial_sum_length"), "partial_sum_length");
    }
    validate(spec);
    std::vector<double> t_grid = cfg.t_grid;
    if (t_grid.empty()) t_grid = {0.25, 0.5, 0.75, 1.0};
    const std::size_t R = block.contains("R") ? count(block.at("R"), "hermite_process.R") : cfg.R;
    const std::uint64_t seed = options.seed.value_or(cfg.seed);
    const std::size_t T = t_grid.size();

    const HermiteProcessSimulator sim(spec, t_grid);
    const auto paths = sim.sample_many(R, seed, options.threads);

    const std::size_t dump = std::min<std::size_t>(
        R, block.contains("dump_paths") ? block.at("dump_paths").get<std::size_t>() : std::size_t{10});
    Table path_table{{"path", "t", "value"}, {}};
    for (std::size_t r = 0; r < dump; ++r) {
        for (std::size_t a = 0; a < T; ++a) path_table.rows.push_back({r, t_grid[a], paths[r * T + a]});
    }
    path_table.write(dir / "paths", options.format, result);

    if (block.value("dump_kernel", false) && is_chaos_representation(spec.representation)) {
        std::ostringstream os;
        sim.kernels().back().write_csv(os);
        write_text(dir / "kernel.csv", os.str(), result);
    }

    json tests = json::array();
    json summary = json::array();
    for (std::size_t a = 0; a < T; ++a) {
        std::vector<double> sq(R);
        for (std::size_t r = 0; r < R; ++r) sq[r] = paths[r * T + a] * paths[r * T + a];
        const auto m = sample_moments(sq);
        const double se = std::sqrt(m.variance / static_cast<double>(R));
        const double target = std::pow(t_grid[a], 2.0 * spec.hurst());
        json row{{"t", t_grid[a]}, {"second_moment", m.mean}, {"se", se}, {"target", target},
                 {"exact", opt(sim.exact_covariance(a, a))}};
        summary.push_back(row);
        if (a + 1 == T) {
            add_test(result, tests, "variance@t=" + fmt(t_grid[a]), std::abs(m.mean - target) <= 3.0 * se,
                     std::move(row));
        }
    }
    result.report["process"] = {{"k", spec.k},
                                {"h0", spec.h0},
                                {"hurst", spec.hurst()},
                                {"representation", std::string(to_string(spec.representation))},
                                {"resolution", spec.resolution},
                                {"R", R}};
    result.report["second_moments"] = std::move(summary);

    if (block.contains("compare")) {
        const auto other = representation_from_string(block.at("compare").get<std::string>());
        const auto eq = representation_equivalence(spec.k, spec.representation, other, spec.h0, t_grid, R, seed,
                                                   spec.resolution, options.threads);
        const double target = std::pow(t_grid.back(), 2.0 * spec.hurst());
        json e{{"a", std::string(to_string(spec.representation))},
               {"b", std::string(to_string(other))},
               {"max_abs_discrepancy", eq.max_abs_discrepancy},
               {"se_at_max", eq.se_at_max},
               {"max_z", eq.max_z},
               {"variance_a", eq.variance_a},
               {"variance_b", eq.variance_b},
               {"variance_se_a", eq.variance_se_a},
               {"variance_se_b", eq.variance_se_b},
               {"variance_exact_se_a", eq.variance_exact_se_a},
               {"variance_exact_se_b", eq.variance_exact_se_b},
               {"third_moment_a", eq.third_moment_a},
               {"third_moment_b", eq.third_moment_b},
               {"third_moment_se", eq.third_moment_se}};
        add_test(result, tests, "equivalence_covariance", eq.max_z <= 3.0, {{"max_z", eq.max_z}, {"band", 3.0}});
        // The exact-law SE is preferred: the sample SE of a heavy-tailed square is
        // small exactly when the sample variance is low.
        auto band = [](double exact, double sample) { return std::isfinite(exact) ? exact : sample; };
        const double se_a = band(eq.variance_exact_se_a, eq.variance_se_a);
        const double se_b = band(eq.variance_exact_se_b, eq.variance_se_b);
        add_test(result, tests, "equivalence_variance_a", std::abs(eq.variance_a - target) <= 3.0 * se_a,
                 {{"estimate", eq.variance_a}, {"target", target}, {"se", se_a}});
        add_test(result, tests, "equivalence_variance_b", std::abs(eq.variance_b - target) <= 3.0 * se_b,
                 {{"estimate", eq.variance_b}, {"target", target}, {"se", se_b}});
        result.report["equivalence"] = std::move(e);
    }
    result.report["tests"] = std::move(tests);
}

// --- contraction-decay ------------------------------------------------------

// Zeroes the entries with any coordinate outside [lo, hi).
void mask_support(ChaosKernel& f, std::size_t lo, std::size_t hi) {
    const std::size_t n = f.grid_size();
    auto values = f.values();
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        std::size_t rest = flat;
        bool inside = true;
        for (int c = 0; c < f.order(); ++c) {
            const std::size_t i = rest % n;
            rest /= n;
            inside = inside && i >= lo && i < hi;
        }
        if (!inside) values[flat] = 0.0;
    }
}

void run_contraction_decay(const ExperimentConfig& cfg, const RunOptions& options, const fs::path& dir,
                           RunResult& result) {
    if (!cfg.model) bad("a covariance model is required");
    const auto& block = cfg.block("contraction_decay");
    const std::string kind = block.value("case", std::string("mixed"));
    int p = 3, q = 2;
    std::vector<int> rs = {1, 2};
    std::vector<std::size_t> Ns = {64, 128, 256, 512, 1024};
    if (kind == "self") {
        p = q = 2;
        rs = {1};
    } else if (kind == "disjoint") {
        rs = {1};
        Ns = {8, 16, 32};
    } else if (kind != "mixed") {
        bad("contraction_decay.case must be mixed, self or disjoint");
    }
    if (block.contains("p")) p = static_cast<int>(count(block.at("p"), "p"));
    if (block.contains("q")) q = static_cast<int>(count(block.at("q"), "q"));
    if (kind == "self" && p != q) bad("the self case needs p = q");
    if (block.contains("r")) {
        rs.clear();
        for (const auto& v : block.at("r")) rs.push_back(static_cast<int>(count(v, "r")));
    }
    if (block.contains("N_grid")) Ns = counts(block.at("N_grid"), "contraction_decay.N_grid");
    const double t = block.contains("t") ? number(block, "t") : 1.0;
    for (int r : rs) {
        if (r > std::min(p, q)) bad("contraction index r exceeds min(p, q)");
    }

    std::vector<DecayRow> rows;
    if (kind == "disjoint") {
        std::vector<ChaosKernel> fs_, gs;
        for (std::size_t N : Ns) {
            auto f = partial_sum_kernel(p, N, t, *cfg.model);
            auto g = partial_sum_kernel(q, N, t, *cfg.model);
            const std::size_t half = f.grid_size() / 2;
            mask_support(f, 0, half);
            mask_support(g, half, g.grid_size());
            fs_.push_back(std::move(f));
            gs.push_back(std::move(g));
        }
        rows = asymptotic_independence_decay(Ns, fs_, gs, rs);
    } else {
        rows = asymptotic_independence_decay(p, q, *cfg.model, Ns, rs, t, options.threads);
    }

    Table table{{"N", "r", "norm"}, {}};
    for (const auto& row : rows) table.rows.push_back({row.N, row.r, row.norm});
    table.write(dir / "decay", options.format, result);

    json tests = json::array();
    json summaries = json::array();
    for (const auto& s : summarize_decay(rows)) {
        json detail{{"r", s.r},
                    {"strictly_decreasing", s.strictly_decreasing},
                    {"first", s.first},
                    {"last", s.last},
                    {"ratio", s.ratio}};
        summaries.push_back(detail);
        const std::string suffix = "[r=" + std::to_string(s.r) + "]";
        if (kind == "mixed") {
            add_test(result, tests, "contraction_decay" + suffix, s.strictly_decreasing && s.ratio < 0.25, detail);
        } else if (kind == "self") {
            add_test(result, tests, "self_contraction_persists" + suffix, !(s.strictly_decreasing && s.ratio < 0.25),
                     detail);
        } else {
            double worst = 0.0;
            for (const auto& row : rows) {
                if (row.r == s.r) worst = std::max(worst, row.norm);
            }
            detail["max_norm"] = worst;
            add_test(result, tests, "disjoint_zero" + suffix, worst <= 1e-12, detail);
        }
    }
    result.report["case"] = kind;
    result.report["p"] = p;
    result.report["q"] = q;
    result.report["t"] = t;
    result.report["summaries"] = std::move(summaries);
    result.report["tests"] = std::move(tests);
}

}  // namespace

std::optional<double> ExperimentConfig::d() const {
    if (!model) return std::nullopt;
    return model->memory_parameter();
}

const json& ExperimentConfig::block(std::string_view name) const {
    static const json empty = json::object();
    const std::string key(name);
    if (raw.is_object() && raw.contains(key)) return raw.at(key);
    return empty;
}

CovarianceModel parse_model(const json& block) {
    if (!block.is_object()) bad("model must be an object");
    const std::string kind = block.value("kind", std::string("power_law"));
    if (kind == "power_law") {
        const double d = number(block, "d");
        if (!(d > 0.0 && d < 0.5)) bad("d must lie in (0, 1/2)");
        return CovarianceModel::power_law(d);
    }
    if (kind == "geometric") {
        const double rho = number(block, "rho");
        if (!(std::abs(rho) < 1.0)) bad("rho must satisfy |rho| < 1");
        return CovarianceModel::geometric(rho);
    }
    if (kind == "tabulated") {
        if (!block.contains("values")) bad("tabulated model needs 'values'");
        return CovarianceModel::tabulated(numbers(block.at("values"), "values"));
    }
    if (kind == "fgn") {
        const double H = number(block, "hurst");
        const std::size_t lags = block.contains("max_lag") ? count(block.at("max_lag"), "max_lag") : 1u << 16;
        return CovarianceModel::fractional_gaussian_noise(H, lags);
    }
    bad("unknown model kind '" + kind + "'");
}

ComponentSpec parse_component(const json& entry, std::size_t index) {
    if (!entry.is_object()) bad("components must be objects");
    const std::string label = entry.value("label", "G" + std::to_string(index + 1));
    const double scale = entry.contains("scale") ? number(entry, "scale") : 1.0;
    std::function<double(double)> direct;
    std::optional<HermiteExpansion> e;
    if (entry.contains("hermite")) {
        e = HermiteExpansion::from_coefficients(numbers(entry.at("hermite"), "hermite"));
    } else if (entry.contains("builtin")) {
        const int m = builtin_order(entry.at("builtin").get<std::string>());
        e = HermiteExpansion::hermite(m);
        direct = [m](double x) { return hermite_poly(m, x); };
    } else if (entry.contains("poly")) {
        const auto c = numbers(entry.at("poly"), "poly");
        e = HermiteExpansion::from_monomials(c);
        direct = [c](double x) {
            double acc = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
            return acc;
        };
    } else if (entry.contains("function")) {
        const auto& f = entry.at("function");
        const std::string name = f.is_string() ? f.get<std::string>() : f.value("name", std::string());
        const int M = f.is_object() && f.contains("truncation") ? static_cast<int>(count(f.at("truncation"), "truncation"))
                                                                  : 12;
        direct = named_function(name);
        e = expand(direct, M);
    } else {
        bad("component '" + label + "' needs hermite, builtin, poly or function");
    }
    if (e->is_zero()) bad("component '" + label + "' is the zero function");
    if (scale != 1.0) {
        e = e->scaled(scale);
        if (direct) direct = [inner = direct, scale](double x) { return scale * inner(x); };
    }
    return ComponentSpec(*e, label, direct);
}

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) bad("top level must be an object");
    ExperimentConfig cfg;
    cfg.raw = doc;
    if (doc.contains("model")) {
        cfg.model = parse_model(doc.at("model"));
        if (doc.contains("d") && cfg.d() && std::abs(*cfg.d() - number(doc, "d")) > 0.0) {
            bad("'d' disagrees with the model block");
        }
    } else if (doc.contains("d")) {
        cfg.model = parse_model(json{{"kind", "power_law"}, {"d", number(doc, "d")}});
    }
    if (doc.contains("components")) {
        const auto& list = doc.at("components");
        if (!list.is_array()) bad("components must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) cfg.components.push_back(parse_component(list[i], i));
    }
    if (doc.contains("N_grid")) {
        cfg.N_grid = counts(doc.at("N_grid"), "N_grid");
    } else if (doc.contains("N")) {
        cfg.N_grid = {count(doc.at("N"), "N")};
    }
    for (std::size_t i = 1; i < cfg.N_grid.size(); ++i) {
        if (cfg.N_grid[i] <= cfg.N_grid[i - 1]) bad("N_grid must be strictly increasing");
    }
    if (doc.contains("t_grid")) {
        cfg.t_grid = numbers(doc.at("t_grid"), "t_grid");
        validate_time_grid(cfg.t_grid, cfg.N_grid.empty() ? std::size_t{1} << 20 : cfg.N_grid.front());
    }
    if (doc.contains("R")) {
        cfg.R = count(doc.at("R"), "R");
        if (cfg.R < 2) bad("R must be at least 2");
    }
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) bad("seed must be a non-negative integer");
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
    // Classification happens here so an invalid setup fails before sampling.
    if (cfg.model && !cfg.components.empty()) (void)LimitModel(cfg.components, *cfg.model);
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config " + path.string());
    json doc;
    try {
        is >> doc;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"classify", "constants", "limit-cov", "convergence", "hermite-process",
                                                   "contraction-decay"};
    return names;
}

RunResult run_command(std::string_view command, const ExperimentConfig& config, const RunOptions& options) {
    RunResult result;
    result.command = std::string(command);
    fs::path dir = options.out ? *options.out : fs::path(config.out.empty() ? "." : config.out);
    fs::create_directories(dir);

    json echo = config.raw;
    echo.erase("out");
    echo["seed"] = options.seed.value_or(config.seed);
    result.report["command"] = result.command;
    result.report["config"] = std::move(echo);

    if (command == "classify") {
        run_classify(config, options, dir, result);
    } else if (command == "constants") {
        run_constants(config, options, dir, result);
    } else if (command == "limit-cov") {
        run_limit_cov(config, options, dir, result);
    } else if (command == "convergence") {
        run_convergence(config, options, dir, result);
    } else if (command == "hermite-process") {
        run_hermite_process(config, options, dir, result);
    } else if (command == "contraction-decay") {
        run_contraction_decay(config, options, dir, result);
    } else {
        throw std::invalid_argument("unknown command '" + std::string(command) + "'");
    }
    result.report["failing_tests"] = result.failures;
    write_text(dir / "report.json", result.report.dump(2) + "\n", result);
    return result;
}

}  // namespace lrdlab
