#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lrdlab/covariance.hpp"
#include "lrdlab/scaling.hpp"

namespace lrdlab {

/// Parsed experiment document. `raw` keeps the original JSON, including the
/// subcommand blocks ("classify", "limit_cov", "convergence",
/// "hermite_process", "contraction_decay").
struct ExperimentConfig {
    nlohmann::json raw;
    std::optional<CovarianceModel> model;
    std::vector<ComponentSpec> components;
    std::vector<std::size_t> N_grid;
    std::vector<double> t_grid;
    std::size_t R = 500;
    std::uint64_t seed = 0;
    std::string out;

    /// Memory parameter of a PowerLaw model.
    std::optional<double> d() const;
    /// Subcommand block or an empty object.
    const nlohmann::json& block(std::string_view name) const;
};

/// Model block: {"kind": "power_law", "d": ...}, {"kind": "geometric",
/// "rho": ...}, {"kind": "tabulated", "values": [...]} or {"kind": "fgn",
/// "hurst": ..., "max_lag": ...}. Throws std::invalid_argument.
CovarianceModel parse_model(const nlohmann::json& block);

/// Component entry with "label" and one of "hermite" (g_0..g_M), "builtin"
/// ("H3", "H_3", "Hm(3)"), "poly" (monomial coefficients) or "function"
/// ({"name": "abs" | "sign" | "exp" | "cos" | "sin" | "square", "truncation": M}),
/// plus an optional "scale".
ComponentSpec parse_component(const nlohmann::json& entry, std::size_t index);

/// Validates and converts a config document. A PowerLaw memory parameter
/// must lie in (0, 1/2) and components are classified up front, so a bad
/// config fails before any sampling. Throws std::invalid_argument.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class TableFormat { Csv, Json };

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    unsigned threads = 1;
    TableFormat format = TableFormat::Csv;
};

struct RunResult {
    std::string command;
    /// Written to report.json; contains the echoed config and never the
    /// thread count.
    nlohmann::json report;
    std::vector<std::string> failures;
    std::vector<std::filesystem::path> files;

    int exit_code() const noexcept { return failures.empty() ? 0 : 1; }
};

/// Subcommand names accepted by run_command.
const std::vector<std::string>& commands();

/// Runs one subcommand and writes its bundle to the output directory (the
/// --out flag, else the config's "out", else the current directory).
RunResult run_command(std::string_view command, const ExperimentConfig& config, const RunOptions& options);

}  // namespace lrdlab
