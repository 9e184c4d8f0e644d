#include <algorithm>
#include <cstdint>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "lrdlab/experiment.hpp"

namespace {

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = 0;
    std::string format = "csv";
};

void add_flags(CLI::App* sub, Flags& flags) {
    sub->add_option("--config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Master seed (overrides the config)");
    sub->add_option("--out", flags.out, "Output directory (overrides the config)");
    sub->add_option("--threads", flags.threads, "Worker threads (default: available cores)");
    sub->add_option("--format", flags.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial sums of functionals of long-memory Gaussian series"};
    app.require_subcommand(1);

    const std::map<std::string, std::string> help = {
        {"classify", "Regime table, sigma, d_G, b and A(N) per component"},
        {"constants", "Lag sums, sigma terms and b constants per component"},
        {"limit-cov", "Limit covariance of the SRD block over t-pairs"},
        {"convergence", "Monte Carlo sweep over N with statistical verdicts"},
        {"hermite-process", "Simulate Hermite processes and compare representations"},
        {"contraction-decay", "Contraction norms of partial-sum kernels over N"},
    };
    Flags flags;
    for (const auto& name : lrdlab::commands()) add_flags(app.add_subcommand(name, help.at(name)), flags);

    CLI11_PARSE(app, argc, argv);
    const CLI::App* sub = app.get_subcommands().front();

    try {
        const auto config = lrdlab::load_config(flags.config);
        lrdlab::RunOptions options;
        if (sub->count("--seed")) options.seed = flags.seed;
        if (!flags.out.empty()) options.out = flags.out;
        options.threads = flags.threads ? flags.threads : std::max(1u, std::thread::hardware_concurrency());
        options.format = flags.format == "json" ? lrdlab::TableFormat::Json : lrdlab::TableFormat::Csv;

        const auto result = lrdlab::run_command(sub->get_name(), config, options);
        for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
        if (result.exit_code() != 0) {
            std::cerr << "failing tests:\n";
            for (const auto& name : result.failures) std::cerr << "  " << name << '\n';
        }
        return result.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
