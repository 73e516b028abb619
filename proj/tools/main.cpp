#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeAbort = 2;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out{"out"};
    std::optional<std::size_t> threads;
};

cfa::cli::ExperimentConfig resolve(const Flags& flags) {
    auto config = flags.config.empty() ? cfa::cli::ExperimentConfig{} : cfa::cli::load_config(flags.config);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.threads) config.sim.threads = *flags.threads;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tune parameterized lookahead policies for wind-storage dispatch"};
    app.require_subcommand(1);
    Flags flags;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config, "config file (section/key = value)")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "overrides run.seed");
        sub->add_option("--out", flags.out, "output directory")->capture_default_str();
        sub->add_option("--threads", flags.threads, "overrides run.threads")->check(CLI::PositiveNumber);
    };

    auto* forecast_gen = app.add_subcommand("forecast-gen", "write one sample path with its forecast surfaces");
    auto* simulate = app.add_subcommand("simulate", "roll one policy forward on one sample path");
    auto* optimize = app.add_subcommand("optimize", "tune theta and evaluate it on the held-out paths");
    auto* grid = app.add_subcommand("grid-search", "evaluate a 1-D or 2-D grid over theta coordinates");
    auto* bench = app.add_subcommand("benchmark", "compare a fixed theta with the unmodified lookahead");
    for (auto* sub : {forecast_gen, simulate, optimize, grid, bench}) add_common(sub);

    auto* defaults = app.add_subcommand("defaults", "print every config key with its default");
    std::string reference_path;
    defaults->add_option("--out", reference_path, "write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigError;
    }

    if (defaults->parsed()) {
        if (reference_path.empty()) {
            cfa::cli::write_reference(std::cout);
        } else {
            std::ofstream out(reference_path, std::ios::binary);
            cfa::cli::write_reference(out);
        }
        return 0;
    }

    cfa::cli::ExperimentConfig config;
    try {
        config = resolve(flags);
        config.validate();
    } catch (const cfa::cli::ConfigError& e) {
        std::cerr << (flags.config.empty() ? "config" : flags.config) << ": " << e.what() << '\n';
        return kConfigError;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        if (forecast_gen->parsed()) cfa::cli::emit_forecast_sample(config, flags.out, std::cout);
        if (simulate->parsed()) cfa::cli::simulate(config, flags.out, std::cout);
        if (optimize->parsed()) cfa::cli::run_experiment(config, flags.out, std::cout);
        if (grid->parsed()) cfa::cli::grid_search(config, flags.out, std::cout);
        if (bench->parsed()) cfa::cli::benchmark(config, flags.out, std::cout);
    } catch (const cfa::cli::ConfigError& e) {
        std::cerr << (flags.config.empty() ? "config" : flags.config) << ": " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << '\n';
        return kRuntimeAbort;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    std::cerr << "done in " << elapsed.count() << " s\n";
    return 0;
}
