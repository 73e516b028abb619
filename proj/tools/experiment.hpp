#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace cfa::cli {

struct StartResult {
    Eigen::VectorXd theta0;
    opt::OptimizerRun run;  // empty for method none
    Eigen::VectorXd theta;  // θ^R for sgf, θ^N otherwise
    sim::EvaluationReport test;
    sim::Improvement start_improvement;
    sim::Improvement improvement;
    std::uint64_t sample_base{0};
};

struct ExperimentResult {
    sim::EvaluationReport benchmark;
    std::vector<StartResult> starts;
};

policy::Parameterization shape_for(const ExperimentConfig& config);
std::vector<Eigen::VectorXd> starting_points(const ExperimentConfig& config);

// Optimizer run per start, then every output θ and start θ⁰ on the held-out paths.
// Writes trace_<start>.csv and report.json into out_dir when it is not empty.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                std::ostream& log);

std::vector<sim::GridPoint> grid_search(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                        std::ostream& log);

// One sample path and its forecast surfaces for run.seed.
void emit_forecast_sample(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// One rollout of θ⁰ (or the neutral θ) on path run.seed.
sim::Trajectory simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// θ⁰ (or the neutral θ) against the unmodified lookahead on the test paths.
sim::Improvement benchmark(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

// "# "-prefixed config and command lines for output headers.
void write_header(std::ostream& out, const ExperimentConfig& config, const std::string& command);

}  // namespace cfa::cli
