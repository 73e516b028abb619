#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfa/optimizer.hpp"

namespace cfa::cli {

struct AxisSpec {
    std::size_t coordinate{0};
    double lower{0.5};
    double upper{1.5};
    std::size_t count{21};
};

struct ExperimentConfig {
    sim::SimulationConfig sim;
    double energy_variance{40.0};  // sim.forecast.sigma_energy is its square root
    std::string cdf_file;  // empty: built-in buckets

    std::string family{"lookup"};
    std::vector<double> theta0;  // empty: random starts
    std::size_t starts{3};
    double start_lower{0.2};
    double start_upper{2.0};

    std::string method{"sgf"};  // sgf, sng, static, none
    std::size_t iterations{800};
    std::size_t batch_size{12};
    std::string stepsize{"auto"};  // auto, schedule, rmsprop, adagrad, polynomial
    double eta{0.1};
    double decay{0.9};
    double epsilon{0.0};
    double l0{1.0};
    double smoothing_beta{0.25};
    double h{0.05};
    std::string projection{"auto"};  // auto, on, off
    double lower{0.0};
    double upper{3.0};
    std::size_t static_paths{100};

    std::size_t test_paths{1000};
    std::uint64_t train_seed{0};
    std::uint64_t test_seed{1'000'000'000'000ULL};

    std::vector<AxisSpec> axes{AxisSpec{}};
    std::size_t grid_paths{100};

    std::uint64_t seed{0};

    ExperimentConfig();

    // Cross-field checks; throws ConfigError with line 0.
    void validate() const;
    // Number of training sample ids consumed per start.
    std::uint64_t training_span() const;
    opt::StepsizeRule stepsize_rule() const;
    std::optional<opt::Box> box() const;
};

struct ConfigError : std::runtime_error {
    ConfigError(std::size_t line, const std::string& message);
    std::size_t line;  // 0 when not tied to a line
};

// Flat "key = value" lines grouped under [section] headers; '#' and ';' start comments.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);

// Every key with its current value, one "section.key = value" per line.
void write_config(std::ostream& out, const ExperimentConfig& config, const std::string& prefix = "");
// Sectioned reference of every key, its default and a short description.
void write_reference(std::ostream& out);

std::string format_number(double v);

}  // namespace cfa::cli
