#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cfa/simulator.hpp"

namespace cfa::opt {

// α_{n,j} = η / √(G_n(j,j) + ε), G_n(j,j) = Σ_{i≤n} g_i(j)²
struct AdaGrad {
    double eta{1.0};
    double epsilon{1e-8};
};

// ḡ_n = βḡ_{n−1} + (1−β)‖g_n‖², α_n = η / √(ḡ_n + ε)
struct RMSProp {
    double eta{0.1};
    double beta{0.9};
    double epsilon{0.0};
};

// α_k = scale / √k
struct Polynomial {
    double scale{1.0};
};

using StepsizeRule = std::variant<AdaGrad, RMSProp, Polynomial>;

std::string rule_name(const StepsizeRule& rule);
void validate(const StepsizeRule& rule);

struct StepsizeState {
    std::size_t k{0};                // steps taken
    Eigen::VectorXd squared_sum;     // AdaGrad G_n diagonal
    double average{0.0};             // RMSProp ḡ_n
};

// Per-coordinate stepsizes for gradient g; advances the state by one step.
// A zero RMSProp average with ε = 0 yields a zero step.
Eigen::VectorXd apply_stepsize(const StepsizeRule& rule, StepsizeState& state, const Eigen::VectorXd& g);

// η_k = L₀(d+4)/k^β, α_k = 1/√k
struct SmoothingSchedule {
    double l0{1.0};
    std::size_t dimension{1};
    double beta{0.25};

    void validate() const;
};

std::pair<double, double> schedule_values(const SmoothingSchedule& schedule, std::size_t k);

// P(R = k) = α_k / Σ α_k', k = 1..N. Throws std::invalid_argument for a nonpositive weight.
std::vector<double> output_index_pmf(std::span<const double> alphas);
std::size_t sample_output_index(std::span<const double> alphas, std::mt19937_64& rng);

// F̄(θ, ω) as a cost to minimize, ω identified by an integer sample id.
class SampleObjective {
public:
    struct Query {
        Eigen::VectorXd theta;
        std::uint64_t sample{0};
    };

    virtual ~SampleObjective() = default;
    virtual std::size_t dimension() const = 0;
    virtual double value(const Eigen::VectorXd& theta, std::uint64_t sample) const = 0;
    // Same as calling value() per query; implementations may batch or parallelize.
    virtual std::vector<double> values(const std::vector<Query>& queries) const;
};

// Policy cost on generated paths: θ fills the coordinates of a parameterization shape.
class PolicyObjective : public SampleObjective {
public:
    PolicyObjective(policy::Parameterization shape, sim::SimulationConfig config);

    std::size_t dimension() const override { return dimension_; }
    double value(const Eigen::VectorXd& theta, std::uint64_t sample) const override;
    std::vector<double> values(const std::vector<Query>& queries) const override;

    policy::Parameterization parameterization(const Eigen::VectorXd& theta) const;
    const sim::SimulationConfig& config() const noexcept { return config_; }

private:
    policy::Parameterization shape_;
    sim::SimulationConfig config_;
    forecast::ForecastGenerator generator_;
    std::size_t dimension_;
};

// Box Θ = [lower, upper] per coordinate; single-entry bounds apply to every coordinate.
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Box uniform(std::size_t d, double lo, double hi);
    Eigen::VectorXd project(const Eigen::VectorXd& theta) const;
};

// G = (F̄(θ+ηv, ω) − F̄(θ, ω))/η · v
Eigen::VectorXd sgf_gradient_estimate(const SampleObjective& f, const Eigen::VectorXd& theta, double eta,
                                      std::uint64_t sample, const Eigen::VectorXd& v);

// (F̄(θ+he_i, ω) − F̄(θ−he_i, ω))/(2h) per coordinate.
Eigen::VectorXd sng_gradient_estimate(const SampleObjective& f, const Eigen::VectorXd& theta, double h,
                                      std::uint64_t sample);

struct OptimizerRun {
    std::string method;
    std::vector<Eigen::VectorXd> iterates;  // θ⁰..θ^N
    std::vector<double> stepsizes;          // mean α over coordinates, k = 1..N
    std::vector<double> smoothing;          // η_k (SGF) or h (SNG); 0 for static
    std::vector<double> gradient_norms;
    std::vector<double> batch_costs;        // mean F̄ over the iteration's samples
    std::size_t output_index{0};            // R for SGF, N otherwise
    std::size_t evaluations{0};             // F̄ calls
    Eigen::VectorXd averaged;               // running average of θ¹..θ^N

    const Eigen::VectorXd& output() const { return iterates.at(output_index); }
};

void write_trace_csv(std::ostream& out, const OptimizerRun& run);

struct SgfOptions {
    std::size_t iterations{800};
    SmoothingSchedule schedule;
    // nullopt: α_k from the schedule
    std::optional<StepsizeRule> stepsize;
    std::size_t batch_size{12};
    std::uint64_t sample_base{0};  // iteration k, member j uses sample base + (k−1)·batch + j
    std::uint64_t seed{0};         // directions v and the output index
    std::optional<Box> projection;
};

OptimizerRun run_sgf_cfa(const SampleObjective& f, const Eigen::VectorXd& theta0, const SgfOptions& options);

struct SngOptions {
    std::size_t iterations{800};
    StepsizeRule stepsize{RMSProp{}};
    double h{0.05};
    std::uint64_t sample_base{0};  // iteration n uses sample base + n − 1
    std::optional<Box> projection{Box::uniform(1, 0.0, 3.0)};
};

OptimizerRun run_sng_cfa(const SampleObjective& f, const Eigen::VectorXd& theta0, const SngOptions& options);

// F̄^S(θ, ω) with its LP-dual subgradient; convex in θ.
class StaticObjective : public SampleObjective {
public:
    struct Evaluation {
        double value{0.0};
        Eigen::VectorXd subgradient;
        bool degenerate{false};
    };

    // With free_intercept θ = (θ₀, θ₁); otherwise θ = (θ₁) and θ₀ stays at fixed_intercept.
    StaticObjective(sim::PathSet paths, storage::ModelParams model, bool free_intercept = true,
                    double fixed_intercept = 0.0);

    std::size_t dimension() const override { return free_intercept_ ? 2 : 1; }
    // sample indexes the path set
    double value(const Eigen::VectorXd& theta, std::uint64_t sample) const override;
    Evaluation evaluate(const Eigen::VectorXd& theta, std::uint64_t sample) const;
    // Average over every path in the set.
    Evaluation average(const Eigen::VectorXd& theta) const;
    std::size_t sample_count() const noexcept { return paths_.size(); }
    policy::AffineRhs parameterization(const Eigen::VectorXd& theta) const;

private:
    sim::PathSet paths_;
    storage::ModelParams model_;
    bool free_intercept_;
    double fixed_intercept_;
};

// Throws std::invalid_argument unless θ only moves wind rows through AffineRhs,
// which keeps the static objective convex.
policy::AffineRhs require_static_compatible(const policy::Parameterization& theta);

Eigen::VectorXd static_subgradient(const StaticObjective& f, const Eigen::VectorXd& theta, std::uint64_t sample,
                                   bool* degenerate = nullptr);

struct StaticOptions {
    std::size_t iterations{200};
    StepsizeRule stepsize{Polynomial{}};
    std::uint64_t seed{0};  // sample order
    std::optional<Box> projection;
};

// Projected stochastic subgradient steps on samples drawn uniformly from the
// objective's path set. Output is the final iterate; the averaged iterate is kept too.
OptimizerRun run_static_cfa(const StaticObjective& f, const Eigen::VectorXd& theta0, const StaticOptions& options);

}  // namespace cfa::opt
