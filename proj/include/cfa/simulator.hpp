#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "cfa/lp.hpp"
#include "cfa/policy.hpp"

namespace cfa::sim {

using PathPtr = std::shared_ptr<const forecast::ForecastSet>;

struct SimulationConfig {
    forecast::ForecastParams forecast;
    storage::ModelParams model;
    std::size_t threads{1};

    void validate() const;
};

struct Trajectory {
    std::uint64_t seed{0};
    std::vector<storage::TrajectoryStep> steps;  // t = 0..T
    double total_cost{0.0};                      // F̄(θ, ω)

    double profit() const { return -total_cost; }
};

// Sample paths ω keyed by seed; path i of a set built from base b has seed b + i.
class PathSet {
public:
    PathSet() = default;
    PathSet(const forecast::ForecastGenerator& generator, std::uint64_t base_seed, std::size_t count,
            std::size_t threads = 1);
    PathSet(std::vector<std::uint64_t> seeds, std::vector<PathPtr> paths);

    std::size_t size() const noexcept { return paths_.size(); }
    const PathPtr& path(std::size_t i) const { return paths_.at(i); }
    std::uint64_t seed(std::size_t i) const { return seeds_.at(i); }

private:
    std::vector<std::uint64_t> seeds_;
    std::vector<PathPtr> paths_;
};

// Runs the policy forward from R_0 over t = 0..T. Identical paths give identical
// exogenous realizations whatever θ is.
Trajectory rollout(const policy::Parameterization& theta, const PathPtr& path, const storage::ModelParams& model,
                   std::uint64_t seed = 0);
Trajectory rollout(const policy::Parameterization& theta, std::uint64_t seed, const SimulationConfig& config);
// Total cost only, without recording steps.
double rollout_cost(const policy::Parameterization& theta, const PathPtr& path, const storage::ModelParams& model);

struct EvaluationReport {
    std::size_t n{0};
    double mean_profit{0.0};  // F^π(θ)
    double std_error{0.0};
    std::vector<double> profits;  // per path, in path order
};

EvaluationReport summarize(std::vector<double> profits);
EvaluationReport evaluate(const policy::Parameterization& theta, const PathSet& paths, const storage::ModelParams& model,
                          std::size_t threads = 1);
EvaluationReport evaluate(const policy::Parameterization& theta, std::size_t n, std::uint64_t base_seed,
                          const SimulationConfig& config);

// ΔF = (F^π(θ) − F^{D-LA}) / |F^{D-LA}|. Throws std::domain_error when the benchmark mean is zero.
double policy_improvement(const EvaluationReport& report, const EvaluationReport& benchmark);

struct Improvement {
    double delta{0.0};
    double std_error{0.0};  // from per-path differences; 0 if the reports are not paired

    double lower_bound(double z) const { return delta - z * std_error; }
};

// Paired estimate over common paths. Throws std::invalid_argument if the reports
// have different path counts.
Improvement paired_improvement(const EvaluationReport& report, const EvaluationReport& benchmark);

struct Axis {
    std::size_t coordinate{0};
    std::vector<double> values;
};

std::vector<double> linspace(double lo, double hi, std::size_t count);

struct GridPoint {
    std::vector<double> coordinates;  // one per axis
    EvaluationReport report;
    double improvement{0.0};
};

// Values on a 1-D or 2-D grid over selected coordinates of shape; other
// coordinates stay at their value in shape. A single path gives a fixed-ω scan.
// Rows are ordered with the last axis varying fastest.
std::vector<GridPoint> scan_objective(const policy::Parameterization& shape, const std::vector<Axis>& axes,
                                      const PathSet& paths, const storage::ModelParams& model,
                                      const EvaluationReport& benchmark, std::size_t threads = 1);

void write_grid_csv(std::ostream& out, const std::vector<Axis>& axes, const std::vector<GridPoint>& grid);

// One LP at t = 0 over every period. Wind rows for t' ≥ 1 carry
// max(0, θ₀ + θ₁·f^E_{0,t'}); demand and grid prices are the realized series.
// Requires the path's lookahead to cover the horizon (H = T).
lp::LinearProgram build_static_lp(const forecast::ForecastSet& path, const policy::AffineRhs& theta,
                                  const storage::ModelParams& model, double initial_storage);

struct StaticSolution {
    double objective{0.0};  // F̄^S(θ, ω): LP optimum plus Σ C^P D_t
    Eigen::Vector2d subgradient{Eigen::Vector2d::Zero()};  // w.r.t. (θ₀, θ₁)
    bool degenerate{false};  // θ sits on a basis change or a wind rhs on its max(0,·) kink
    double realized_cost{0.0};  // the plan executed against realized wind
    std::vector<storage::Decision> plan;
};

// Throws policy::PolicyError if the static LP is not solved to optimality.
StaticSolution solve_static(const forecast::ForecastSet& path, const policy::AffineRhs& theta,
                            const storage::ModelParams& model);

// Executes a fixed plan: wind and storage draws are cut back to what is
// available, unmet demand is charged at C^P.
double realized_plan_cost(const forecast::ForecastSet& path, const std::vector<storage::Decision>& plan,
                          const storage::ModelParams& model);

}  // namespace cfa::sim
