#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cfa/parallel.hpp"
#include "cfa/simulator.hpp"

namespace cfa::sim {

void SimulationConfig::validate() const {
    forecast.validate();
    model.validate();
    if (threads == 0) throw std::invalid_argument("threads must be at least 1");
}

PathSet::PathSet(const forecast::ForecastGenerator& generator, std::uint64_t base_seed, std::size_t count,
                 std::size_t threads)
    : seeds_(count), paths_(count) {
    parallel_for(count, threads, [&](std::size_t i) {
        seeds_[i] = base_seed + i;
        paths_[i] = std::make_shared<const forecast::ForecastSet>(generator.sample(seeds_[i]));
    });
}

PathSet::PathSet(std::vector<std::uint64_t> seeds, std::vector<PathPtr> paths)
    : seeds_(std::move(seeds)), paths_(std::move(paths)) {
    if (seeds_.size() != paths_.size()) throw std::invalid_argument("seed and path counts differ");
}

namespace {

template <typename OnStep>
double run_policy(const policy::Parameterization& theta, const PathPtr& path, const storage::ModelParams& model,
                  OnStep&& on_step) {
    if (!path) throw std::invalid_argument("rollout needs a sample path");
    storage::StorageState s{0, model.initial_storage, path};
    const std::size_t T = path->horizon_end();
    double total = 0.0;
    for (std::size_t t = 0; t <= T; ++t) {
        const auto x = policy::decide(s, theta, model).decision;
        const double cost = storage::contribution(s, x, model);
        on_step(s, x, cost);
        total += cost;
        if (t < T) s = storage::transition(s, x, storage::reveal(path, t + 1), model);
    }
    return total;
}

}  // namespace

Trajectory rollout(const policy::Parameterization& theta, const PathPtr& path, const storage::ModelParams& model,
                   std::uint64_t seed) {
    Trajectory out;
    out.seed = seed;
    out.total_cost = run_policy(theta, path, model, [&](const storage::StorageState& s, const storage::Decision& x,
                                                        double cost) {
        out.steps.push_back({s.period, s.storage, s.demand(), s.energy(), s.grid_price(), x, cost});
    });
    return out;
}

Trajectory rollout(const policy::Parameterization& theta, std::uint64_t seed, const SimulationConfig& config) {
    const forecast::ForecastGenerator generator(config.forecast);
    return rollout(theta, std::make_shared<const forecast::ForecastSet>(generator.sample(seed)), config.model, seed);
}

double rollout_cost(const policy::Parameterization& theta, const PathPtr& path, const storage::ModelParams& model) {
    return run_policy(theta, path, model, [](const auto&, const auto&, double) {});
}

EvaluationReport summarize(std::vector<double> profits) {
    if (profits.empty()) throw std::invalid_argument("evaluation needs at least one path");
    EvaluationReport r;
    r.n = profits.size();
    const double n = static_cast<double>(r.n);
    r.mean_profit = std::accumulate(profits.begin(), profits.end(), 0.0) / n;
    if (r.n > 1) {
        double ss = 0.0;
        for (const double p : profits) ss += (p - r.mean_profit) * (p - r.mean_profit);
        r.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    r.profits = std::move(profits);
    return r;
}

EvaluationReport evaluate(const policy::Parameterization& theta, const PathSet& paths,
                          const storage::ModelParams& model, std::size_t threads) {
    std::vector<double> profits(paths.size());
    parallel_for(paths.size(), threads, [&](std::size_t i) { profits[i] = -rollout_cost(theta, paths.path(i), model); });
    return summarize(std::move(profits));
}

EvaluationReport evaluate(const policy::Parameterization& theta, std::size_t n, std::uint64_t base_seed,
                          const SimulationConfig& config) {
    if (n == 0) throw std::invalid_argument("evaluation needs at least one path");
    const forecast::ForecastGenerator generator(config.forecast);
    return evaluate(theta, PathSet(generator, base_seed, n, config.threads), config.model, config.threads);
}

double policy_improvement(const EvaluationReport& report, const EvaluationReport& benchmark) {
    if (benchmark.mean_profit == 0.0) throw std::domain_error("policy improvement undefined for a zero benchmark");
    return (report.mean_profit - benchmark.mean_profit) / std::abs(benchmark.mean_profit);
}

Improvement paired_improvement(const EvaluationReport& report, const EvaluationReport& benchmark) {
    if (report.profits.size() != benchmark.profits.size())
        throw std::invalid_argument("paired improvement needs reports over the same paths");
    Improvement out;
    out.delta = policy_improvement(report, benchmark);
    std::vector<double> diff(report.profits.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = report.profits[i] - benchmark.profits[i];
    out.std_error = summarize(std::move(diff)).std_error / std::abs(benchmark.mean_profit);
    return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 0) throw std::invalid_argument("linspace needs at least one point");
    if (count == 1) return {lo};
    std::vector<double> v(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) v[i] = lo + step * static_cast<double>(i);
    v.back() = hi;
    return v;
}

std::vector<GridPoint> scan_objective(const policy::Parameterization& shape, const std::vector<Axis>& axes,
                                      const PathSet& paths, const storage::ModelParams& model,
                                      const EvaluationReport& benchmark, std::size_t threads) {
    if (axes.empty() || axes.size() > 2) throw std::invalid_argument("grid scans take one or two axes");
    const auto base = policy::parameters(shape);
    for (const auto& a : axes) {
        if (a.coordinate >= base.size()) throw std::invalid_argument("axis coordinate out of range");
        if (a.values.empty()) throw std::invalid_argument("axis has no values");
    }
    if (axes.size() == 2 && axes[0].coordinate == axes[1].coordinate)
        throw std::invalid_argument("grid axes must address different coordinates");

    const std::size_t inner = axes.size() == 2 ? axes[1].values.size() : 1;
    const std::size_t cells = axes[0].values.size() * inner;
    std::vector<GridPoint> grid(cells);
    std::vector<policy::Parameterization> thetas;
    thetas.reserve(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        auto v = base;
        grid[c].coordinates.push_back(axes[0].values[c / inner]);
        v[axes[0].coordinate] = grid[c].coordinates[0];
        if (axes.size() == 2) {
            grid[c].coordinates.push_back(axes[1].values[c % inner]);
            v[axes[1].coordinate] = grid[c].coordinates[1];
        }
        thetas.push_back(policy::with_parameters(shape, v));
    }

    // flatten (cell, path) so a fixed-ω scan still spreads over the workers
    const std::size_t n = paths.size();
    std::vector<double> profits(cells * n);
    parallel_for(cells * n, threads, [&](std::size_t i) {
        profits[i] = -rollout_cost(thetas[i / n], paths.path(i % n), model);
    });
    for (std::size_t c = 0; c < cells; ++c) {
        grid[c].report = summarize({profits.begin() + static_cast<std::ptrdiff_t>(c * n),
                                    profits.begin() + static_cast<std::ptrdiff_t>((c + 1) * n)});
        grid[c].improvement = benchmark.mean_profit == 0.0 ? 0.0 : policy_improvement(grid[c].report, benchmark);
    }
    return grid;
}

void write_grid_csv(std::ostream& out, const std::vector<Axis>& axes, const std::vector<GridPoint>& grid) {
    for (const auto& a : axes) out << "theta_" << a.coordinate << ',';
    out << "mean,stderr,delta_f\n";
    const auto old_precision = out.precision(12);
    for (const auto& g : grid) {
        for (const double c : g.coordinates) out << c << ',';
        out << g.report.mean_profit << ',' << g.report.std_error << ',' << g.improvement << '\n';
    }
    out.precision(old_precision);
}

namespace {

// Row 0 of demand and price replaced by the realized series; wind keeps the
// forecasts held at t = 0.
forecast::ForecastSet static_view(const forecast::ForecastSet& path) {
    const std::size_t T = path.horizon_end();
    if (path.energy.lookahead() < T) throw std::invalid_argument("static mode needs forecasts over the whole horizon");
    forecast::ForecastSet view = path;
    for (std::size_t t = 1; t <= T; ++t) {
        view.demand(0, t) = path.demand.realized(t);
        view.price(0, t) = path.price.realized(t);
    }
    return view;
}

}  // namespace

lp::LinearProgram build_static_lp(const forecast::ForecastSet& path, const policy::AffineRhs& theta,
                                  const storage::ModelParams& model, double initial_storage) {
    const auto view = std::make_shared<const forecast::ForecastSet>(static_view(path));
    return policy::build_lookahead_lp(storage::StorageState{0, initial_storage, view}, theta, model);
}

StaticSolution solve_static(const forecast::ForecastSet& path, const policy::AffineRhs& theta,
                            const storage::ModelParams& model) {
    using L = policy::LookaheadLayout;
    const auto view = std::make_shared<const forecast::ForecastSet>(static_view(path));
    const storage::StorageState s0{0, model.initial_storage, view};
    const auto lp = policy::build_lookahead_lp(s0, theta, model);
    const auto sol = lp::solve(lp);
    if (!sol.optimal()) throw policy::PolicyError("static LP not solved: " + lp::to_string(sol.status));
    const auto layout = policy::layout_for(s0, theta);
    const auto sens = lp::rhs_sensitivity(sol, lp);

    StaticSolution out;
    const std::size_t T = path.horizon_end();
    // rhs moves per unit of θ₀ and θ₁
    Eigen::MatrixXd directions = Eigen::MatrixXd::Zero(lp.rhs.size(), 2);
    double constant = 0.0;
    for (std::size_t t = 0; t <= T; ++t) constant += model.shortage_penalty * path.demand.realized(t);
    out.objective = sol.objective_value + constant;
    for (std::size_t t = 1; t <= T; ++t) {
        const double f = path.energy(0, t);
        const double arg = theta.intercept + theta.slope * f;
        if (std::abs(arg) <= 1e-12) out.degenerate = true;
        if (arg > 0.0) {
            const auto row = static_cast<Eigen::Index>(layout.row(t, L::kWindRow));
            out.subgradient += sens.gradient[row] * Eigen::Vector2d(1.0, f);
            directions(row, 0) = 1.0;
            directions(row, 1) = f;
        }
    }
    out.degenerate = out.degenerate || !lp::basis_stable_along(sol, lp, directions);
    for (std::size_t t = 0; t <= T; ++t) {
        std::array<double, storage::Decision::kSize> x{};
        for (std::size_t v = 0; v < L::kVarsPerStage; ++v)
            x[v] = std::max(0.0, sol.point[static_cast<Eigen::Index>(layout.var(t, static_cast<L::Var>(v)))]);
        out.plan.push_back(storage::Decision::from_array(x));
    }
    out.realized_cost = realized_plan_cost(path, out.plan, model);
    return out;
}

double realized_plan_cost(const forecast::ForecastSet& path, const std::vector<storage::Decision>& plan,
                          const storage::ModelParams& model) {
    const std::size_t T = path.horizon_end();
    if (plan.size() != T + 1) throw std::invalid_argument("plan length must be T+1");
    double r = model.initial_storage;
    double total = 0.0;
    for (std::size_t t = 0; t <= T; ++t) {
        auto x = plan[t];
        const double e = path.energy.realized(t);
        if (const double wind = x.wind_to_demand + x.wind_to_storage; wind > e) {
            const double k = wind > 0.0 ? e / wind : 0.0;
            x.wind_to_demand *= k;
            x.wind_to_storage *= k;
        }
        if (const double draw = x.storage_to_demand + x.storage_to_grid; draw > r) {
            const double k = draw > 0.0 ? r / draw : 0.0;
            x.storage_to_demand *= k;
            x.storage_to_grid *= k;
        }
        const double net = x.wind_to_storage + x.grid_to_storage - x.storage_to_demand - x.storage_to_grid;
        if (net > model.capacity - r) {
            const double charge = x.wind_to_storage + x.grid_to_storage;
            const double k = charge > 0.0 ? std::max(0.0, charge - (net - (model.capacity - r))) / charge : 0.0;
            x.wind_to_storage *= k;
            x.grid_to_storage *= k;
        }
        total += storage::contribution(path.demand.realized(t), path.market_price, path.price.realized(t), x, model);
        r = std::clamp(r - x.storage_to_demand + model.charge_efficiency * (x.wind_to_storage + x.grid_to_storage) -
                           x.storage_to_grid,
                       0.0, model.capacity);
    }
    return total;
}

}  // namespace cfa::sim
