#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cfa/optimizer.hpp"
#include "cfa/parallel.hpp"

namespace cfa::opt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dimension(const SampleObjective& f, const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(theta.size()) != f.dimension())
        throw std::invalid_argument("θ has " + std::to_string(theta.size()) + " coordinates, objective expects " +
                                    std::to_string(f.dimension()));
}

Eigen::VectorXd standard_normal_vector(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    return v;
}

OptimizerRun start_run(std::string method, const Eigen::VectorXd& theta0) {
    OptimizerRun run;
    run.method = std::move(method);
    run.iterates.push_back(theta0);
    run.averaged = Eigen::VectorXd::Zero(theta0.size());
    return run;
}

void record_step(OptimizerRun& run, const Eigen::VectorXd& theta, const Eigen::VectorXd& alpha, double smoothing,
                 const Eigen::VectorXd& g, double cost) {
    run.iterates.push_back(theta);
    run.stepsizes.push_back(alpha.mean());
    run.smoothing.push_back(smoothing);
    run.gradient_norms.push_back(g.norm());
    run.batch_costs.push_back(cost);
    const double n = static_cast<double>(run.stepsizes.size());
    run.averaged += (theta - run.averaged) / n;
}

}  // namespace

std::string rule_name(const StepsizeRule& rule) {
    return std::visit(overloaded{
                          [](const AdaGrad&) { return std::string("adagrad"); },
                          [](const RMSProp&) { return std::string("rmsprop"); },
                          [](const Polynomial&) { return std::string("polynomial"); },
                      },
                      rule);
}

void validate(const StepsizeRule& rule) {
    std::visit(overloaded{
                   [](const AdaGrad& a) {
                       if (!(a.eta > 0.0) || a.epsilon < 0.0)
                           throw std::invalid_argument("adagrad needs eta > 0 and epsilon >= 0");
                   },
                   [](const RMSProp& r) {
                       if (!(r.eta > 0.0) || r.epsilon < 0.0 || !(r.beta > 0.0 && r.beta < 1.0))
                           throw std::invalid_argument("rmsprop needs eta > 0, epsilon >= 0 and beta in (0,1)");
                   },
                   [](const Polynomial& p) {
                       if (!(p.scale > 0.0)) throw std::invalid_argument("polynomial stepsize scale must be positive");
                   },
               },
               rule);
}

Eigen::VectorXd apply_stepsize(const StepsizeRule& rule, StepsizeState& state, const Eigen::VectorXd& g) {
    ++state.k;
    return std::visit(
        overloaded{
            [&](const AdaGrad& a) -> Eigen::VectorXd {
                if (state.squared_sum.size() != g.size()) state.squared_sum = Eigen::VectorXd::Zero(g.size());
                state.squared_sum += g.cwiseAbs2();
                Eigen::VectorXd alpha(g.size());
                for (Eigen::Index j = 0; j < g.size(); ++j) {
                    const double denom = state.squared_sum[j] + a.epsilon;
                    alpha[j] = denom > 0.0 ? a.eta / std::sqrt(denom) : 0.0;
                }
                return alpha;
            },
            [&](const RMSProp& r) -> Eigen::VectorXd {
                state.average = r.beta * state.average + (1.0 - r.beta) * g.squaredNorm();
                const double denom = state.average + r.epsilon;
                return Eigen::VectorXd::Constant(g.size(), denom > 0.0 ? r.eta / std::sqrt(denom) : 0.0);
            },
            [&](const Polynomial& p) -> Eigen::VectorXd {
                return Eigen::VectorXd::Constant(g.size(), p.scale / std::sqrt(static_cast<double>(state.k)));
            },
        },
        rule);
}

void SmoothingSchedule::validate() const {
    if (!(l0 > 0.0)) throw std::invalid_argument("smoothing constant L0 must be positive");
    if (dimension == 0) throw std::invalid_argument("smoothing dimension must be positive");
    if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("smoothing exponent must lie strictly in (0, 1/2)");
}

std::pair<double, double> schedule_values(const SmoothingSchedule& schedule, std::size_t k) {
    if (k == 0) throw std::invalid_argument("schedule index starts at 1");
    const double kk = static_cast<double>(k);
    return {schedule.l0 * (static_cast<double>(schedule.dimension) + 4.0) / std::pow(kk, schedule.beta),
            1.0 / std::sqrt(kk)};
}

std::vector<double> output_index_pmf(std::span<const double> alphas) {
    if (alphas.empty()) throw std::invalid_argument("output index needs at least one weight");
    for (const double a : alphas)
        if (!(a > 0.0)) throw std::invalid_argument("output index weights must be positive");
    // Neumaier summation keeps the total within an ulp for long runs
    double total = 0.0, carry = 0.0;
    for (const double a : alphas) {
        const double t = total + a;
        carry += std::abs(total) >= a ? (total - t) + a : (a - t) + total;
        total = t;
    }
    total += carry;
    std::vector<double> pmf(alphas.begin(), alphas.end());
    for (auto& p : pmf) p /= total;
    return pmf;
}

std::size_t sample_output_index(std::span<const double> alphas, std::mt19937_64& rng) {
    output_index_pmf(alphas);
    std::discrete_distribution<std::size_t> dist(alphas.begin(), alphas.end());
    return dist(rng) + 1;
}

std::vector<double> SampleObjective::values(const std::vector<Query>& queries) const {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(value(q.theta, q.sample));
    return out;
}

PolicyObjective::PolicyObjective(policy::Parameterization shape, sim::SimulationConfig config)
    : shape_(std::move(shape)),
      config_(std::move(config)),
      generator_(config_.forecast),
      dimension_(policy::parameters(shape_).size()) {
    config_.validate();
    if (dimension_ == 0) throw std::invalid_argument("parameterization has nothing to tune");
}

policy::Parameterization PolicyObjective::parameterization(const Eigen::VectorXd& theta) const {
    return policy::with_parameters(shape_, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
}

double PolicyObjective::value(const Eigen::VectorXd& theta, std::uint64_t sample) const {
    const auto path = std::make_shared<const forecast::ForecastSet>(generator_.sample(sample));
    return sim::rollout_cost(parameterization(theta), path, config_.model);
}

std::vector<double> PolicyObjective::values(const std::vector<Query>& queries) const {
    std::map<std::uint64_t, std::size_t> slot;
    for (const auto& q : queries) slot.emplace(q.sample, slot.size());
    std::vector<std::uint64_t> seeds(slot.size());
    for (const auto& [seed, i] : slot) seeds[i] = seed;
    std::vector<sim::PathPtr> paths(seeds.size());
    parallel_for(seeds.size(), config_.threads, [&](std::size_t i) {
        paths[i] = std::make_shared<const forecast::ForecastSet>(generator_.sample(seeds[i]));
    });
    std::vector<double> out(queries.size());
    parallel_for(queries.size(), config_.threads, [&](std::size_t i) {
        out[i] = sim::rollout_cost(parameterization(queries[i].theta), paths[slot.at(queries[i].sample)], config_.model);
    });
    return out;
}

Box Box::uniform(std::size_t d, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("box needs lower <= upper");
    const auto n = static_cast<Eigen::Index>(d);
    return Box{Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

Eigen::VectorXd Box::project(const Eigen::VectorXd& theta) const {
    if (lower.size() != upper.size()) throw std::invalid_argument("box bounds differ in length");
    Eigen::VectorXd out = theta;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const Eigen::Index j = lower.size() == 1 ? 0 : i;
        if (j >= lower.size()) throw std::invalid_argument("box dimension does not match θ");
        out[i] = std::clamp(out[i], lower[j], upper[j]);
    }
    return out;
}

Eigen::VectorXd sgf_gradient_estimate(const SampleObjective& f, const Eigen::VectorXd& theta, double eta,
                                      std::uint64_t sample, const Eigen::VectorXd& v) {
    require_dimension(f, theta);
    if (!(eta > 0.0)) throw std::invalid_argument("smoothing parameter must be positive");
    if (v.size() != theta.size()) throw std::invalid_argument("direction and θ differ in length");
    const auto vals = f.values({{theta + eta * v, sample}, {theta, sample}});
    return (vals[0] - vals[1]) / eta * v;
}

Eigen::VectorXd sng_gradient_estimate(const SampleObjective& f, const Eigen::VectorXd& theta, double h,
                                      std::uint64_t sample) {
    require_dimension(f, theta);
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const Eigen::Index d = theta.size();
    std::vector<SampleObjective::Query> queries;
    queries.reserve(static_cast<std::size_t>(2 * d));
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd plus = theta, minus = theta;
        plus[i] += h;
        minus[i] -= h;
        queries.push_back({std::move(plus), sample});
        queries.push_back({std::move(minus), sample});
    }
    const auto vals = f.values(queries);
    Eigen::VectorXd g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(2 * i);
        g[i] = (vals[k] - vals[k + 1]) / (2.0 * h);
    }
    return g;
}

void write_trace_csv(std::ostream& out, const OptimizerRun& run) {
    const std::size_t d = run.iterates.empty() ? 0 : static_cast<std::size_t>(run.iterates.front().size());
    out << 'k';
    for (std::size_t i = 0; i < d; ++i) out << ",theta_" << i;
    out << ",alpha,eta,grad_norm,batch_cost\n";
    const auto old_precision = out.precision(12);
    for (std::size_t k = 0; k < run.iterates.size(); ++k) {
        out << k;
        for (const double x : run.iterates[k]) out << ',' << x;
        if (k == 0) {
            out << ",,,,\n";
            continue;
        }
        out << ',' << run.stepsizes[k - 1] << ',' << run.smoothing[k - 1] << ',' << run.gradient_norms[k - 1] << ','
            << run.batch_costs[k - 1] << '\n';
    }
    out.precision(old_precision);
}

OptimizerRun run_sgf_cfa(const SampleObjective& f, const Eigen::VectorXd& theta0, const SgfOptions& options) {
    require_dimension(f, theta0);
    if (options.iterations == 0) throw std::invalid_argument("SGF-CFA needs at least one iteration");
    if (options.batch_size == 0) throw std::invalid_argument("mini-batch size must be positive");
    options.schedule.validate();
    if (options.stepsize) validate(*options.stepsize);

    const std::size_t d = f.dimension();
    std::mt19937_64 rng(options.seed);
    StepsizeState state;
    OptimizerRun run = start_run("sgf", theta0);
    Eigen::VectorXd theta = theta0;
    for (std::size_t k = 1; k <= options.iterations; ++k) {
        const auto [eta, alpha_k] = schedule_values(options.schedule, k);
        std::vector<Eigen::VectorXd> directions;
        std::vector<SampleObjective::Query> queries;
        for (std::size_t j = 0; j < options.batch_size; ++j) {
            const std::uint64_t sample = options.sample_base + (k - 1) * options.batch_size + j;
            directions.push_back(standard_normal_vector(d, rng));
            queries.push_back({theta + eta * directions.back(), sample});
            queries.push_back({theta, sample});
        }
        const auto vals = f.values(queries);
        run.evaluations += vals.size();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
        double cost = 0.0;
        for (std::size_t j = 0; j < options.batch_size; ++j) {
            g += (vals[2 * j] - vals[2 * j + 1]) / eta * directions[j];
            cost += vals[2 * j + 1];
        }
        const double b = static_cast<double>(options.batch_size);
        g /= b;
        const Eigen::VectorXd alpha = options.stepsize ? apply_stepsize(*options.stepsize, state, g)
                                                       : Eigen::VectorXd::Constant(theta.size(), alpha_k);
        theta -= alpha.cwiseProduct(g);
        if (options.projection) theta = options.projection->project(theta);
        record_step(run, theta, alpha, eta, g, cost / b);
    }
    run.output_index = sample_output_index(run.stepsizes, rng);
    return run;
}

OptimizerRun run_sng_cfa(const SampleObjective& f, const Eigen::VectorXd& theta0, const SngOptions& options) {
    require_dimension(f, theta0);
    if (options.iterations == 0) throw std::invalid_argument("SNG-CFA needs at least one iteration");
    validate(options.stepsize);

    StepsizeState state;
    OptimizerRun run = start_run("sng", theta0);
    Eigen::VectorXd theta = options.projection ? options.projection->project(theta0) : theta0;
    for (std::size_t n = 1; n <= options.iterations; ++n) {
        const std::uint64_t sample = options.sample_base + n - 1;
        const Eigen::Index d = theta.size();
        std::vector<SampleObjective::Query> queries;
        for (Eigen::Index i = 0; i < d; ++i) {
            Eigen::VectorXd plus = theta, minus = theta;
            plus[i] += options.h;
            minus[i] -= options.h;
            queries.push_back({std::move(plus), sample});
            queries.push_back({std::move(minus), sample});
        }
        const auto vals = f.values(queries);
        run.evaluations += vals.size();
        Eigen::VectorXd g(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto k = static_cast<std::size_t>(2 * i);
            g[i] = (vals[k] - vals[k + 1]) / (2.0 * options.h);
        }
        const double cost = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        const Eigen::VectorXd alpha = apply_stepsize(options.stepsize, state, g);
        theta -= alpha.cwiseProduct(g);
        if (options.projection) theta = options.projection->project(theta);
        record_step(run, theta, alpha, options.h, g, cost);
    }
    run.output_index = options.iterations;
    return run;
}

StaticObjective::StaticObjective(sim::PathSet paths, storage::ModelParams model, bool free_intercept,
                                 double fixed_intercept)
    : paths_(std::move(paths)), model_(model), free_intercept_(free_intercept), fixed_intercept_(fixed_intercept) {
    model_.validate();
    if (paths_.size() == 0) throw std::invalid_argument("static objective needs at least one path");
}

policy::AffineRhs StaticObjective::parameterization(const Eigen::VectorXd& theta) const {
    require_dimension(*this, theta);
    return free_intercept_ ? policy::AffineRhs{theta[0], theta[1]} : policy::AffineRhs{fixed_intercept_, theta[0]};
}

StaticObjective::Evaluation StaticObjective::evaluate(const Eigen::VectorXd& theta, std::uint64_t sample) const {
    if (sample >= paths_.size()) throw std::out_of_range("static objective sample index out of range");
    const auto sol = sim::solve_static(*paths_.path(static_cast<std::size_t>(sample)), parameterization(theta), model_);
    Evaluation out;
    out.value = sol.objective;
    out.degenerate = sol.degenerate;
    out.subgradient = free_intercept_ ? Eigen::VectorXd(sol.subgradient) : Eigen::VectorXd::Constant(1, sol.subgradient[1]);
    return out;
}

double StaticObjective::value(const Eigen::VectorXd& theta, std::uint64_t sample) const {
    return evaluate(theta, sample).value;
}

StaticObjective::Evaluation StaticObjective::average(const Eigen::VectorXd& theta) const {
    Evaluation out;
    out.subgradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    for (std::size_t i = 0; i < paths_.size(); ++i) {
        const auto e = evaluate(theta, i);
        out.value += e.value;
        out.subgradient += e.subgradient;
        out.degenerate = out.degenerate || e.degenerate;
    }
    const double n = static_cast<double>(paths_.size());
    out.value /= n;
    out.subgradient /= n;
    return out;
}

policy::AffineRhs require_static_compatible(const policy::Parameterization& theta) {
    if (const auto* affine = std::get_if<policy::AffineRhs>(&theta)) return *affine;
    if (!policy::modifies_forecast_only(theta))
        throw std::invalid_argument("static CFA rejects parameterizations of the storage rows (convexity needs them fixed)");
    throw std::invalid_argument("static CFA needs the affine wind parameterization, got " + policy::family_name(theta));
}

Eigen::VectorXd static_subgradient(const StaticObjective& f, const Eigen::VectorXd& theta, std::uint64_t sample,
                                   bool* degenerate) {
    auto e = f.evaluate(theta, sample);
    if (degenerate) *degenerate = e.degenerate;
    return e.subgradient;
}

OptimizerRun run_static_cfa(const StaticObjective& f, const Eigen::VectorXd& theta0, const StaticOptions& options) {
    require_dimension(f, theta0);
    if (options.iterations == 0) throw std::invalid_argument("static CFA needs at least one iteration");
    validate(options.stepsize);

    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, f.sample_count() - 1);
    StepsizeState state;
    OptimizerRun run = start_run("static", theta0);
    Eigen::VectorXd theta = options.projection ? options.projection->project(theta0) : theta0;
    for (std::size_t n = 1; n <= options.iterations; ++n) {
        const auto e = f.evaluate(theta, pick(rng));
        ++run.evaluations;
        const Eigen::VectorXd alpha = apply_stepsize(options.stepsize, state, e.subgradient);
        theta -= alpha.cwiseProduct(e.subgradient);
        if (options.projection) theta = options.projection->project(theta);
        record_step(run, theta, alpha, 0.0, e.subgradient, e.value);
    }
    run.output_index = options.iterations;
    return run;
}

}  // namespace cfa::opt
