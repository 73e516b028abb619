#include "experiment.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace cfa::cli {

namespace {

using Json = nlohmann::ordered_json;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool multiplier_family(const std::string& family) { return family == "constant" || family == "lookup"; }

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
}

Json config_json(const ExperimentConfig& config) {
    std::ostringstream dump;
    write_config(dump, config);
    Json out = Json::object();
    std::istringstream in(dump.str());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

Json report_json(const sim::EvaluationReport& r) {
    return Json{{"paths", r.n}, {"mean_profit", r.mean_profit}, {"std_error", r.std_error}};
}

Json improvement_json(const sim::Improvement& i) {
    return Json{{"delta_f", i.delta}, {"std_error", i.std_error}, {"lower_bound_2se", i.lower_bound(2.0)}};
}

void write_report(const std::filesystem::path& dir, const ExperimentConfig& config, const std::string& command,
                  Json body) {
    Json report;
    report["command"] = command;
    report["config"] = config_json(config);
    for (auto& [key, value] : body.items()) report[key] = value;
    auto out = open_output(dir, "report.json");
    out << report.dump(2) << '\n';
}

sim::PathSet test_paths(const ExperimentConfig& config, std::size_t count) {
    const forecast::ForecastGenerator gen(config.sim.forecast);
    return sim::PathSet(gen, config.test_seed, count, config.sim.threads);
}

policy::Parameterization chosen_policy(const ExperimentConfig& config) {
    const auto shape = shape_for(config);
    const auto starts = starting_points(config);
    return policy::with_parameters(shape, to_vector(starts.front()));
}

}  // namespace

void write_header(std::ostream& out, const ExperimentConfig& config, const std::string& command) {
    out << "# cfa " << command << '\n';
    write_config(out, config, "# ");
}

policy::Parameterization shape_for(const ExperimentConfig& config) {
    return policy::neutral(config.family, config.sim.forecast.lookahead, config.sim.model);
}

std::vector<Eigen::VectorXd> starting_points(const ExperimentConfig& config) {
    const auto shape = shape_for(config);
    const std::size_t d = policy::parameters(shape).size();
    if (!config.theta0.empty()) {
        if (config.theta0.size() != d)
            throw ConfigError(0, "policy.theta0 has " + std::to_string(config.theta0.size()) + " values, family " +
                                     config.family + " needs " + std::to_string(d));
        policy::validate(policy::with_parameters(shape, config.theta0), config.sim.forecast.lookahead,
                         config.sim.model);
        return {to_eigen(config.theta0)};
    }
    if (!multiplier_family(config.family)) return {to_eigen(policy::parameters(shape))};
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(config.start_lower, config.start_upper);
    std::vector<Eigen::VectorXd> starts;
    for (std::size_t s = 0; s < config.starts; ++s) {
        Eigen::VectorXd theta(static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = u(rng);
        starts.push_back(theta);
    }
    return starts;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                std::ostream& log) {
    config.validate();
    const auto shape = shape_for(config);
    const std::size_t d = policy::parameters(shape).size();
    if (d == 0 && config.method != "none")
        throw ConfigError(0, "policy.family identity has no parameters to optimize; use optimizer.method = none");
    const auto starts = starting_points(config);

    const auto test = test_paths(config, config.test_paths);
    ExperimentResult result;
    result.benchmark = sim::evaluate(policy::Identity{}, test, config.sim.model, config.sim.threads);
    log << "benchmark mean profit " << result.benchmark.mean_profit << " (" << test.size() << " test paths)\n";

    std::optional<opt::PolicyObjective> objective;
    if (config.method == "sgf" || config.method == "sng") objective.emplace(shape, config.sim);
    for (std::size_t s = 0; s < starts.size(); ++s) {
        StartResult r;
        r.theta0 = starts[s];
        r.sample_base = config.train_seed + s * config.training_span();
        if (config.method == "sgf") {
            opt::SgfOptions o;
            o.iterations = config.iterations;
            o.schedule = {config.l0, d, config.smoothing_beta};
            if (config.stepsize != "auto" && config.stepsize != "schedule") o.stepsize = config.stepsize_rule();
            o.batch_size = config.batch_size;
            o.sample_base = r.sample_base;
            o.seed = config.seed + 1 + s;
            o.projection = config.box();
            r.run = opt::run_sgf_cfa(*objective, r.theta0, o);
        } else if (config.method == "sng") {
            opt::SngOptions o;
            o.iterations = config.iterations;
            o.stepsize = config.stepsize_rule();
            o.h = config.h;
            o.sample_base = r.sample_base;
            o.projection = config.box();
            r.run = opt::run_sng_cfa(*objective, r.theta0, o);
        } else if (config.method == "static") {
            // the static LP needs forecasts over the whole horizon from t = 0
            auto full = config.sim.forecast;
            full.lookahead = full.horizon_end;
            const sim::PathSet train(forecast::ForecastGenerator(full), r.sample_base, config.static_paths,
                                     config.sim.threads);
            const opt::StaticObjective f(train, config.sim.model);
            opt::StaticOptions o;
            o.iterations = config.iterations;
            o.stepsize = config.stepsize_rule();
            o.seed = config.seed + 1 + s;
            o.projection = config.box();
            r.run = opt::run_static_cfa(f, r.theta0, o);
        }
        r.theta = config.method == "none" ? r.theta0 : r.run.output();

        r.test = sim::evaluate(policy::with_parameters(shape, to_vector(r.theta)), test, config.sim.model,
                               config.sim.threads);
        r.improvement = sim::paired_improvement(r.test, result.benchmark);
        r.start_improvement = config.method == "none"
                                  ? r.improvement
                                  : sim::paired_improvement(sim::evaluate(policy::with_parameters(shape, to_vector(r.theta0)),
                                                                          test, config.sim.model, config.sim.threads),
                                                            result.benchmark);
        log << "start " << s << ": delta_f " << r.start_improvement.delta << " -> " << r.improvement.delta
            << " (stderr " << r.improvement.std_error << ")\n";

        if (!out_dir.empty() && config.method != "none") {
            auto trace = open_output(out_dir, "trace_" + std::to_string(s) + ".csv");
            write_header(trace, config, "optimize");
            trace << "# start = " << s << "\n# sample_base = " << r.sample_base << '\n';
            opt::write_trace_csv(trace, r.run);
        }
        result.starts.push_back(std::move(r));
    }

    if (!out_dir.empty()) {
        Json runs = Json::array();
        for (std::size_t s = 0; s < result.starts.size(); ++s) {
            const auto& r = result.starts[s];
            Json j{{"start", s},
                   {"sample_base", r.sample_base},
                   {"direction_seed", config.seed + 1 + s},
                   {"theta0", to_vector(r.theta0)},
                   {"theta", to_vector(r.theta)}};
            if (config.method != "none") {
                j["output_index"] = r.run.output_index;
                j["theta_averaged"] = to_vector(r.run.averaged);
                j["evaluations"] = r.run.evaluations;
            }
            j["start_test"] = improvement_json(r.start_improvement);
            j["test"] = report_json(r.test);
            j["improvement"] = improvement_json(r.improvement);
            runs.push_back(j);
        }
        write_report(out_dir, config, "optimize",
                     Json{{"seeds", {{"run", config.seed}, {"train", config.train_seed}, {"test", config.test_seed}}},
                          {"benchmark", report_json(result.benchmark)},
                          {"starts", runs}});
    }
    return result;
}

std::vector<sim::GridPoint> grid_search(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                        std::ostream& log) {
    config.validate();
    const auto shape = shape_for(config);
    const std::size_t d = policy::parameters(shape).size();
    std::vector<sim::Axis> axes;
    for (const auto& a : config.axes) {
        if (a.coordinate >= d)
            throw ConfigError(0, "grid axis coordinate " + std::to_string(a.coordinate) + " is out of range for " +
                                     std::to_string(d) + " parameters");
        axes.push_back({a.coordinate, sim::linspace(a.lower, a.upper, a.count)});
    }
    const auto base = chosen_policy(config);
    const auto paths = test_paths(config, config.grid_paths);
    const auto bench = sim::evaluate(policy::Identity{}, paths, config.sim.model, config.sim.threads);
    const auto grid = sim::scan_objective(base, axes, paths, config.sim.model, bench, config.sim.threads);

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i].report.mean_profit > grid[best].report.mean_profit) best = i;
    log << grid.size() << " grid points, best delta_f " << grid[best].improvement << '\n';

    if (!out_dir.empty()) {
        auto csv = open_output(out_dir, "grid.csv");
        write_header(csv, config, "grid-search");
        sim::write_grid_csv(csv, axes, grid);
        write_report(out_dir, config, "grid-search",
                     Json{{"seeds", {{"test", config.test_seed}}},
                          {"benchmark", report_json(bench)},
                          {"points", grid.size()},
                          {"best", {{"coordinates", grid[best].coordinates},
                                    {"mean_profit", grid[best].report.mean_profit},
                                    {"delta_f", grid[best].improvement}}}});
    }
    return grid;
}

void emit_forecast_sample(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
    config.validate();
    const auto set = forecast::ForecastGenerator(config.sim.forecast).sample(config.seed);
    auto csv = open_output(out_dir, "forecast.csv");
    write_header(csv, config, "forecast-gen");
    forecast::write_forecast_csv(csv, set);
    log << "wrote " << (out_dir / "forecast.csv").string() << '\n';
}

sim::Trajectory simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
    config.validate();
    const auto theta = chosen_policy(config);
    const auto traj = sim::rollout(theta, config.seed, config.sim);
    const auto bench = sim::rollout(policy::Identity{}, config.seed, config.sim);
    log << "profit " << traj.profit() << " (unmodified lookahead " << bench.profit() << ")\n";
    if (!out_dir.empty()) {
        auto csv = open_output(out_dir, "trajectory.csv");
        write_header(csv, config, "simulate");
        storage::write_trajectory_csv(csv, traj.steps);
        write_report(out_dir, config, "simulate",
                     Json{{"seeds", {{"path", config.seed}}},
                          {"theta", policy::parameters(theta)},
                          {"profit", traj.profit()},
                          {"benchmark_profit", bench.profit()}});
    }
    return traj;
}

sim::Improvement benchmark(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
    config.validate();
    const auto theta = chosen_policy(config);
    const auto paths = test_paths(config, config.test_paths);
    const auto bench = sim::evaluate(policy::Identity{}, paths, config.sim.model, config.sim.threads);
    const auto report = sim::evaluate(theta, paths, config.sim.model, config.sim.threads);
    const auto imp = sim::paired_improvement(report, bench);
    log << "delta_f " << imp.delta << " (stderr " << imp.std_error << ", " << paths.size() << " paths)\n";
    if (!out_dir.empty()) {
        auto csv = open_output(out_dir, "benchmark.csv");
        write_header(csv, config, "benchmark");
        csv << "seed,benchmark_profit,policy_profit\n";
        for (std::size_t i = 0; i < paths.size(); ++i)
            csv << paths.seed(i) << ',' << format_number(bench.profits[i]) << ',' << format_number(report.profits[i])
                << '\n';
        write_report(out_dir, config, "benchmark",
                     Json{{"seeds", {{"test", config.test_seed}}},
                          {"theta", policy::parameters(theta)},
                          {"benchmark", report_json(bench)},
                          {"policy", report_json(report)},
                          {"improvement", improvement_json(imp)}});
    }
    return imp;
}

}  // namespace cfa::cli
