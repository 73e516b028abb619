#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cfa::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw std::invalid_argument("expected a number, got '" + s + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("expected a nonnegative integer, got '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string one_of(const std::string& v, std::initializer_list<const char*> allowed) {
    std::string list;
    for (const char* a : allowed) {
        if (v == a) return v;
        list += (list.empty() ? "" : ", ") + std::string(a);
    }
    throw std::invalid_argument("'" + v + "' is not one of: " + list);
}

struct Entry {
    std::string section;
    std::string key;
    std::string doc;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class Access>
Entry number(std::string section, std::string key, std::string doc, Access access) {
    return {std::move(section), std::move(key), std::move(doc),
            [access](ExperimentConfig& c, const std::string& v) { access(c) = parse_double(v); },
            [access](const ExperimentConfig& c) {
                auto copy = c;
                return format_number(access(copy));
            }};
}

template <class Access>
Entry count(std::string section, std::string key, std::string doc, Access access) {
    return {std::move(section), std::move(key), std::move(doc),
            [access](ExperimentConfig& c, const std::string& v) {
                access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(parse_unsigned(v));
            },
            [access](const ExperimentConfig& c) {
                auto copy = c;
                return std::to_string(access(copy));
            }};
}

template <class Access>
Entry text(std::string section, std::string key, std::string doc, Access access,
           std::function<std::string(const std::string&)> check = {}) {
    return {std::move(section), std::move(key), std::move(doc),
            [access, check](ExperimentConfig& c, const std::string& v) { access(c) = check ? check(v) : v; },
            [access](const ExperimentConfig& c) {
                auto copy = c;
                return access(copy);
            }};
}

std::string format_axes(const std::vector<AxisSpec>& axes) {
    std::string out;
    for (const auto& a : axes) {
        if (!out.empty()) out += ", ";
        out += std::to_string(a.coordinate) + ":" + format_number(a.lower) + ":" + format_number(a.upper) + ":" +
               std::to_string(a.count);
    }
    return out;
}

std::vector<AxisSpec> parse_axes(const std::string& v) {
    std::vector<AxisSpec> axes;
    for (const auto& item : split(v, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 4) throw std::invalid_argument("axis '" + item + "' must be coordinate:lower:upper:count");
        AxisSpec a{static_cast<std::size_t>(parse_unsigned(parts[0])), parse_double(parts[1]), parse_double(parts[2]),
                   static_cast<std::size_t>(parse_unsigned(parts[3]))};
        if (a.count == 0 || a.lower > a.upper || (a.count == 1 && a.lower != a.upper))
            throw std::invalid_argument("axis '" + item + "' is empty or reversed");
        axes.push_back(a);
    }
    if (axes.empty() || axes.size() > 2) throw std::invalid_argument("grid takes one or two axes");
    return axes;
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (const double x : v) out += (out.empty() ? "" : ", ") + format_number(x);
    return out;
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        using C = ExperimentConfig;
        t.push_back(number("model", "capacity", "storage capacity R^max", [](C& c) -> double& { return c.sim.model.capacity; }));
        t.push_back(number("model", "max_charge", "charge rate limit", [](C& c) -> double& { return c.sim.model.max_charge; }));
        t.push_back(number("model", "max_discharge", "discharge rate limit",
                           [](C& c) -> double& { return c.sim.model.max_discharge; }));
        t.push_back(number("model", "charge_efficiency", "charging efficiency in (0, 1)",
                           [](C& c) -> double& { return c.sim.model.charge_efficiency; }));
        t.push_back(number("model", "discharge_efficiency", "discharging efficiency in (0, 1)",
                           [](C& c) -> double& { return c.sim.model.discharge_efficiency; }));
        t.push_back(number("model", "shortage_penalty", "cost per unit of unmet demand",
                           [](C& c) -> double& { return c.sim.model.shortage_penalty; }));
        t.push_back(number("model", "initial_storage", "R_0", [](C& c) -> double& { return c.sim.model.initial_storage; }));

        t.push_back(count("forecast", "horizon_end", "T, periods run 0..T",
                          [](C& c) -> std::size_t& { return c.sim.forecast.horizon_end; }));
        t.push_back(count("forecast", "lookahead", "H, periods in the lookahead window",
                          [](C& c) -> std::size_t& { return c.sim.forecast.lookahead; }));
        t.push_back({"forecast", "energy_variance", "variance of the wind forecast updates",
                     [](C& c, const std::string& v) {
                         const double var = parse_double(v);
                         if (var < 0.0) throw std::invalid_argument("variance must be nonnegative");
                         c.energy_variance = var;
                         c.sim.forecast.sigma_energy = std::sqrt(var);
                     },
                     [](const C& c) { return format_number(c.energy_variance); }});
        t.push_back(number("forecast", "demand_sigma", "scale of the demand forecast errors",
                           [](C& c) -> double& { return c.sim.forecast.sigma_demand; }));
        t.push_back(number("forecast", "alpha", "decay of the noise correlation with lead distance",
                           [](C& c) -> double& { return c.sim.forecast.alpha; }));
        t.push_back(number("forecast", "energy_level", "mean of the initial wind forecast",
                           [](C& c) -> double& { return c.sim.forecast.energy.level; }));
        t.push_back(number("forecast", "energy_amplitude", "daily swing of the initial wind forecast",
                           [](C& c) -> double& { return c.sim.forecast.energy.amplitude; }));
        t.push_back(number("forecast", "demand_base", "D", [](C& c) -> double& { return c.sim.forecast.demand.base; }));
        t.push_back(number("forecast", "demand_amplitude", "D-hat",
                           [](C& c) -> double& { return c.sim.forecast.demand.amplitude; }));
        t.push_back(number("forecast", "demand_frequency", "D-bar",
                           [](C& c) -> double& { return c.sim.forecast.demand.frequency; }));
        t.push_back(number("forecast", "demand_correlation", "lag-one correlation of the demand noise",
                           [](C& c) -> double& { return c.sim.forecast.demand.correlation; }));
        t.push_back(number("forecast", "price_slope", "b in price = a + b * demand",
                           [](C& c) -> double& { return c.sim.forecast.price.slope; }));
        t.push_back(number("forecast", "price_intercept_mean", "mean of a",
                           [](C& c) -> double& { return c.sim.forecast.price.intercept_mean; }));
        t.push_back(number("forecast", "price_intercept_std", "standard deviation of a",
                           [](C& c) -> double& { return c.sim.forecast.price.intercept_std; }));
        t.push_back(text("forecast", "cdf_file", "wind error CDF buckets; empty uses the built-in set",
                         [](C& c) -> std::string& { return c.cdf_file; }));

        t.push_back(text("policy", "family", "identity, constant, lookup, exp_bounds, bounds_table or affine",
                         [](C& c) -> std::string& { return c.family; },
                         [](const std::string& v) {
                             return one_of(v, {"identity", "constant", "lookup", "exp_bounds", "bounds_table", "affine"});
                         }));
        t.push_back({"policy", "theta0", "comma-separated start; empty draws random starts",
                     [](C& c, const std::string& v) {
                         c.theta0.clear();
                         if (v.empty()) return;
                         for (const auto& x : split(v, ',')) c.theta0.push_back(parse_double(x));
                     },
                     [](const C& c) { return format_list(c.theta0); }});
        t.push_back(count("policy", "starts", "random starts when theta0 is empty",
                          [](C& c) -> std::size_t& { return c.starts; }));
        t.push_back(number("policy", "start_lower", "lower end of the random start box",
                           [](C& c) -> double& { return c.start_lower; }));
        t.push_back(number("policy", "start_upper", "upper end of the random start box",
                           [](C& c) -> double& { return c.start_upper; }));

        t.push_back(text("optimizer", "method", "sgf, sng, static or none", [](C& c) -> std::string& { return c.method; },
                         [](const std::string& v) { return one_of(v, {"sgf", "sng", "static", "none"}); }));
        t.push_back(count("optimizer", "iterations", "N", [](C& c) -> std::size_t& { return c.iterations; }));
        t.push_back(count("optimizer", "batch_size", "sgf samples per iteration",
                          [](C& c) -> std::size_t& { return c.batch_size; }));
        t.push_back(text("optimizer", "stepsize",
                         "auto, schedule, rmsprop, adagrad or polynomial; auto is schedule for sgf, rmsprop for sng "
                         "and polynomial for static",
                         [](C& c) -> std::string& { return c.stepsize; },
                         [](const std::string& v) {
                             return one_of(v, {"auto", "schedule", "rmsprop", "adagrad", "polynomial"});
                         }));
        t.push_back(number("optimizer", "eta", "rmsprop/adagrad base rate or polynomial scale",
                           [](C& c) -> double& { return c.eta; }));
        t.push_back(number("optimizer", "decay", "rmsprop averaging weight", [](C& c) -> double& { return c.decay; }));
        t.push_back(number("optimizer", "epsilon", "stepsize denominator offset", [](C& c) -> double& { return c.epsilon; }));
        t.push_back(number("optimizer", "l0", "Lipschitz constant in the smoothing schedule",
                           [](C& c) -> double& { return c.l0; }));
        t.push_back(number("optimizer", "smoothing_beta", "exponent of the smoothing schedule",
                           [](C& c) -> double& { return c.smoothing_beta; }));
        t.push_back(number("optimizer", "h", "sng finite-difference step", [](C& c) -> double& { return c.h; }));
        t.push_back(text("optimizer", "projection", "auto, on or off; auto projects for sng only",
                         [](C& c) -> std::string& { return c.projection; },
                         [](const std::string& v) { return one_of(v, {"auto", "on", "off"}); }));
        t.push_back(number("optimizer", "lower", "projection box lower bound", [](C& c) -> double& { return c.lower; }));
        t.push_back(number("optimizer", "upper", "projection box upper bound", [](C& c) -> double& { return c.upper; }));
        t.push_back(count("optimizer", "static_paths", "training paths for static CFA",
                          [](C& c) -> std::size_t& { return c.static_paths; }));

        t.push_back(count("evaluation", "test_paths", "held-out paths", [](C& c) -> std::size_t& { return c.test_paths; }));
        t.push_back(count("evaluation", "train_seed", "first training path seed",
                          [](C& c) -> std::uint64_t& { return c.train_seed; }));
        t.push_back(count("evaluation", "test_seed", "first test path seed",
                          [](C& c) -> std::uint64_t& { return c.test_seed; }));

        t.push_back({"grid", "axes", "one or two coordinate:lower:upper:count items",
                     [](C& c, const std::string& v) { c.axes = parse_axes(v); },
                     [](const C& c) { return format_axes(c.axes); }});
        t.push_back(count("grid", "paths", "paths per grid point, drawn from the test seeds",
                          [](C& c) -> std::size_t& { return c.grid_paths; }));

        t.push_back(count("run", "seed", "random starts, directions and single-path commands",
                          [](C& c) -> std::uint64_t& { return c.seed; }));
        t.push_back(count("run", "threads", "worker threads", [](C& c) -> std::size_t& { return c.sim.threads; }));
        return t;
    }();
    return table;
}

}  // namespace

ConfigError::ConfigError(std::size_t l, const std::string& message)
    : std::runtime_error(l ? "line " + std::to_string(l) + ": " + message : message), line(l) {}

ExperimentConfig::ExperimentConfig() { sim.forecast.sigma_energy = std::sqrt(energy_variance); }

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::uint64_t ExperimentConfig::training_span() const {
    if (method == "sgf") return iterations * batch_size;
    if (method == "sng") return iterations;
    if (method == "static") return static_paths;
    return 0;
}

void ExperimentConfig::validate() const {
    try {
        sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, e.what());
    }
    if (!cdf_file.empty() && !std::filesystem::exists(cdf_file))
        throw ConfigError(0, "forecast.cdf_file '" + cdf_file + "' does not exist");
    if (method != "none" && iterations == 0) throw ConfigError(0, "optimizer.iterations must be positive");
    if (batch_size == 0) throw ConfigError(0, "optimizer.batch_size must be positive");
    if (test_paths == 0) throw ConfigError(0, "evaluation.test_paths must be positive");
    if (theta0.empty() && starts == 0) throw ConfigError(0, "policy.starts must be positive");
    if (start_lower > start_upper) throw ConfigError(0, "policy.start_lower exceeds policy.start_upper");
    if (lower > upper) throw ConfigError(0, "optimizer.lower exceeds optimizer.upper");
    if (!(h > 0.0)) throw ConfigError(0, "optimizer.h must be positive");
    if (method == "static" && family != "affine") throw ConfigError(0, "static CFA needs policy.family = affine");
    if (method == "static" && static_paths == 0) throw ConfigError(0, "optimizer.static_paths must be positive");
    try {
        opt::validate(stepsize_rule());
        opt::SmoothingSchedule{l0, 1, smoothing_beta}.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, e.what());
    }

    const std::uint64_t starts_used = theta0.empty() ? starts : 1;
    const std::uint64_t train_end = train_seed + starts_used * training_span();
    const std::uint64_t test_end = test_seed + std::max<std::uint64_t>(test_paths, grid_paths);
    if (train_seed < test_end && test_seed < train_end)
        throw ConfigError(0, "training seeds [" + std::to_string(train_seed) + ", " + std::to_string(train_end) +
                                 ") overlap test seeds [" + std::to_string(test_seed) + ", " +
                                 std::to_string(test_end) + ")");
}

opt::StepsizeRule ExperimentConfig::stepsize_rule() const {
    std::string rule = stepsize;
    if (rule == "auto") rule = method == "sng" ? "rmsprop" : method == "static" ? "polynomial" : "schedule";
    if (rule == "rmsprop") return opt::RMSProp{eta, decay, epsilon};
    if (rule == "adagrad") return opt::AdaGrad{eta, epsilon};
    if (rule == "polynomial") return opt::Polynomial{eta};
    // schedule: α_k = 1/√k
    return opt::Polynomial{1.0};
}

std::optional<opt::Box> ExperimentConfig::box() const {
    const bool on = projection == "on" || (projection == "auto" && method == "sng");
    if (!on) return std::nullopt;
    return opt::Box::uniform(1, lower, upper);
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig config) {
    std::map<std::string, const Entry*> index;
    for (const auto& e : entries()) index[e.section + "." + e.key] = &e;

    std::string line, section;
    std::map<std::string, std::size_t> seen;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        const auto comment = line.find_first_of("#;");
        const std::string body = trim(comment == std::string::npos ? line : line.substr(0, comment));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']' || body.size() < 3) throw ConfigError(number, "malformed section header");
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(number, "expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string name = section.empty() ? key : section + "." + key;
        const auto it = index.find(name);
        if (it == index.end()) throw ConfigError(number, "unknown key '" + name + "'");
        if (const auto prev = seen.find(name); prev != seen.end())
            throw ConfigError(number, "'" + name + "' already set on line " + std::to_string(prev->second));
        seen[name] = number;
        try {
            it->second->set(config, trim(body.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(number, name + ": " + e.what());
        } catch (const std::out_of_range& e) {
            throw ConfigError(number, name + ": " + e.what());
        }
    }
    if (!config.cdf_file.empty() && std::filesystem::exists(config.cdf_file)) {
        try {
            config.sim.forecast.cdfs = forecast::load_cdf_buckets(config.cdf_file);
        } catch (const std::exception& e) {
            throw ConfigError(seen["forecast.cdf_file"], "forecast.cdf_file: " + std::string(e.what()));
        }
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& config, const std::string& prefix) {
    for (const auto& e : entries()) out << prefix << e.section << '.' << e.key << " = " << e.get(config) << '\n';
}

void write_reference(std::ostream& out) {
    const ExperimentConfig defaults;
    std::string section;
    for (const auto& e : entries()) {
        if (e.section != section) {
            out << (section.empty() ? "" : "\n") << '[' << e.section << "]\n";
            section = e.section;
        }
        out << "# " << e.doc << '\n' << e.key << " = " << e.get(defaults) << '\n';
    }
}

}  // namespace cfa::cli
