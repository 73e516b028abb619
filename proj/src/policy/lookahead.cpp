#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>

#include "cfa/policy.hpp"

namespace cfa::policy {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_size(std::span<const double> values, std::size_t n, const char* family) {
    if (values.size() != n)
        throw std::invalid_argument(std::string(family) + " expects " + std::to_string(n) + " parameters, got " +
                                    std::to_string(values.size()));
}

struct StorageBounds {
    double lower;
    double upper;
};

std::optional<StorageBounds> storage_bounds(const Parameterization& theta, std::size_t lead, double capacity) {
    return std::visit(
        overloaded{
            [&](const ExponentialStorageBounds& b) -> std::optional<StorageBounds> {
                const double tau = static_cast<double>(lead);
                const double lo = std::clamp(b.lower_scale * std::exp(tau * b.lower_rate), 0.0, capacity);
                const double hi = std::clamp(b.upper_scale * std::exp(tau * b.upper_rate), lo, capacity);
                return StorageBounds{lo, hi};
            },
            [&](const StorageBoundsTable& b) -> std::optional<StorageBounds> {
                const double lo = std::clamp(b.lower.at(lead - 1), 0.0, capacity);
                const double hi = std::clamp(b.upper.at(lead - 1), lo, capacity);
                return StorageBounds{lo, hi};
            },
            [](const auto&) -> std::optional<StorageBounds> { return std::nullopt; },
        },
        theta);
}

}  // namespace

std::string family_name(const Parameterization& theta) {
    return std::visit(overloaded{
                          [](const Identity&) { return std::string("identity"); },
                          [](const ConstantForecast&) { return std::string("constant"); },
                          [](const LookupTable&) { return std::string("lookup"); },
                          [](const ExponentialStorageBounds&) { return std::string("exp_bounds"); },
                          [](const StorageBoundsTable&) { return std::string("bounds_table"); },
                          [](const AffineRhs&) { return std::string("affine"); },
                      },
                      theta);
}

std::vector<double> parameters(const Parameterization& theta) {
    return std::visit(overloaded{
                          [](const Identity&) { return std::vector<double>{}; },
                          [](const ConstantForecast& c) { return std::vector<double>{c.theta}; },
                          [](const LookupTable& l) { return l.theta; },
                          [](const ExponentialStorageBounds& b) {
                              return std::vector<double>{b.lower_scale, b.lower_rate, b.upper_scale, b.upper_rate};
                          },
                          [](const StorageBoundsTable& b) {
                              std::vector<double> v = b.lower;
                              v.insert(v.end(), b.upper.begin(), b.upper.end());
                              return v;
                          },
                          [](const AffineRhs& a) { return std::vector<double>{a.intercept, a.slope}; },
                      },
                      theta);
}

Parameterization with_parameters(const Parameterization& shape, std::span<const double> v) {
    return std::visit(overloaded{
                          [&](const Identity&) -> Parameterization {
                              require_size(v, 0, "identity");
                              return Identity{};
                          },
                          [&](const ConstantForecast&) -> Parameterization {
                              require_size(v, 1, "constant");
                              return ConstantForecast{v[0]};
                          },
                          [&](const LookupTable& l) -> Parameterization {
                              require_size(v, l.theta.size(), "lookup");
                              return LookupTable{{v.begin(), v.end()}};
                          },
                          [&](const ExponentialStorageBounds&) -> Parameterization {
                              require_size(v, 4, "exp_bounds");
                              return ExponentialStorageBounds{v[0], v[1], v[2], v[3]};
                          },
                          [&](const StorageBoundsTable& b) -> Parameterization {
                              require_size(v, b.lower.size() + b.upper.size(), "bounds_table");
                              const auto half = static_cast<std::ptrdiff_t>(b.lower.size());
                              return StorageBoundsTable{{v.begin(), v.begin() + half}, {v.begin() + half, v.end()}};
                          },
                          [&](const AffineRhs&) -> Parameterization {
                              require_size(v, 2, "affine");
                              return AffineRhs{v[0], v[1]};
                          },
                      },
                      shape);
}

Parameterization neutral(const std::string& family, std::size_t lookahead, const storage::ModelParams& model) {
    if (family == "identity") return Identity{};
    if (family == "constant") return ConstantForecast{1.0};
    if (family == "lookup") return LookupTable{std::vector<double>(lookahead, 1.0)};
    if (family == "exp_bounds") return ExponentialStorageBounds{0.0, 0.0, model.capacity, 0.0};
    if (family == "bounds_table")
        return StorageBoundsTable{std::vector<double>(lookahead, 0.0), std::vector<double>(lookahead, model.capacity)};
    if (family == "affine") return AffineRhs{0.0, 1.0};
    throw std::invalid_argument("unknown parameterization family: " + family);
}

void validate(const Parameterization& theta, std::size_t lookahead, const storage::ModelParams& model) {
    const auto values = parameters(theta);
    if (!std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); }))
        throw std::invalid_argument("parameterization has non-finite entries");
    std::visit(overloaded{
                   [&](const LookupTable& l) {
                       if (l.theta.size() != lookahead)
                           throw std::invalid_argument("lookup table length must equal the lookahead H");
                   },
                   [&](const StorageBoundsTable& b) {
                       if (b.lower.size() != lookahead || b.upper.size() != lookahead)
                           throw std::invalid_argument("storage bound tables must have length H");
                       for (std::size_t i = 0; i < lookahead; ++i)
                           if (!(0.0 <= b.lower[i] && b.lower[i] <= b.upper[i] && b.upper[i] <= model.capacity))
                               throw std::invalid_argument("storage bounds must satisfy 0 <= lower <= upper <= R^max");
                   },
                   [&](const ExponentialStorageBounds& b) {
                       for (std::size_t tau = 1; tau <= lookahead; ++tau) {
                           const double lo = b.lower_scale * std::exp(static_cast<double>(tau) * b.lower_rate);
                           const double hi = b.upper_scale * std::exp(static_cast<double>(tau) * b.upper_rate);
                           if (!(0.0 <= lo && lo <= hi && hi <= model.capacity))
                               throw std::invalid_argument("storage bounds must satisfy 0 <= lower <= upper <= R^max");
                       }
                   },
                   [](const auto&) {},
               },
               theta);
}

bool modifies_forecast_only(const Parameterization& theta) {
    return !std::holds_alternative<ExponentialStorageBounds>(theta) && !std::holds_alternative<StorageBoundsTable>(theta);
}

double wind_rhs(const Parameterization& theta, std::size_t lead, double forecast) {
    return std::visit(overloaded{
                          [&](const ConstantForecast& c) { return std::max(0.0, c.theta * forecast); },
                          [&](const LookupTable& l) { return std::max(0.0, l.theta.at(lead - 1) * forecast); },
                          [&](const AffineRhs& a) { return std::max(0.0, a.intercept + a.slope * forecast); },
                          [&](const auto&) { return forecast; },
                      },
                      theta);
}

LookaheadLayout layout_for(const storage::StorageState& s, const Parameterization& theta) {
    const auto& energy = s.forecasts->energy;
    return LookaheadLayout{energy.window_end(s.period) - s.period, !modifies_forecast_only(theta)};
}

lp::LinearProgram build_lookahead_lp(const storage::StorageState& s, const Parameterization& theta,
                                     const storage::ModelParams& model) {
    if (!s.forecasts) throw std::invalid_argument("state carries no forecasts");
    const auto& f = *s.forecasts;
    if (s.period > f.horizon_end()) throw std::invalid_argument("state period beyond the forecast horizon");
    if (f.demand.lookahead() != f.energy.lookahead() || f.price.lookahead() != f.energy.lookahead())
        throw std::invalid_argument("forecast surfaces disagree on the lookahead");

    using L = LookaheadLayout;
    const L layout = layout_for(s, theta);
    lp::LinearProgram lp(layout.num_vars(), layout.num_rows());
    lp.senses.assign(layout.num_rows(), lp::RowSense::kLessEqual);
    auto& A = lp.constraints;
    auto& b = lp.rhs;
    auto& c = lp.objective;
    auto at = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

    const double beta_c = model.charge_efficiency;
    const double beta_d = model.discharge_efficiency;
    const double pm = f.market_price;
    const double serve_value = model.shortage_penalty + pm;

    for (std::size_t k = 0; k < layout.stages(); ++k) {
        const std::size_t tp = s.period + k;
        const double demand = f.demand(s.period, tp);
        const double energy = k == 0 ? f.energy(s.period, tp) : wind_rhs(theta, k, f.energy(s.period, tp));
        const double pg = f.price(s.period, tp);

        const auto wd = at(layout.var(k, L::kWindDemand));
        const auto gd = at(layout.var(k, L::kGridDemand));
        const auto rd = at(layout.var(k, L::kStorageDemand));
        const auto wr = at(layout.var(k, L::kWindStorage));
        const auto gr = at(layout.var(k, L::kGridStorage));
        const auto rg = at(layout.var(k, L::kStorageGrid));

        c[wd] = -serve_value;
        c[gd] = -serve_value + pg;
        c[rd] = -beta_d * serve_value;
        c[wr] = 0.0;
        c[gr] = pg;
        c[rg] = -beta_d * pg;

        const auto demand_row = at(layout.row(k, L::kDemandRow));
        A(demand_row, wd) = 1.0;
        A(demand_row, rd) = beta_d;
        A(demand_row, gd) = 1.0;
        b[demand_row] = demand;

        const auto wind_row = at(layout.row(k, L::kWindRow));
        A(wind_row, wr) = 1.0;
        A(wind_row, wd) = 1.0;
        b[wind_row] = energy;

        const auto withdraw_row = at(layout.row(k, L::kWithdrawRow));
        const auto capacity_row = at(layout.row(k, L::kCapacityRow));
        A(withdraw_row, rd) = 1.0;
        A(withdraw_row, rg) = 1.0;
        A(capacity_row, wr) = 1.0;
        A(capacity_row, gr) = 1.0;
        A(capacity_row, rd) = -1.0;
        A(capacity_row, rg) = -1.0;
        if (k == 0) {
            b[withdraw_row] = s.storage;
            b[capacity_row] = model.capacity - s.storage;
        } else {
            const auto r = at(layout.storage_var(k));
            A(withdraw_row, r) = -1.0;
            A(capacity_row, r) = 1.0;
            b[withdraw_row] = 0.0;
            b[capacity_row] = model.capacity;
        }

        const auto charge_row = at(layout.row(k, L::kChargeRow));
        A(charge_row, wr) = 1.0;
        A(charge_row, gr) = 1.0;
        b[charge_row] = model.max_charge;
        const auto discharge_row = at(layout.row(k, L::kDischargeRow));
        A(discharge_row, rd) = 1.0;
        A(discharge_row, rg) = 1.0;
        b[discharge_row] = model.max_discharge;

        if (k < layout.future_stages) {
            const auto link = at(layout.linking_row(k));
            lp.senses[static_cast<std::size_t>(link)] = lp::RowSense::kEqual;
            A(link, at(layout.storage_var(k + 1))) = 1.0;
            A(link, rd) = 1.0;
            A(link, wr) = -beta_c;
            A(link, gr) = -beta_c;
            A(link, rg) = 1.0;
            if (k == 0) {
                b[link] = s.storage;
            } else {
                A(link, at(layout.storage_var(k))) = -1.0;
                b[link] = 0.0;
            }
        }
    }

    if (layout.storage_bounds) {
        const double penalty = kStorageBoundPenaltyFactor * model.shortage_penalty;
        for (std::size_t lead = 1; lead <= layout.future_stages; ++lead) {
            const auto bounds = *storage_bounds(theta, lead, model.capacity);
            const auto r = at(layout.storage_var(lead));
            const auto lo_row = at(layout.lower_bound_row(lead));
            const auto hi_row = at(layout.upper_bound_row(lead));
            const auto lo_slack = at(layout.lower_slack_var(lead));
            const auto hi_slack = at(layout.upper_slack_var(lead));
            A(lo_row, r) = -1.0;
            A(lo_row, lo_slack) = -1.0;
            b[lo_row] = -bounds.lower;
            A(hi_row, r) = 1.0;
            A(hi_row, hi_slack) = -1.0;
            b[hi_row] = bounds.upper;
            c[lo_slack] = penalty;
            c[hi_slack] = penalty;
        }
    }
    return lp;
}

PolicyDecision decide(const storage::StorageState& s, const Parameterization& theta,
                      const storage::ModelParams& model) {
    using L = LookaheadLayout;
    const auto lp = build_lookahead_lp(s, theta, model);
    const auto solution = lp::solve(lp);
    if (!solution.optimal())
        throw PolicyError("lookahead LP at t=" + std::to_string(s.period) + " not solved: " +
                          lp::to_string(solution.status));
    const L layout = layout_for(s, theta);
    const auto& f = *s.forecasts;

    PolicyDecision out;
    auto& plan = out.plan;
    double constant = 0.0;
    for (std::size_t k = 0; k < layout.stages(); ++k) {
        std::array<double, storage::Decision::kSize> x{};
        for (std::size_t v = 0; v < L::kVarsPerStage; ++v)
            x[v] = std::max(0.0, solution.point[static_cast<Eigen::Index>(layout.var(k, static_cast<L::Var>(v)))]);
        plan.decisions.push_back(storage::Decision::from_array(x));
        plan.storage.push_back(k == 0 ? s.storage
                                      : solution.point[static_cast<Eigen::Index>(layout.storage_var(k))]);
        constant += model.shortage_penalty * f.demand(s.period, s.period + k);
    }
    plan.objective = solution.objective_value + constant;
    out.decision = plan.decisions.front();
    return out;
}

void write_plan_csv(std::ostream& out, std::size_t period, const LookaheadPlan& plan) {
    out << "t_prime,x_wd,x_gd,x_rd,x_wr,x_gr,x_rg,planned_storage\n";
    const auto old_precision = out.precision(12);
    for (std::size_t k = 0; k < plan.decisions.size(); ++k) {
        out << period + k;
        for (const double v : plan.decisions[k].as_array()) out << ',' << v;
        out << ',' << plan.storage[k] << '\n';
    }
    out.precision(old_precision);
}

}  // namespace cfa::policy
