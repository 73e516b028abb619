#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "cfa/storage.hpp"

namespace cfa::storage {

void ModelParams::validate() const {
    if (!(capacity > 0.0)) throw std::invalid_argument("storage capacity must be positive");
    if (!(max_charge > 0.0) || !(max_discharge > 0.0))
        throw std::invalid_argument("charge and discharge limits must be positive");
    if (!(charge_efficiency > 0.0 && charge_efficiency < 1.0) ||
        !(discharge_efficiency > 0.0 && discharge_efficiency < 1.0))
        throw std::invalid_argument("efficiencies must lie in (0,1)");
    if (!(shortage_penalty > 0.0)) throw std::invalid_argument("shortage penalty must be positive");
    if (initial_storage < 0.0 || initial_storage > capacity)
        throw std::invalid_argument("initial storage must lie in [0, capacity]");
}

std::array<double, Decision::kSize> Decision::as_array() const {
    return {wind_to_demand, grid_to_demand, storage_to_demand, wind_to_storage, grid_to_storage, storage_to_grid};
}

Decision Decision::from_array(const std::array<double, kSize>& v) {
    return Decision{v[0], v[1], v[2], v[3], v[4], v[5]};
}

Decision operator+(const Decision& a, const Decision& b) {
    auto x = a.as_array();
    const auto y = b.as_array();
    for (std::size_t i = 0; i < Decision::kSize; ++i) x[i] += y[i];
    return Decision::from_array(x);
}

Decision operator*(double s, const Decision& d) {
    auto x = d.as_array();
    for (auto& v : x) v *= s;
    return Decision::from_array(x);
}

ExogenousInfo reveal(const std::shared_ptr<const forecast::ForecastSet>& path, std::size_t period) {
    return ExogenousInfo{period, path->energy.realized(period), path->demand.realized(period),
                         path->price.realized(period), path};
}

std::string to_string(Violation v) {
    switch (v) {
        case Violation::kNegativeComponent: return "negative component";
        case Violation::kDemand: return "demand";
        case Violation::kWindAvailability: return "wind availability";
        case Violation::kStorageWithdrawal: return "storage withdrawal";
        case Violation::kStorageCapacity: return "storage capacity";
        case Violation::kChargeRate: return "charge rate";
        case Violation::kDischargeRate: return "discharge rate";
    }
    return "unknown";
}

FeasibilityReport check_feasible(const Decision& x, const StorageState& s, const ModelParams& p, double tolerance) {
    FeasibilityReport report;
    auto require = [&](bool ok, Violation v) {
        if (!ok) {
            report.feasible = false;
            report.violations.push_back(v);
        }
    };
    const auto values = x.as_array();
    require(std::all_of(values.begin(), values.end(), [&](double v) { return v >= -tolerance; }),
            Violation::kNegativeComponent);
    const double r = s.storage;
    require(x.wind_to_demand + p.discharge_efficiency * x.storage_to_demand + x.grid_to_demand <= s.demand() + tolerance,
            Violation::kDemand);
    require(x.wind_to_storage + x.wind_to_demand <= s.energy() + tolerance, Violation::kWindAvailability);
    require(x.storage_to_demand + x.storage_to_grid <= r + tolerance, Violation::kStorageWithdrawal);
    require(x.wind_to_storage + x.grid_to_storage - x.storage_to_demand - x.storage_to_grid <=
                p.capacity - r + tolerance,
            Violation::kStorageCapacity);
    require(x.wind_to_storage + x.grid_to_storage <= p.max_charge + tolerance, Violation::kChargeRate);
    require(x.storage_to_demand + x.storage_to_grid <= p.max_discharge + tolerance, Violation::kDischargeRate);
    return report;
}

StorageState transition(const StorageState& s, const Decision& x, const ExogenousInfo& w, const ModelParams& p) {
    const auto report = check_feasible(x, s, p);
    if (!report.feasible)
        throw std::invalid_argument("transition rejected infeasible decision (" + to_string(report.violations.front()) +
                                    ")");
    const double next = s.storage - x.storage_to_demand + p.charge_efficiency * x.wind_to_storage +
                        p.charge_efficiency * x.grid_to_storage - x.storage_to_grid;
    // only roundoff can leave [0, R^max] once the decision passed the check
    return StorageState{w.period, std::clamp(next, 0.0, p.capacity), w.forecasts};
}

double contribution(double demand, double market_price, double grid_price, const Decision& x, const ModelParams& p) {
    const double served = x.wind_to_demand + p.discharge_efficiency * x.storage_to_demand + x.grid_to_demand;
    return p.shortage_penalty * (demand - served) - market_price * served -
           grid_price * (p.discharge_efficiency * x.storage_to_grid - x.grid_to_storage - x.grid_to_demand);
}

double contribution(const StorageState& s, const Decision& x, const ModelParams& p) {
    return contribution(s.demand(), s.market_price(), s.grid_price(), x, p);
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryStep>& steps) {
    out << "t,storage,demand,energy,grid_price,x_wd,x_gd,x_rd,x_wr,x_gr,x_rg,cost\n";
    const auto old_precision = out.precision(12);
    for (const auto& s : steps) {
        out << s.period << ',' << s.storage << ',' << s.demand << ',' << s.energy << ',' << s.grid_price;
        for (const double v : s.decision.as_array()) out << ',' << v;
        out << ',' << s.cost << '\n';
    }
    out.precision(old_precision);
}

}  // namespace cfa::storage
