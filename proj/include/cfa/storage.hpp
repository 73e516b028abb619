#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cfa/forecast.hpp"

namespace cfa::storage {

struct ModelParams {
    double capacity{100.0};          // R^max
    double max_charge{10.0};         // γ^c
    double max_discharge{10.0};      // γ^d
    double charge_efficiency{0.9};   // β^c
    double discharge_efficiency{0.9};  // β^d
    double shortage_penalty{50.0};   // C^P
    double initial_storage{0.0};     // R_0

    void validate() const;
};

// x_t = (x^wd, x^gd, x^rd, x^wr, x^gr, x^rg)
struct Decision {
    double wind_to_demand{0.0};
    double grid_to_demand{0.0};
    double storage_to_demand{0.0};
    double wind_to_storage{0.0};
    double grid_to_storage{0.0};
    double storage_to_grid{0.0};

    static constexpr std::size_t kSize = 6;
    std::array<double, kSize> as_array() const;
    static Decision from_array(const std::array<double, kSize>& values);
    friend bool operator==(const Decision&, const Decision&) = default;
};

Decision operator+(const Decision& a, const Decision& b);
Decision operator*(double s, const Decision& d);

// S_t: storage level plus the path's forecast surfaces viewed at period t.
// Realized values are the diagonals of the surfaces.
struct StorageState {
    std::size_t period{0};
    double storage{0.0};
    std::shared_ptr<const forecast::ForecastSet> forecasts;

    double energy() const { return forecasts->energy.realized(period); }
    double demand() const { return forecasts->demand.realized(period); }
    double grid_price() const { return forecasts->price.realized(period); }
    double market_price() const { return forecasts->market_price; }
    std::size_t horizon_end() const { return forecasts->horizon_end(); }
};

// W_{t+1}: next-period realizations. The forecast surfaces of the path already
// contain every rolled forecast, so the update noise is carried by reference.
struct ExogenousInfo {
    std::size_t period{0};
    double energy{0.0};
    double demand{0.0};
    double grid_price{0.0};
    std::shared_ptr<const forecast::ForecastSet> forecasts;
};

ExogenousInfo reveal(const std::shared_ptr<const forecast::ForecastSet>& path, std::size_t period);

enum class Violation {
    kNegativeComponent,
    kDemand,
    kWindAvailability,
    kStorageWithdrawal,
    kStorageCapacity,
    kChargeRate,
    kDischargeRate,
};

std::string to_string(Violation v);

struct FeasibilityReport {
    bool feasible{true};
    std::vector<Violation> violations;
};

FeasibilityReport check_feasible(const Decision& x, const StorageState& s, const ModelParams& p,
                                 double tolerance = 1e-7);

// R_{t+1} = R_t − x^rd + β^c x^wr + β^c x^gr − x^rg. Throws std::invalid_argument
// for an infeasible decision.
StorageState transition(const StorageState& s, const Decision& x, const ExogenousInfo& w, const ModelParams& p);

// C^P(D − x^wd − β^d x^rd − x^gd) − P^m(x^wd + β^d x^rd + x^gd) − P^g(β^d x^rg − x^gr − x^gd).
// A cost (to be minimized); profit is its negation.
double contribution(const StorageState& s, const Decision& x, const ModelParams& p);
double contribution(double demand, double market_price, double grid_price, const Decision& x,
                    const ModelParams& p);

struct TrajectoryStep {
    std::size_t period{0};
    double storage{0.0};
    double demand{0.0};
    double energy{0.0};
    double grid_price{0.0};
    Decision decision;
    double cost{0.0};
};

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryStep>& steps);

}  // namespace cfa::storage
