#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cfa/lp.hpp"
#include "cfa/storage.hpp"

namespace cfa::policy {

// θ = 1 everywhere: the unmodified deterministic lookahead (benchmark).
struct Identity {};

// x^wr + x^wd ≤ θ·f^E_{t,t'} for every future stage.
struct ConstantForecast {
    double theta{1.0};
};

// x^wr + x^wd ≤ θ_τ·f^E_{t,t+τ}, τ = 1..H (theta[τ-1]).
struct LookupTable {
    std::vector<double> theta;
};

// θ₁ᴸ e^{τθ₂ᴸ} ≤ R_{t,t+τ} ≤ θ₁ᵁ e^{τθ₂ᵁ}
struct ExponentialStorageBounds {
    double lower_scale{0.0};
    double lower_rate{0.0};
    double upper_scale{100.0};
    double upper_rate{0.0};
};

// θᴸ_τ ≤ R_{t,t+τ} ≤ θᵁ_τ, τ = 1..H.
struct StorageBoundsTable {
    std::vector<double> lower;
    std::vector<double> upper;
};

// x^wr + x^wd ≤ θ₀ + θ₁·f^E. Identity at (0, 1).
struct AffineRhs {
    double intercept{0.0};
    double slope{1.0};
};

using Parameterization =
    std::variant<Identity, ConstantForecast, LookupTable, ExponentialStorageBounds, StorageBoundsTable, AffineRhs>;

std::string family_name(const Parameterization& theta);
// Flattened tunable coordinates (empty for Identity).
std::vector<double> parameters(const Parameterization& theta);
// Same family as shape, coordinates replaced. Throws std::invalid_argument on a size mismatch.
Parameterization with_parameters(const Parameterization& shape, std::span<const double> values);
// Family defaults that reproduce the benchmark (θ = 1, affine (0,1), bounds [0, R^max]).
Parameterization neutral(const std::string& family, std::size_t lookahead, const storage::ModelParams& model);
// Throws std::invalid_argument when table lengths differ from H or storage bounds
// violate 0 ≤ lower ≤ upper ≤ R^max.
void validate(const Parameterization& theta, std::size_t lookahead, const storage::ModelParams& model);
// True when the family only modifies wind-availability rows.
bool modifies_forecast_only(const Parameterization& theta);

// Right-hand side of the wind row at lead τ ≥ 1 for forecast level f.
double wind_rhs(const Parameterization& theta, std::size_t lead, double forecast);

// Column and row indices of the lookahead LP with K = T̄ - t future stages.
struct LookaheadLayout {
    enum Var : std::size_t { kWindDemand, kGridDemand, kStorageDemand, kWindStorage, kGridStorage, kStorageGrid };
    enum Row : std::size_t { kDemandRow, kWindRow, kWithdrawRow, kCapacityRow, kChargeRow, kDischargeRow };
    static constexpr std::size_t kVarsPerStage = 6;
    static constexpr std::size_t kRowsPerStage = 6;

    std::size_t future_stages{0};  // K
    bool storage_bounds{false};

    std::size_t stages() const { return future_stages + 1; }
    std::size_t var(std::size_t stage, Var v) const { return stage * kVarsPerStage + v; }
    // R_{t,t+τ}, τ = 1..K
    std::size_t storage_var(std::size_t lead) const { return stages() * kVarsPerStage + lead - 1; }
    // violation columns of the soft storage bounds (lower then upper), τ = 1..K
    std::size_t lower_slack_var(std::size_t lead) const { return storage_var(future_stages) + lead; }
    std::size_t upper_slack_var(std::size_t lead) const { return lower_slack_var(future_stages) + lead; }
    std::size_t num_vars() const {
        return stages() * kVarsPerStage + future_stages * (storage_bounds ? 3 : 1);
    }

    std::size_t row(std::size_t stage, Row r) const { return stage * kRowsPerStage + r; }
    // R_{τ+1} = R_τ − x^rd_τ + β^c x^wr_τ + β^c x^gr_τ − x^rg_τ, τ = 0..K-1
    std::size_t linking_row(std::size_t stage) const { return stages() * kRowsPerStage + stage; }
    std::size_t lower_bound_row(std::size_t lead) const { return stages() * kRowsPerStage + future_stages + 2 * (lead - 1); }
    std::size_t upper_bound_row(std::size_t lead) const { return lower_bound_row(lead) + 1; }
    std::size_t num_rows() const { return stages() * kRowsPerStage + future_stages * (storage_bounds ? 3 : 1); }
};

LookaheadLayout layout_for(const storage::StorageState& s, const Parameterization& theta);

// Penalty per unit of violated soft storage bound, as a multiple of C^P.
inline constexpr double kStorageBoundPenaltyFactor = 10.0;

// Deterministic lookahead over stages t..min(t+H, T): stage t uses realized
// values, later stages the (parameterized) forecasts held at t.
lp::LinearProgram build_lookahead_lp(const storage::StorageState& s, const Parameterization& theta,
                                     const storage::ModelParams& model);

struct LookaheadPlan {
    std::vector<storage::Decision> decisions;  // x̃_{t,t'}, t' = t..T̄
    std::vector<double> storage;               // planned R_{t,t'}, t' = t..T̄ (first entry is R_t)
    double objective{0.0};                     // planned cost including the constant C^P·D terms
};

struct PolicyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolicyDecision {
    storage::Decision decision;
    LookaheadPlan plan;
};

// X^π_t(S_t | θ): first-stage block of the lookahead optimum. Throws PolicyError
// if the LP is not solved to optimality.
PolicyDecision decide(const storage::StorageState& s, const Parameterization& theta,
                      const storage::ModelParams& model);

// t_prime, six planned decision columns, planned_storage
void write_plan_csv(std::ostream& out, std::size_t period, const LookaheadPlan& plan);

}  // namespace cfa::policy
