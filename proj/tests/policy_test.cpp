#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "cfa/policy.hpp"

using namespace cfa;
using policy::LookaheadLayout;

namespace {

std::shared_ptr<const forecast::ForecastSet> generated(std::size_t T, std::size_t H, double sigma, std::uint64_t seed) {
    forecast::ForecastParams fp;
    fp.horizon_end = T;
    fp.lookahead = H;
    fp.sigma_energy = sigma;
    return std::make_shared<const forecast::ForecastSet>(forecast::ForecastGenerator(fp).sample(seed));
}

std::shared_ptr<const forecast::ForecastSet> single_period(double energy, double demand, double price, double market) {
    auto set = std::make_shared<forecast::ForecastSet>();
    set->energy = forecast::Surface(0, 0);
    set->demand = forecast::Surface(0, 0);
    set->price = forecast::Surface(0, 0);
    set->energy(0, 0) = energy;
    set->demand(0, 0) = demand;
    set->price(0, 0) = price;
    set->market_price = market;
    return set;
}

}  // namespace

TEST_CASE("lookahead LP shape") {
    const storage::ModelParams p;
    const storage::StorageState s{0, 10.0, generated(10, 2, 5.0, 1)};
    const auto lp = policy::build_lookahead_lp(s, policy::Identity{}, p);
    CHECK(lp.num_vars() == 20);
    CHECK(lp.num_rows() == 3 * 6 + 2);

    const auto bounded = policy::build_lookahead_lp(s, policy::neutral("bounds_table", 2, p), p);
    CHECK(bounded.num_vars() == 20 + 4);
    CHECK(bounded.num_rows() == 20 + 4);

    // window shrinks near the horizon end
    const storage::StorageState late{9, 10.0, s.forecasts};
    CHECK(policy::build_lookahead_lp(late, policy::Identity{}, p).num_vars() == 2 * 6 + 1);
}

TEST_CASE("wind rows follow the parameterization") {
    const storage::ModelParams p;
    const auto path = generated(10, 3, 5.0, 2);
    const storage::StorageState s{2, 10.0, path};
    const LookaheadLayout layout{3, false};
    auto wind_rhs = [&](const policy::Parameterization& theta, std::size_t k) {
        return policy::build_lookahead_lp(s, theta, p).rhs[static_cast<Eigen::Index>(layout.row(k, LookaheadLayout::kWindRow))];
    };
    for (std::size_t k = 0; k <= 3; ++k) CHECK(wind_rhs(policy::Identity{}, k) == path->energy(2, 2 + k));
    const policy::LookupTable zeros{std::vector<double>(3, 0.0)};
    CHECK(wind_rhs(zeros, 0) == path->energy.realized(2));
    for (std::size_t k = 1; k <= 3; ++k) CHECK(wind_rhs(zeros, k) == 0.0);
    CHECK(wind_rhs(policy::ConstantForecast{0.5}, 2) == doctest::Approx(0.5 * path->energy(2, 4)));
    CHECK(wind_rhs(policy::AffineRhs{-1e6, 1.0}, 1) == 0.0);
}

TEST_CASE("single-period decisions") {
    storage::ModelParams p;
    p.shortage_penalty = 1000.0;
    const storage::StorageState s{0, 0.0, single_period(15.0, 10.0, 20.0, 30.0)};
    const auto d = policy::decide(s, policy::Identity{}, p);
    CHECK(d.decision.wind_to_demand == doctest::Approx(10.0));
    CHECK(d.decision.grid_to_demand == doctest::Approx(0.0));

    const storage::StorageState empty{0, 0.0, single_period(0.0, 0.0, 20.0, 30.0)};
    const auto z = policy::decide(empty, policy::Identity{}, p).decision;
    for (const double v : z.as_array()) CHECK(v == 0.0);
}

TEST_CASE("identity parameterizations agree bit-exactly") {
    const storage::ModelParams p;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto path = generated(24, 6, std::sqrt(40.0), seed);
        for (const std::size_t t : {0, 7, 20}) {
            const storage::StorageState s{t, 12.0 * static_cast<double>(seed), path};
            const auto a = policy::decide(s, policy::Identity{}, p);
            const auto b = policy::decide(s, policy::ConstantForecast{1.0}, p);
            const auto c = policy::decide(s, policy::LookupTable{std::vector<double>(6, 1.0)}, p);
            const auto e = policy::decide(s, policy::AffineRhs{0.0, 1.0}, p);
            CHECK(a.decision == b.decision);
            CHECK(a.decision == c.decision);
            CHECK(a.decision == e.decision);
            CHECK(a.plan.objective == c.plan.objective);
        }
    }
}

TEST_CASE("first-period decision is feasible for the true constraints") {
    const storage::ModelParams p;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto path = generated(24, 8, std::sqrt(40.0), seed);
        const storage::StorageState s{static_cast<std::size_t>(u(rng) * 24), u(rng) * p.capacity, path};
        const policy::LookupTable theta{[&] {
            std::vector<double> v(8);
            for (auto& x : v) x = 3.0 * u(rng);
            return v;
        }()};
        const auto d = policy::decide(s, theta, p);
        CHECK(storage::check_feasible(d.decision, s, p, 1e-6).feasible);
        const auto bounded = policy::decide(s, policy::ExponentialStorageBounds{20.0, 0.05, 60.0, -0.02}, p);
        CHECK(storage::check_feasible(bounded.decision, s, p, 1e-6).feasible);
    }
}

TEST_CASE("relaxing a lookup entry never cuts planned wind at that stage") {
    const storage::ModelParams p;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto path = generated(24, 6, std::sqrt(40.0), seed);
        const storage::StorageState s{3, 30.0, path};
        for (std::size_t lead = 1; lead <= 6; ++lead) {
            std::vector<double> theta(6, 1.0);
            theta[lead - 1] = 0.6;
            const auto lo = policy::decide(s, policy::LookupTable{theta}, p).plan;
            theta[lead - 1] = 1.4;
            const auto hi = policy::decide(s, policy::LookupTable{theta}, p).plan;
            const auto wind = [&](const policy::LookaheadPlan& plan) {
                return plan.decisions[lead].wind_to_demand + plan.decisions[lead].wind_to_storage;
            };
            CHECK(wind(hi) >= wind(lo) - 1e-7);
        }
    }
}

TEST_CASE("perfect forecasts: re-solving follows the t = 0 plan") {
    storage::ModelParams p;
    forecast::ForecastParams fp;
    fp.horizon_end = 12;
    fp.lookahead = 12;
    fp.sigma_energy = 0.0;
    fp.sigma_demand = 0.0;
    fp.price.intercept_std = 0.0;
    const auto path = std::make_shared<const forecast::ForecastSet>(forecast::ForecastGenerator(fp).sample(4));
    storage::StorageState s{0, p.initial_storage, path};
    const auto first = policy::decide(s, policy::Identity{}, p).plan;
    double realized = 0.0;
    for (std::size_t t = 0; t <= 12; ++t) {
        const auto d = policy::decide(s, policy::Identity{}, p);
        // the plan made at t is optimal for the rest of the t = 0 plan's horizon
        realized += storage::contribution(s, d.decision, p);
        if (t < 12) s = storage::transition(s, d.decision, storage::reveal(path, t + 1), p);
    }
    CHECK(realized == doctest::Approx(first.objective).epsilon(1e-9));
}

TEST_CASE("storage bound rows hold the plan inside the band") {
    const storage::ModelParams p;
    const auto path = generated(24, 6, std::sqrt(40.0), 3);
    const storage::StorageState s{0, 40.0, path};
    const policy::StorageBoundsTable band{std::vector<double>(6, 30.0), std::vector<double>(6, 45.0)};
    const auto plan = policy::decide(s, band, p).plan;
    for (std::size_t k = 1; k <= 6; ++k) {
        CHECK(plan.storage[k] >= 30.0 - 1e-7);
        CHECK(plan.storage[k] <= 45.0 + 1e-7);
    }
}

TEST_CASE("parameter plumbing") {
    const storage::ModelParams p;
    const std::vector<double> v{0.5, 1.5, 2.5};
    const auto theta = policy::with_parameters(policy::LookupTable{std::vector<double>(3, 1.0)}, v);
    CHECK(policy::parameters(theta) == v);
    CHECK(policy::family_name(theta) == "lookup");
    CHECK_THROWS_AS(policy::with_parameters(policy::ConstantForecast{}, v), std::invalid_argument);
    CHECK(policy::parameters(policy::Identity{}).empty());

    CHECK_THROWS_AS(policy::validate(policy::LookupTable{{1.0, 1.0}}, 3, p), std::invalid_argument);
    CHECK_THROWS_AS(policy::validate(policy::StorageBoundsTable{{10, 10}, {5, 20}}, 2, p), std::invalid_argument);
    CHECK_THROWS_AS(policy::validate(policy::ExponentialStorageBounds{0, 0, 200, 0}, 2, p), std::invalid_argument);
    CHECK_NOTHROW(policy::validate(policy::neutral("exp_bounds", 4, p), 4, p));
    CHECK_THROWS_AS(policy::neutral("nope", 4, p), std::invalid_argument);
    CHECK(policy::modifies_forecast_only(policy::AffineRhs{}));
    CHECK_FALSE(policy::modifies_forecast_only(policy::StorageBoundsTable{}));
}

TEST_CASE("plan csv") {
    const storage::ModelParams p;
    const storage::StorageState s{0, 10.0, generated(6, 2, 0.0, 1)};
    const auto d = policy::decide(s, policy::Identity{}, p);
    std::ostringstream out;
    policy::write_plan_csv(out, 0, d.plan);
    const auto text = out.str();
    CHECK(text.rfind("t_prime,x_wd,x_gd,x_rd,x_wr,x_gr,x_rg,planned_storage\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
