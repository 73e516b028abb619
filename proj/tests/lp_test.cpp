#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cfa/lp.hpp"

using cfa::lp::LinearProgram;
using cfa::lp::LpStatus;
using cfa::lp::RowSense;

namespace {

LinearProgram make_lp(std::vector<double> c, std::vector<std::vector<double>> a, std::vector<double> b) {
    LinearProgram lp(c.size(), b.size());
    for (std::size_t j = 0; j < c.size(); ++j) lp.objective[static_cast<Eigen::Index>(j)] = c[j];
    for (std::size_t i = 0; i < b.size(); ++i) {
        lp.rhs[static_cast<Eigen::Index>(i)] = b[i];
        for (std::size_t j = 0; j < c.size(); ++j)
            lp.constraints(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j];
    }
    return lp;
}

// Random instance with a bounding row sum(x) <= 10 so the region is a polytope.
LinearProgram random_bounded_lp(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_real_distribution<double> rhs(-1.0, 5.0);
    const auto n = static_cast<std::size_t>(dim(rng));
    const auto m = static_cast<std::size_t>(dim(rng) - 1);
    LinearProgram lp(n, m + 1);
    for (std::size_t j = 0; j < n; ++j) lp.objective[static_cast<Eigen::Index>(j)] = coef(rng);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            lp.constraints(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = coef(rng);
        lp.rhs[static_cast<Eigen::Index>(i)] = rhs(rng);
    }
    lp.constraints.row(static_cast<Eigen::Index>(m)).setOnes();
    lp.rhs[static_cast<Eigen::Index>(m)] = 10.0;
    return lp;
}

double optimal_value(const LinearProgram& lp) {
    const auto sol = cfa::lp::solve(lp);
    REQUIRE(sol.optimal());
    return sol.objective_value;
}

}  // namespace

TEST_CASE("solve: single variable examples") {
    SUBCASE("upper bound binds") {
        const auto sol = cfa::lp::solve(make_lp({-1.0}, {{1.0}}, {5.0}));
        REQUIRE(sol.status == LpStatus::kOptimal);
        CHECK(sol.point[0] == doctest::Approx(5.0));
        CHECK(sol.objective_value == doctest::Approx(-5.0));
    }
    SUBCASE("no constraints, nonnegativity binds") {
        LinearProgram lp(1, 0);
        lp.objective[0] = 1.0;
        const auto sol = cfa::lp::solve(lp);
        REQUIRE(sol.optimal());
        CHECK(sol.point[0] == 0.0);
        CHECK(sol.objective_value == 0.0);
    }
    SUBCASE("contradictory bounds") {
        CHECK(cfa::lp::solve(make_lp({1.0}, {{1.0}}, {-1.0})).status == LpStatus::kInfeasible);
    }
    SUBCASE("unbounded with ray") {
        const auto sol = cfa::lp::solve(make_lp({-1.0, 0.0}, {{0.0, 1.0}}, {1.0}));
        REQUIRE(sol.status == LpStatus::kUnbounded);
        CHECK(sol.ray[0] > 0.0);
    }
}

TEST_CASE("solve: equality rows and negative rhs") {
    // minimize x + 2y  s.t.  x + y = 3,  -x <= -1  (x >= 1)
    auto lp = make_lp({1.0, 2.0}, {{1.0, 1.0}, {-1.0, 0.0}}, {3.0, -1.0});
    lp.senses = {RowSense::kEqual, RowSense::kLessEqual};
    const auto sol = cfa::lp::solve(lp);
    REQUIRE(sol.optimal());
    CHECK(sol.point[0] == doctest::Approx(3.0));
    CHECK(sol.point[1] == doctest::Approx(0.0));
    const auto sens = cfa::lp::rhs_sensitivity(sol, lp);
    CHECK(sens.gradient[0] == doctest::Approx(1.0));
}

TEST_CASE("enumerate_vertices examples") {
    SUBCASE("segment endpoints") {
        const auto v = cfa::lp::enumerate_vertices(make_lp({1.0}, {{1.0}}, {5.0}));
        REQUIRE(v.size() == 2);
        std::vector<double> xs{v[0].point[0], v[1].point[0]};
        std::sort(xs.begin(), xs.end());
        CHECK(xs[0] == doctest::Approx(0.0));
        CHECK(xs[1] == doctest::Approx(5.0));
    }
    SUBCASE("unit square") {
        const auto lp = make_lp({-1.0, -1.0}, {{1.0, 0.0}, {0.0, 1.0}}, {1.0, 1.0});
        const auto v = cfa::lp::enumerate_vertices(lp);
        CHECK(v.size() == 4);
        const auto best = std::min_element(v.begin(), v.end(), [](auto& a, auto& b) { return a.objective < b.objective; });
        CHECK(best->objective == doctest::Approx(-2.0));
        CHECK(best->point[0] == doctest::Approx(1.0));
        CHECK(best->point[1] == doctest::Approx(1.0));
    }
    SUBCASE("infeasible has no vertices") {
        CHECK(cfa::lp::enumerate_vertices(make_lp({1.0}, {{1.0}}, {-1.0})).empty());
    }
    SUBCASE("size guard") {
        CHECK_THROWS_AS(cfa::lp::enumerate_vertices(LinearProgram(9, 1)), std::invalid_argument);
    }
}

TEST_CASE("rhs_sensitivity examples against re-solves") {
    SUBCASE("single binding row") {
        const auto lp = make_lp({-1.0}, {{1.0}}, {5.0});
        const auto sens = cfa::lp::rhs_sensitivity(cfa::lp::solve(lp), lp);
        auto up = lp, down = lp;
        up.rhs[0] = 5.1;
        down.rhs[0] = 4.9;
        const double fd = (optimal_value(up) - optimal_value(down)) / 0.2;
        CHECK(fd == doctest::Approx(-1.0));
        CHECK(sens.gradient[0] == doctest::Approx(fd));
    }
    SUBCASE("slack row has zero sensitivity") {
        const auto lp = make_lp({-1.0}, {{1.0}, {1.0}}, {5.0, 8.0});
        const auto sens = cfa::lp::rhs_sensitivity(cfa::lp::solve(lp), lp);
        CHECK(sens.gradient[1] == 0.0);
    }
    SUBCASE("two binding rows") {
        const auto lp = make_lp({-1.0, -1.0}, {{1.0, 0.0}, {0.0, 1.0}}, {1.0, 1.0});
        const auto sens = cfa::lp::rhs_sensitivity(cfa::lp::solve(lp), lp);
        for (Eigen::Index i = 0; i < 2; ++i) {
            auto up = lp, down = lp;
            up.rhs[i] += 0.1;
            down.rhs[i] -= 0.1;
            const double fd = (optimal_value(up) - optimal_value(down)) / 0.2;
            CHECK(fd == doctest::Approx(-1.0));
            CHECK(sens.gradient[i] == doctest::Approx(fd));
        }
    }
    SUBCASE("non-optimal solution rejected") {
        const auto lp = make_lp({1.0}, {{1.0}}, {-1.0});
        CHECK_THROWS_AS(cfa::lp::rhs_sensitivity(cfa::lp::solve(lp), lp), std::invalid_argument);
    }
}

TEST_CASE("basis_stable_along marks rhs breakpoints") {
    SUBCASE("distinct bounds") {
        const auto lp = make_lp({-1.0}, {{1.0}, {1.0}}, {1.0, 2.0});
        const auto sol = cfa::lp::solve(lp);
        CHECK(cfa::lp::basis_stable_along(sol, lp, Eigen::Vector2d(1.0, 0.0)));
        CHECK(cfa::lp::basis_stable_along(sol, lp, Eigen::Vector2d(0.0, 1.0)));
    }
    SUBCASE("duplicate bound: moving one copy is a kink, moving both is not") {
        const auto lp = make_lp({-1.0}, {{1.0}, {1.0}}, {1.0, 1.0});
        const auto sol = cfa::lp::solve(lp);
        CHECK(sol.degenerate);
        CHECK_FALSE(cfa::lp::basis_stable_along(sol, lp, Eigen::Vector2d(1.0, 0.0)));
        CHECK_FALSE(cfa::lp::basis_stable_along(sol, lp, Eigen::Vector2d(0.0, 1.0)));
        CHECK(cfa::lp::basis_stable_along(sol, lp, Eigen::Vector2d(1.0, 1.0)));
        Eigen::MatrixXd both(2, 2);
        both << 1.0, 1.0, 1.0, 0.0;
        CHECK_FALSE(cfa::lp::basis_stable_along(sol, lp, both));
    }
    SUBCASE("stable directions give the exact slope") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> normal(0.0, 1.0);
        int checked = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const auto lp = random_bounded_lp(rng);
            const auto sol = cfa::lp::solve(lp);
            if (!sol.optimal()) continue;
            Eigen::VectorXd d(lp.rhs.size());
            for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = normal(rng);
            if (!cfa::lp::basis_stable_along(sol, lp, d)) continue;
            const auto sens = cfa::lp::rhs_sensitivity(sol, lp);
            auto up = lp, down = lp;
            up.rhs += 1e-6 * d;
            down.rhs -= 1e-6 * d;
            const double fd = (optimal_value(up) - optimal_value(down)) / 2e-6;
            CHECK(sens.gradient.dot(d) == doctest::Approx(fd).epsilon(1e-5));
            ++checked;
        }
        CHECK(checked > 50);
    }
}

TEST_CASE("property: solve matches vertex enumeration on random bounded instances") {
    std::mt19937_64 rng(20240611);
    int optimal = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto lp = random_bounded_lp(rng);
        const auto sol = cfa::lp::solve(lp);
        const auto vertices = cfa::lp::enumerate_vertices(lp);
        if (vertices.empty()) {
            CHECK(sol.status == LpStatus::kInfeasible);
            continue;
        }
        REQUIRE(sol.status == LpStatus::kOptimal);
        ++optimal;
        double best = vertices.front().objective;
        for (const auto& v : vertices) best = std::min(best, v.objective);
        CHECK(std::abs(sol.objective_value - best) <= 1e-8);
        const double scale = 1.0 + lp.rhs.cwiseAbs().maxCoeff();
        CHECK(cfa::lp::feasibility_residual(lp, sol.point) <= 1e-8 * scale);
        CHECK(sol.objective_value == doctest::Approx(lp.objective.dot(sol.point)));
        // complementary slackness
        const Eigen::VectorXd slack = lp.rhs - lp.constraints * sol.point;
        for (Eigen::Index i = 0; i < slack.size(); ++i) CHECK(std::abs(slack[i] * sol.duals[i]) <= 1e-7);
    }
    CHECK(optimal > 100);
}

TEST_CASE("property: objective scaling keeps the argmin") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lambda(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto lp = random_bounded_lp(rng);
        const auto base = cfa::lp::solve(lp);
        if (!base.optimal()) continue;
        auto scaled = lp;
        const double l = lambda(rng);
        scaled.objective *= l;
        const auto sol = cfa::lp::solve(scaled);
        REQUIRE(sol.optimal());
        CHECK((sol.point - base.point).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(sol.objective_value == doctest::Approx(l * base.objective_value));
    }
}

TEST_CASE("property: rhs sensitivity matches central differences at nondegenerate optima") {
    std::mt19937_64 rng(99);
    int checked = 0;
    for (int trial = 0; trial < 300 && checked < 60; ++trial) {
        const auto lp = random_bounded_lp(rng);
        const auto sol = cfa::lp::solve(lp);
        if (!sol.optimal() || sol.degenerate) continue;
        const auto sens = cfa::lp::rhs_sensitivity(sol, lp);
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < lp.rhs.size(); ++i) {
            auto up = lp, down = lp;
            up.rhs[i] += h;
            down.rhs[i] -= h;
            const auto su = cfa::lp::solve(up), sd = cfa::lp::solve(down);
            REQUIRE(su.optimal());
            REQUIRE(sd.optimal());
            const double fd = (su.objective_value - sd.objective_value) / (2.0 * h);
            CHECK(std::abs(fd - sens.gradient[i]) <= 1e-6);
        }
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("invalid programs rejected") {
    LinearProgram lp(2, 1);
    lp.rhs[0] = std::nan("");
    CHECK_THROWS_AS(cfa::lp::solve(lp), std::invalid_argument);
    LinearProgram empty;
    CHECK_THROWS_AS(cfa::lp::solve(empty), std::invalid_argument);
}
