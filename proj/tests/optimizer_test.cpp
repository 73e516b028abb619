#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "cfa/optimizer.hpp"

using namespace cfa;
using opt::SampleObjective;

namespace {

// F̄(θ, ω) = ½‖θ − θ* − ξ(ω)‖², ξ ~ N(0, s²I) keyed by ω.
class NoisyQuadratic : public SampleObjective {
public:
    NoisyQuadratic(Eigen::VectorXd target, double noise) : target_(std::move(target)), noise_(noise) {}
    std::size_t dimension() const override { return static_cast<std::size_t>(target_.size()); }
    double value(const Eigen::VectorXd& theta, std::uint64_t sample) const override {
        std::mt19937_64 rng(sample);
        std::normal_distribution<double> normal(0.0, noise_);
        Eigen::VectorXd xi(target_.size());
        for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
        return 0.5 * (theta - target_ - xi).squaredNorm();
    }

private:
    Eigen::VectorXd target_;
    double noise_;
};

// F̄(θ, ω) = aᵀθ + noise(ω)
class NoisyLinear : public SampleObjective {
public:
    explicit NoisyLinear(Eigen::VectorXd a) : a_(std::move(a)) {}
    std::size_t dimension() const override { return static_cast<std::size_t>(a_.size()); }
    double value(const Eigen::VectorXd& theta, std::uint64_t sample) const override {
        std::mt19937_64 rng(sample);
        return a_.dot(theta) + std::normal_distribution<double>(0.0, 1.0)(rng);
    }

private:
    Eigen::VectorXd a_;
};

class Function1d : public SampleObjective {
public:
    explicit Function1d(std::function<double(double)> f) : f_(std::move(f)) {}
    std::size_t dimension() const override { return 1; }
    double value(const Eigen::VectorXd& theta, std::uint64_t) const override { return f_(theta[0]); }

private:
    std::function<double(double)> f_;
};

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (const double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("stepsize rules") {
    SUBCASE("adagrad first step") {
        opt::StepsizeState state;
        const auto a = opt::apply_stepsize(opt::AdaGrad{1.0, 0.0}, state, vec({3, 4}));
        CHECK(a[0] == doctest::Approx(1.0 / 3.0));
        CHECK(a[1] == doctest::Approx(1.0 / 4.0));
    }
    SUBCASE("rmsprop first step") {
        opt::StepsizeState state;
        const auto a = opt::apply_stepsize(opt::RMSProp{0.5, 0.9, 0.0}, state, vec({3, 4}));
        CHECK(state.average == doctest::Approx(2.5));
        CHECK(a[0] == doctest::Approx(0.5 / std::sqrt(2.5)));
        CHECK(a[1] == a[0]);
    }
    SUBCASE("zero gradient with epsilon gives finite steps") {
        opt::StepsizeState ada, rms;
        const auto a = opt::apply_stepsize(opt::AdaGrad{1.0, 1e-8}, ada, vec({0, 0}));
        const auto r = opt::apply_stepsize(opt::RMSProp{1.0, 0.9, 1e-8}, rms, vec({0, 0}));
        CHECK(a.allFinite());
        CHECK(r.allFinite());
        CHECK(ada.squared_sum.isZero());
        CHECK(rms.average == 0.0);
        opt::StepsizeState bare;
        CHECK(opt::apply_stepsize(opt::RMSProp{1.0, 0.9, 0.0}, bare, vec({0})).isZero());
    }
    SUBCASE("polynomial") {
        opt::StepsizeState state;
        opt::apply_stepsize(opt::Polynomial{}, state, vec({1}));
        opt::apply_stepsize(opt::Polynomial{}, state, vec({1}));
        opt::apply_stepsize(opt::Polynomial{}, state, vec({1}));
        CHECK(opt::apply_stepsize(opt::Polynomial{}, state, vec({1}))[0] == 0.5);
    }
    CHECK_THROWS_AS(opt::validate(opt::RMSProp{0.1, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(opt::validate(opt::AdaGrad{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("smoothing schedule") {
    const opt::SmoothingSchedule s{1.0, 1, 0.25};
    const auto [eta1, alpha1] = opt::schedule_values(s, 1);
    CHECK(eta1 == 5.0);
    CHECK(alpha1 == 1.0);
    const auto [eta16, alpha16] = opt::schedule_values(s, 16);
    CHECK(eta16 == doctest::Approx(2.5));
    CHECK(alpha16 == 0.25);
    double previous = eta1;
    for (std::size_t k = 2; k <= 1000; ++k) {
        const double eta = opt::schedule_values(s, k).first;
        CHECK(eta < previous);
        previous = eta;
    }
    CHECK_THROWS_AS((opt::SmoothingSchedule{1.0, 1, 0.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS(opt::schedule_values(s, 0), std::invalid_argument);
}

TEST_CASE("output index") {
    const std::vector<double> equal{1.0, 1.0};
    CHECK(opt::output_index_pmf(equal) == std::vector<double>{0.5, 0.5});
    const std::vector<double> decaying{1.0, 1.0 / std::sqrt(2.0)};
    CHECK(opt::output_index_pmf(decaying)[0] == doctest::Approx(1.0 / (1.0 + 1.0 / std::sqrt(2.0))));
    CHECK_THROWS_AS(opt::output_index_pmf(std::vector<double>{1.0, 0.0}), std::invalid_argument);

    std::vector<double> alphas;
    for (std::size_t k = 1; k <= 5; ++k) alphas.push_back(1.0 / std::sqrt(static_cast<double>(k)));
    const auto pmf = opt::output_index_pmf(alphas);
    std::mt19937_64 rng(12);
    std::vector<int> counts(5, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto r = opt::sample_output_index(alphas, rng);
        REQUIRE(r >= 1);
        REQUIRE(r <= 5);
        ++counts[r - 1];
    }
    for (std::size_t k = 0; k < 5; ++k) {
        const double sd = std::sqrt(n * pmf[k] * (1 - pmf[k]));
        CHECK(std::abs(counts[k] - n * pmf[k]) < 3 * sd);
    }
}

TEST_CASE("sgf gradient estimator") {
    const Function1d flat([](double) { return 4.0; });
    CHECK(opt::sgf_gradient_estimate(flat, vec({1}), 0.5, 0, vec({1.3})).isZero());

    const Function1d line([](double x) { return 3.0 * x; });
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = normal(rng);
        const double g = opt::sgf_gradient_estimate(line, vec({0.2}), 0.1, 0, vec({v}))[0];
        CHECK(g == doctest::Approx(3.0 * v * v));
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 3.0) < 5.0 * std::sqrt((sq / n - mean * mean) / n));

    const Function1d smooth([](double x) { return std::sin(x); });
    const double directional = std::cos(0.4) * 0.7 * 0.7;
    const double coarse = opt::sgf_gradient_estimate(smooth, vec({0.4}), 1e-2, 0, vec({0.7}))[0];
    const double fine = opt::sgf_gradient_estimate(smooth, vec({0.4}), 1e-4, 0, vec({0.7}))[0];
    CHECK(std::abs(fine - directional) < std::abs(coarse - directional));
    CHECK(fine == doctest::Approx(directional).epsilon(1e-4));
}

TEST_CASE("sng gradient estimator") {
    const Function1d square([](double x) { return x * x; });
    CHECK(opt::sng_gradient_estimate(square, vec({2}), 0.1, 0)[0] == doctest::Approx(4.0).epsilon(1e-12));
    const Function1d flat([](double) { return 1.0; });
    CHECK(opt::sng_gradient_estimate(flat, vec({2}), 0.1, 0)[0] == 0.0);
    const NoisyLinear linear(vec({1.5, -2.0, 0.25}));
    const auto g = opt::sng_gradient_estimate(linear, vec({0.1, 0.2, 0.3}), 0.37, 9);
    CHECK(g[0] == doctest::Approx(1.5));
    CHECK(g[1] == doctest::Approx(-2.0));
    CHECK(g[2] == doctest::Approx(0.25));
}

TEST_CASE("sgf estimator is unbiased on a noisy linear objective") {
    const Eigen::VectorXd a = vec({1.0, -2.0, 0.5});
    const NoisyLinear f(a);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 100000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), sq = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd v = vec({normal(rng), normal(rng), normal(rng)});
        const auto g = opt::sgf_gradient_estimate(f, vec({0.3, 0.1, -0.2}), 0.05, static_cast<std::uint64_t>(i), v);
        sum += g;
        sq += g.cwiseAbs2();
    }
    const Eigen::VectorXd mean = sum / n;
    for (int i = 0; i < 3; ++i) {
        const double se = std::sqrt((sq[i] / n - mean[i] * mean[i]) / n);
        CHECK(std::abs(mean[i] - a[i]) <= 5.0 * se);
    }
}

TEST_CASE("gaussian smoothing stays within eta*L0*sqrt(d)") {
    // |x − 1| + 0.5|x + 2| is Lipschitz with L0 = 1.5
    const auto f = [](double x) { return std::abs(x - 1.0) + 0.5 * std::abs(x + 2.0); };
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const double eta : {0.5, 0.1}) {
        for (const double x : {1.0, -2.0, 0.3}) {
            double sum = 0.0;
            const int n = 200000;
            for (int i = 0; i < n; ++i) sum += f(x + eta * normal(rng));
            CHECK(std::abs(sum / n - f(x)) <= eta * 1.5);
        }
    }
}

TEST_CASE("run_sgf_cfa") {
    const NoisyQuadratic f(vec({1.0, -1.0}), 0.1);
    const Eigen::VectorXd theta0 = vec({6.0, 4.0});

    SUBCASE("single step") {
        opt::SgfOptions o;
        o.iterations = 1;
        o.batch_size = 1;
        o.schedule = {0.01, 2, 0.25};
        o.seed = 5;
        const auto run = opt::run_sgf_cfa(f, theta0, o);
        REQUIRE(run.iterates.size() == 2);
        CHECK(run.output_index == 1);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> normal(0.0, 1.0);
        const Eigen::VectorXd v = vec({normal(rng), normal(rng)});
        const auto g = opt::sgf_gradient_estimate(f, theta0, 0.06, 0, v);
        CHECK((run.output() - (theta0 - g)).norm() < 1e-12);
        CHECK(run.evaluations == 2);
    }

    SUBCASE("noisy convex quadratic") {
        opt::SgfOptions o;
        o.iterations = 800;
        o.batch_size = 4;
        o.schedule = {0.01, 2, 0.25};
        o.seed = 21;
        const auto run = opt::run_sgf_cfa(f, theta0, o);
        CHECK(run.iterates.size() == 801);
        CHECK(run.stepsizes.size() == 800);
        const Eigen::VectorXd target = vec({1.0, -1.0});
        CHECK((run.output() - target).norm() <= 0.1 * (theta0 - target).norm());
        std::ostringstream out;
        opt::write_trace_csv(out, run);
        const auto text = out.str();
        CHECK(text.rfind("k,theta_0,theta_1,alpha,eta,grad_norm,batch_cost\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 802);
    }
}

TEST_CASE("run_sng_cfa") {
    SUBCASE("zero-gradient landscape") {
        const Function1d flat([](double) { return 2.0; });
        opt::SngOptions o;
        o.iterations = 20;
        const auto run = opt::run_sng_cfa(flat, vec({1.7}), o);
        CHECK(run.output()[0] == 1.7);
    }
    SUBCASE("noisy 1-D quadratic with rmsprop") {
        const NoisyQuadratic f(vec({1.0}), 0.1);
        opt::SngOptions o;
        o.iterations = 800;
        o.stepsize = opt::RMSProp{0.02, 0.9, 0.0};
        const auto run = opt::run_sng_cfa(f, vec({3.0}), o);
        CHECK(std::abs(run.output()[0] - 1.0) <= 0.05 * 2.0);
        CHECK(run.output_index == 800);
    }
    SUBCASE("2d evaluations per iteration") {
        const NoisyQuadratic f(vec({1.0, 1.0, 1.0}), 0.1);
        opt::SngOptions o;
        o.iterations = 7;
        CHECK(opt::run_sng_cfa(f, vec({0.5, 0.5, 0.5}), o).evaluations == 7 * 6);
    }
    SUBCASE("projection keeps iterates in the box") {
        const NoisyQuadratic f(vec({5.0}), 0.0);
        opt::SngOptions o;
        o.iterations = 300;
        const auto run = opt::run_sng_cfa(f, vec({1.0}), o);
        for (const auto& th : run.iterates) CHECK(th[0] <= 3.0);
        CHECK(run.output()[0] == doctest::Approx(3.0));
    }
}

TEST_CASE("static CFA") {
    sim::SimulationConfig config;
    config.forecast.horizon_end = 12;
    config.forecast.lookahead = 12;
    config.forecast.sigma_energy = std::sqrt(40.0);
    const forecast::ForecastGenerator gen(config.forecast);
    const opt::StaticObjective f(sim::PathSet(gen, 0, 5), config.model, false, 0.0);
    CHECK(f.dimension() == 1);

    bool degenerate = true;
    const auto g = opt::static_subgradient(f, vec({0.8}), 2, &degenerate);
    CHECK(g.size() == 1);
    CHECK(g[0] == doctest::Approx(opt::StaticObjective(sim::PathSet(gen, 0, 5), config.model)
                                      .evaluate(vec({0.0, 0.8}), 2)
                                      .subgradient[1]));

    CHECK_THROWS_AS(opt::require_static_compatible(policy::StorageBoundsTable{}), std::invalid_argument);
    CHECK_THROWS_AS(opt::require_static_compatible(policy::ConstantForecast{}), std::invalid_argument);
    CHECK(opt::require_static_compatible(policy::AffineRhs{0.5, 2.0}).slope == 2.0);

    SUBCASE("starting at the grid optimum stays there") {
        const auto grid = sim::linspace(0.0, 3.0, 61);
        double best = std::numeric_limits<double>::infinity(), best_theta = 0.0;
        for (const double th : grid) {
            const double v = f.average(vec({th})).value;
            if (v < best) {
                best = v;
                best_theta = th;
            }
        }
        opt::StaticOptions o;
        o.iterations = 60;
        o.stepsize = opt::AdaGrad{0.05, 1e-8};
        o.projection = opt::Box::uniform(1, 0.0, 3.0);
        const auto run = opt::run_static_cfa(f, vec({best_theta}), o);
        CHECK(f.average(run.averaged).value <= best + 0.02 * std::abs(best));
    }
}
