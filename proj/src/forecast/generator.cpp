#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "cfa/forecast.hpp"

namespace cfa::forecast {

Surface::Surface(std::size_t horizon_end, std::size_t lookahead)
    : T_(horizon_end),
      H_(lookahead),
      values_(Eigen::MatrixXd::Zero(idx(horizon_end + 1), idx(horizon_end + 1))) {}

double EnergyProfile::at(std::size_t t, std::size_t horizon_end) const {
    const double phase = horizon_end == 0 ? 0.0 : 2.0 * std::numbers::pi * static_cast<double>(t) /
                                                      static_cast<double>(horizon_end);
    return std::max(0.0, level + amplitude * std::sin(phase));
}

void DemandParams::validate() const {
    if (!(base > amplitude) || amplitude < 0.0) throw std::invalid_argument("demand requires base > amplitude >= 0");
    if (!(frequency > 0.0)) throw std::invalid_argument("demand frequency must be positive");
    if (!(correlation >= 0.0 && correlation < 1.0)) throw std::invalid_argument("demand correlation must be in [0,1)");
}

void PriceParams::validate() const {
    if (!(slope > 0.0)) throw std::invalid_argument("price slope must be positive");
    if (intercept_std < 0.0) throw std::invalid_argument("price intercept std must be nonnegative");
}

void ForecastParams::validate() const {
    if (lookahead > horizon_end) throw std::invalid_argument("lookahead H must not exceed horizon T");
    if (sigma_energy < 0.0 || sigma_demand < 0.0) throw std::invalid_argument("noise scales must be nonnegative");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    demand.validate();
    price.validate();
    cdfs.validate();
}

void roll_energy_forecasts(Surface& energy, std::size_t t, const Eigen::VectorXd& noise) {
    const std::size_t end = energy.window_end(t);
    if (static_cast<std::size_t>(noise.size()) < end - t)
        throw std::invalid_argument("forecast noise shorter than the rolling window");
    for (std::size_t tp = t + 1; tp <= end; ++tp)
        energy(t + 1, tp) = std::max(0.0, energy(t, tp) + noise[static_cast<Eigen::Index>(tp - t - 1)]);
}

std::vector<double> demand_path_from_noise(const DemandParams& params, std::size_t horizon_end,
                                           const std::vector<double>& noise) {
    std::vector<double> demand(horizon_end + 1);
    for (std::size_t t = 0; t <= horizon_end; ++t) {
        const double phase = horizon_end == 0 ? 0.0 : params.frequency * std::numbers::pi * static_cast<double>(t) /
                                                          static_cast<double>(horizon_end);
        demand[t] = std::ceil(std::max(0.0, params.base - params.amplitude * std::sin(phase) + noise.at(t)));
    }
    return demand;
}

std::vector<double> generate_demand_path(const DemandParams& params, std::size_t horizon_end, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innovation = std::sqrt(1.0 - params.correlation * params.correlation);
    std::vector<double> noise(horizon_end + 1);
    for (std::size_t t = 0; t <= horizon_end; ++t)
        noise[t] = t == 0 ? normal(rng) : params.correlation * noise[t - 1] + innovation * normal(rng);
    return demand_path_from_noise(params, horizon_end, noise);
}

Surface backfill_demand_forecasts(const std::vector<double>& demand, std::size_t lookahead,
                                  const Eigen::MatrixXd& lower, Rng& rng) {
    if (demand.empty()) throw std::invalid_argument("demand path is empty");
    const std::size_t T = demand.size() - 1;
    Surface surface(T, lookahead);
    for (std::size_t t = 0; t <= T; ++t) surface(t, t) = demand[t];
    for (std::size_t t = T; t >= 1; --t) {
        const Eigen::VectorXd noise = lookahead > 0 ? sample_correlated_noise(lower, rng) : Eigen::VectorXd();
        for (std::size_t tp = t; tp <= surface.window_end(t - 1); ++tp)
            surface(t - 1, tp) = std::max(0.0, surface(t, tp) + noise[static_cast<Eigen::Index>(tp - t)]);
    }
    return surface;
}

PriceSurfaces derive_price_forecasts(const Surface& demand, double slope, double intercept) {
    PriceSurfaces out{Surface(demand.horizon_end(), demand.lookahead()), 0.0, intercept};
    double sum = 0.0;
    std::size_t count = 0;
    demand.for_each([&](std::size_t t, std::size_t tp, double d) {
        const double p = intercept + slope * d;
        out.price(t, tp) = p;
        sum += p;
        ++count;
    });
    out.market_price = sum / static_cast<double>(count);
    return out;
}

PriceSurfaces derive_price_forecasts(const Surface& demand, const PriceParams& params, Rng& rng) {
    std::normal_distribution<double> normal(params.intercept_mean, params.intercept_std);
    const double a = params.intercept_std > 0.0 ? normal(rng) : params.intercept_mean;
    return derive_price_forecasts(demand, params.slope, a);
}

ForecastGenerator::ForecastGenerator(ForecastParams params) : params_(std::move(params)) {
    params_.validate();
    const auto h = static_cast<Eigen::Index>(params_.lookahead);
    auto factor = [&](double sigma) -> Eigen::MatrixXd {
        if (h == 0 || sigma == 0.0) return Eigen::MatrixXd::Zero(h, h);
        return cholesky_factor(build_covariance({sigma, params_.alpha, params_.lookahead}));
    };
    energy_factor_ = factor(params_.sigma_energy);
    demand_factor_ = factor(params_.sigma_demand);
}

ForecastSet ForecastGenerator::sample(std::uint64_t seed) const {
    Rng rng(seed);
    const std::size_t T = params_.horizon_end;
    const std::size_t H = params_.lookahead;

    ForecastSet set;
    const auto demand = generate_demand_path(params_.demand, T, rng);
    set.demand = backfill_demand_forecasts(demand, H, demand_factor_, rng);
    auto prices = derive_price_forecasts(set.demand, params_.price, rng);
    set.price = std::move(prices.price);
    set.market_price = prices.market_price;
    set.price_intercept = prices.intercept;

    set.energy = Surface(T, H);
    for (std::size_t tp = 0; tp <= set.energy.window_end(0); ++tp) set.energy(0, tp) = params_.energy.at(tp, T);
    for (std::size_t t = 0; t < T; ++t) {
        Eigen::VectorXd noise = H > 0 ? sample_correlated_noise(energy_factor_, rng) : Eigen::VectorXd();
        const std::size_t end = set.energy.window_end(t);
        for (std::size_t tp = t + 1; tp <= end; ++tp) {
            const auto i = static_cast<Eigen::Index>(tp - t - 1);
            const auto& cdf = params_.cdfs.select(set.energy(t, tp));
            noise[i] = cdf.quantile(standard_normal_cdf(noise[i]));
        }
        roll_energy_forecasts(set.energy, t, noise);
        if (t + 1 + H <= T) set.energy(t + 1, t + 1 + H) = params_.energy.at(t + 1 + H, T);
    }
    return set;
}

void write_forecast_csv(std::ostream& out, const ForecastSet& set) {
    out << "t,t_prime,energy,demand,price\n";
    const auto old_precision = out.precision(12);
    set.energy.for_each([&](std::size_t t, std::size_t tp, double e) {
        out << t << ',' << tp << ',' << e << ',' << set.demand(t, tp) << ',' << set.price(t, tp) << '\n';
    });
    out.precision(old_precision);
}

}  // namespace cfa::forecast
