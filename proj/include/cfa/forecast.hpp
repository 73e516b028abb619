#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfa::forecast {

using Rng = std::mt19937_64;

struct CovarianceSpec {
    double sigma{0.0};
    double alpha{0.2};
    std::size_t horizon{1};
};

// Σ(i,j) = σ² exp(-α|i-j|)
Eigen::MatrixXd build_covariance(const CovarianceSpec& spec);

// Lower-triangular L with L·Lᵀ = Σ. Throws std::domain_error if Σ is not
// symmetric positive-definite.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma);

// ε̄ = L·Z with Z ~ N(0, I)
Eigen::VectorXd sample_correlated_noise(const Eigen::MatrixXd& lower, Rng& rng);

double standard_normal_cdf(double x);

// Piecewise-linear CDF on a strictly increasing support.
class EmpiricalCdf {
public:
    EmpiricalCdf() = default;
    // Throws std::invalid_argument unless support is strictly increasing,
    // probabilities are nondecreasing in [0,1] and end at 1.
    EmpiricalCdf(std::vector<double> support, std::vector<double> probabilities);

    double cdf(double x) const;
    // Generalized inverse; p is clamped to [0,1].
    double quantile(double p) const;
    double median() const { return quantile(0.5); }

    const std::vector<double>& support() const noexcept { return support_; }
    const std::vector<double>& probabilities() const noexcept { return probs_; }

    friend bool operator==(const EmpiricalCdf&, const EmpiricalCdf&) = default;

private:
    std::vector<double> support_;
    std::vector<double> probs_;
};

// ε_i = F⁻¹(Φ(ε̄_i))
Eigen::VectorXd transform_noise(const Eigen::VectorXd& noise, const EmpiricalCdf& cdf);

// Empirical CDFs of the one-step forecast change, selected by the current
// forecast level: bucket i covers levels below upper_levels[i].
struct CdfBuckets {
    std::vector<double> upper_levels;
    std::vector<EmpiricalCdf> cdfs;

    const EmpiricalCdf& select(double level) const;
    void validate() const;
    friend bool operator==(const CdfBuckets&, const CdfBuckets&) = default;
};

// Five symmetric buckets whose spread grows with the forecast level.
CdfBuckets default_cdf_buckets();
CdfBuckets read_cdf_buckets(std::istream& in);
CdfBuckets load_cdf_buckets(const std::string& path);
void write_cdf_buckets(std::ostream& out, const CdfBuckets& buckets);

// Rolling forecast surface f_{t,t'} for t' in [t, min(t+H, T)].
class Surface {
public:
    Surface() = default;
    Surface(std::size_t horizon_end, std::size_t lookahead);

    std::size_t horizon_end() const noexcept { return T_; }
    std::size_t lookahead() const noexcept { return H_; }
    std::size_t window_end(std::size_t t) const noexcept { return std::min(t + H_, T_); }

    double operator()(std::size_t t, std::size_t t_prime) const { return values_(idx(t), idx(t_prime)); }
    double& operator()(std::size_t t, std::size_t t_prime) { return values_(idx(t), idx(t_prime)); }
    double realized(std::size_t t) const { return (*this)(t, t); }

    template <typename F>
    void for_each(F&& f) const {
        for (std::size_t t = 0; t <= T_; ++t)
            for (std::size_t tp = t; tp <= window_end(t); ++tp) f(t, tp, (*this)(t, tp));
    }

    friend bool operator==(const Surface& a, const Surface& b) {
        return a.T_ == b.T_ && a.H_ == b.H_ && a.values_ == b.values_;
    }

private:
    static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
    std::size_t T_{0};
    std::size_t H_{0};
    Eigen::MatrixXd values_;
};

struct ForecastSet {
    Surface energy;
    Surface demand;
    Surface price;
    double market_price{0.0};
    // per-path price intercept a ~ N(μ_p, σ_p)
    double price_intercept{0.0};

    std::size_t horizon_end() const noexcept { return energy.horizon_end(); }
    friend bool operator==(const ForecastSet&, const ForecastSet&) = default;
};

struct DemandParams {
    double base{30.0};
    double amplitude{10.0};
    double frequency{2.0};
    double correlation{0.7};
    void validate() const;
};

struct PriceParams {
    double slope{0.1};
    double intercept_mean{20.0};
    double intercept_std{5.0};
    void validate() const;
};

// Initial wind forecast f^E_{0,t'} = max(0, level + amplitude·sin(2π t'/T)); also
// the value a forecast takes when t' first enters the rolling window.
struct EnergyProfile {
    double level{60.0};
    double amplitude{30.0};
    double at(std::size_t t, std::size_t horizon_end) const;
};

struct ForecastParams {
    std::size_t horizon_end{48};  // T; periods are 0..T
    std::size_t lookahead{23};    // H
    double sigma_energy{0.0};     // σ_E
    double sigma_demand{1.0};
    double alpha{0.2};
    EnergyProfile energy;
    DemandParams demand;
    PriceParams price;
    CdfBuckets cdfs{default_cdf_buckets()};
    void validate() const;
};

// f^E_{t+1,t'} = max(0, f^E_{t,t'} + ε_{t'}) for t' in [t+1, min(t+H, T)];
// noise[i] applies to t' = t+1+i.
void roll_energy_forecasts(Surface& energy, std::size_t t, const Eigen::VectorXd& noise);

// D_t = ⌈max{0, D − D̂ sin(D̄πt/T) + e_t}⌉ with e_t a stationary AR(1) of unit variance.
std::vector<double> generate_demand_path(const DemandParams& params, std::size_t horizon_end, Rng& rng);
// Same path given the noise sequence e_0..e_T.
std::vector<double> demand_path_from_noise(const DemandParams& params, std::size_t horizon_end,
                                           const std::vector<double>& noise);

// f^D_{t-1,t'} = max(0, f^D_{t,t'} + ε̄_{t-1}[t'-t]) backwards from t = T with f^D_{t,t} = D_t.
// lower is the Cholesky factor of the demand noise covariance (a zero matrix means no noise).
Surface backfill_demand_forecasts(const std::vector<double>& demand, std::size_t lookahead,
                                  const Eigen::MatrixXd& lower, Rng& rng);

struct PriceSurfaces {
    Surface price;
    double market_price{0.0};
    double intercept{0.0};
};

// f^P_{t,t'} = a + b f^D_{t,t'} with a ~ N(μ_p, σ_p); market price = mean of all f^P.
PriceSurfaces derive_price_forecasts(const Surface& demand, const PriceParams& params, Rng& rng);
PriceSurfaces derive_price_forecasts(const Surface& demand, double slope, double intercept);

// Precomputes the Cholesky factors and draws sample paths. Path ω is fully
// determined by its seed; generation never looks at decisions.
class ForecastGenerator {
public:
    explicit ForecastGenerator(ForecastParams params);
    ForecastSet sample(std::uint64_t seed) const;
    const ForecastParams& params() const noexcept { return params_; }

private:
    ForecastParams params_;
    Eigen::MatrixXd energy_factor_;
    Eigen::MatrixXd demand_factor_;
};

// Long format: t,t_prime,energy,demand,price
void write_forecast_csv(std::ostream& out, const ForecastSet& set);

}  // namespace cfa::forecast
