#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cfa/forecast.hpp"

namespace cfa::forecast {

Eigen::MatrixXd build_covariance(const CovarianceSpec& spec) {
    if (spec.sigma < 0.0 || !(spec.alpha > 0.0) || spec.horizon < 1)
        throw std::invalid_argument("covariance spec requires sigma >= 0, alpha > 0, horizon >= 1");
    const auto h = static_cast<Eigen::Index>(spec.horizon);
    Eigen::MatrixXd sigma(h, h);
    const double variance = spec.sigma * spec.sigma;
    for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index j = 0; j < h; ++j)
            sigma(i, j) = variance * std::exp(-spec.alpha * static_cast<double>(std::abs(i - j)));
    return sigma;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw std::domain_error("covariance matrix must be square");
    if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw std::domain_error("covariance matrix must be symmetric");
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw std::domain_error("covariance matrix is not positive-definite");
    return llt.matrixL();
}

Eigen::VectorXd sample_correlated_noise(const Eigen::MatrixXd& lower, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(lower.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    return lower.triangularView<Eigen::Lower>() * z;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

EmpiricalCdf::EmpiricalCdf(std::vector<double> support, std::vector<double> probabilities)
    : support_(std::move(support)), probs_(std::move(probabilities)) {
    if (support_.size() < 2 || support_.size() != probs_.size())
        throw std::invalid_argument("empirical CDF needs matching support/probability rows (at least 2)");
    for (std::size_t i = 0; i < support_.size(); ++i) {
        if (!std::isfinite(support_[i]) || !(probs_[i] >= 0.0 && probs_[i] <= 1.0))
            throw std::invalid_argument("empirical CDF entries must be finite probabilities in [0,1]");
        if (i > 0 && !(support_[i] > support_[i - 1]))
            throw std::invalid_argument("empirical CDF support must be strictly increasing");
        if (i > 0 && probs_[i] < probs_[i - 1])
            throw std::invalid_argument("empirical CDF probabilities must be nondecreasing");
    }
    if (probs_.back() != 1.0) throw std::invalid_argument("empirical CDF must end at probability 1");
}

double EmpiricalCdf::cdf(double x) const {
    if (x <= support_.front()) return x < support_.front() ? 0.0 : probs_.front();
    if (x >= support_.back()) return 1.0;
    const auto it = std::upper_bound(support_.begin(), support_.end(), x);
    const auto i = static_cast<std::size_t>(it - support_.begin());
    const double w = (x - support_[i - 1]) / (support_[i] - support_[i - 1]);
    return probs_[i - 1] + w * (probs_[i] - probs_[i - 1]);
}

double EmpiricalCdf::quantile(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    if (p <= probs_.front()) return support_.front();
    const auto it = std::lower_bound(probs_.begin(), probs_.end(), p);
    const auto i = static_cast<std::size_t>(it - probs_.begin());
    if (probs_[i] == p) return support_[i];
    const double w = (p - probs_[i - 1]) / (probs_[i] - probs_[i - 1]);
    return support_[i - 1] + w * (support_[i] - support_[i - 1]);
}

Eigen::VectorXd transform_noise(const Eigen::VectorXd& noise, const EmpiricalCdf& cdf) {
    Eigen::VectorXd out(noise.size());
    for (Eigen::Index i = 0; i < noise.size(); ++i) out[i] = cdf.quantile(standard_normal_cdf(noise[i]));
    return out;
}

const EmpiricalCdf& CdfBuckets::select(double level) const {
    for (std::size_t i = 0; i + 1 < upper_levels.size(); ++i)
        if (level < upper_levels[i]) return cdfs[i];
    return cdfs.back();
}

void CdfBuckets::validate() const {
    if (cdfs.empty() || cdfs.size() != upper_levels.size())
        throw std::invalid_argument("CDF buckets need one upper level per CDF");
    for (std::size_t i = 1; i < upper_levels.size(); ++i)
        if (!(upper_levels[i] > upper_levels[i - 1]))
            throw std::invalid_argument("CDF bucket levels must be strictly increasing");
}

CdfBuckets default_cdf_buckets() {
    CdfBuckets buckets;
    const std::vector<double> levels{8.0, 16.0, 24.0, 32.0, std::numeric_limits<double>::infinity()};
    const std::vector<double> half_widths{2.0, 3.5, 5.0, 6.5, 8.0};
    const std::vector<double> shape{-1.0, -0.6, -0.25, 0.0, 0.25, 0.6, 1.0};
    const std::vector<double> probs{0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
    for (std::size_t b = 0; b < levels.size(); ++b) {
        std::vector<double> support;
        for (const double s : shape) support.push_back(s * half_widths[b]);
        buckets.upper_levels.push_back(levels[b]);
        buckets.cdfs.emplace_back(std::move(support), probs);
    }
    return buckets;
}

CdfBuckets read_cdf_buckets(std::istream& in) {
    CdfBuckets buckets;
    std::vector<double> support, probs;
    auto flush = [&](std::size_t line_no) {
        if (buckets.upper_levels.size() == buckets.cdfs.size()) return;
        try {
            buckets.cdfs.emplace_back(std::move(support), std::move(probs));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("CDF file line " + std::to_string(line_no) + ": " + e.what());
        }
        support.clear();
        probs.clear();
    };
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line.substr(first));
        if (line.compare(first, 6, "bucket") == 0) {
            flush(line_no);
            std::string keyword, level;
            ss >> keyword >> level;
            double upper = 0.0;
            if (level == "inf") {
                upper = std::numeric_limits<double>::infinity();
            } else {
                try {
                    upper = std::stod(level);
                } catch (const std::exception&) {
                    throw std::invalid_argument("CDF file line " + std::to_string(line_no) + ": bad bucket level");
                }
            }
            buckets.upper_levels.push_back(upper);
            continue;
        }
        if (buckets.upper_levels.empty())
            throw std::invalid_argument("CDF file line " + std::to_string(line_no) + ": row before any bucket");
        double x = 0.0, p = 0.0;
        char comma = 0;
        if (!(ss >> x >> comma >> p) || comma != ',')
            throw std::invalid_argument("CDF file line " + std::to_string(line_no) + ": expected 'support, probability'");
        support.push_back(x);
        probs.push_back(p);
    }
    flush(line_no);
    buckets.validate();
    return buckets;
}

CdfBuckets load_cdf_buckets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open CDF file: " + path);
    return read_cdf_buckets(in);
}

void write_cdf_buckets(std::ostream& out, const CdfBuckets& buckets) {
    out << "# Empirical CDFs of the one-step wind forecast change.\n"
        << "# 'bucket U' applies while the current forecast level is below U.\n"
        << "# Rows: support, cumulative probability\n";
    // shortest text that parses back to the same double
    const auto exact = [](double v) {
        char buf[32];
        return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    };
    for (std::size_t b = 0; b < buckets.cdfs.size(); ++b) {
        out << "bucket " << (std::isinf(buckets.upper_levels[b]) ? "inf" : exact(buckets.upper_levels[b])) << '\n';
        const auto& cdf = buckets.cdfs[b];
        for (std::size_t i = 0; i < cdf.support().size(); ++i)
            out << exact(cdf.support()[i]) << ", " << exact(cdf.probabilities()[i]) << '\n';
    }
}

}  // namespace cfa::forecast
