#include "cfa/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfa::lp {

LinearProgram::LinearProgram(std::size_t num_vars, std::size_t num_rows)
    : objective(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_vars))),
      constraints(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_rows),
                                        static_cast<Eigen::Index>(num_vars))),
      rhs(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_rows))) {}

void LinearProgram::validate() const {
    if (objective.size() < 1) throw std::invalid_argument("linear program needs at least one variable");
    if (constraints.rows() != rhs.size() || constraints.cols() != objective.size())
        throw std::invalid_argument("constraint matrix shape does not match objective/rhs");
    if (!senses.empty() && senses.size() != num_rows())
        throw std::invalid_argument("row sense count does not match rhs length");
    if (!objective.allFinite() || !constraints.allFinite() || !rhs.allFinite())
        throw std::invalid_argument("linear program contains non-finite entries");
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::kOptimal: return "optimal";
        case LpStatus::kInfeasible: return "infeasible";
        case LpStatus::kUnbounded: return "unbounded";
        case LpStatus::kNumericalFailure: return "numerical failure";
        case LpStatus::kIterationLimit: return "iteration limit";
    }
    return "unknown";
}

double feasibility_residual(const LinearProgram& lp, const Eigen::VectorXd& point) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < point.size(); ++j) worst = std::max(worst, -point[j]);
    const Eigen::VectorXd lhs = lp.constraints * point;
    for (std::size_t r = 0; r < lp.num_rows(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        const double excess = lhs[i] - lp.rhs[i];
        worst = std::max(worst, lp.sense(r) == RowSense::kEqual ? std::abs(excess) : excess);
    }
    return worst;
}

namespace {

// Row-major tableau. Columns: structural [0, n), one identity ("logical") column
// per row [n, n+m), one surplus column per sign-flipped ≤ row, then the value column.
class Tableau {
public:
    Tableau(const LinearProgram& lp, const SimplexOptions& options) : lp_(lp), opt_(options) {
        n_ = lp.num_vars();
        m_ = lp.num_rows();
        sign_.assign(m_, 1.0);
        artificial_.assign(m_, 0);
        surplus_col_.assign(m_, kNone);
        std::size_t surplus = 0;
        for (std::size_t r = 0; r < m_; ++r) {
            const double b = lp.rhs[static_cast<Eigen::Index>(r)];
            if (lp.sense(r) == RowSense::kEqual) {
                artificial_[r] = 1;
                if (b < 0.0) sign_[r] = -1.0;
            } else if (b < 0.0) {
                artificial_[r] = 1;
                sign_[r] = -1.0;
                surplus_col_[r] = n_ + m_ + surplus++;
            }
        }
        cols_ = n_ + m_ + surplus;
        width_ = cols_ + 1;
        artificial_col_.assign(cols_, 0);
        for (std::size_t r = 0; r < m_; ++r) artificial_col_[n_ + r] = artificial_[r];
        data_.assign((m_ + 1) * width_, 0.0);
        for (std::size_t r = 0; r < m_; ++r) {
            double* row = row_ptr(r);
            const auto i = static_cast<Eigen::Index>(r);
            for (std::size_t j = 0; j < n_; ++j)
                row[j] = sign_[r] * lp.constraints(i, static_cast<Eigen::Index>(j));
            row[n_ + r] = 1.0;
            if (surplus_col_[r] != kNone) row[surplus_col_[r]] = -1.0;
            row[cols_] = sign_[r] * lp.rhs[i];
        }
        basis_.resize(m_);
        for (std::size_t r = 0; r < m_; ++r) basis_[r] = n_ + r;
    }

    LpSolution run() {
        LpSolution out;
        const bool needs_phase_one = std::any_of(artificial_.begin(), artificial_.end(), [](char a) { return a != 0; });
        if (needs_phase_one) {
            load_phase_one_costs();
            const auto status = iterate(/*phase_one=*/true);
            out.iterations = iterations_;
            if (status == LpStatus::kIterationLimit || status == LpStatus::kNumericalFailure) {
                out.status = status;
                return out;
            }
            const double infeasibility = -obj_row()[cols_];
            const double scale = 1.0 + (m_ > 0 ? lp_.rhs.cwiseAbs().maxCoeff() : 0.0);
            if (infeasibility > 1e-8 * scale) {
                out.status = LpStatus::kInfeasible;
                return out;
            }
            drive_out_artificials();
        }
        load_phase_two_costs();
        const auto status = iterate(/*phase_one=*/false);
        out.iterations = iterations_;
        if (status == LpStatus::kUnbounded) {
            out.status = status;
            out.ray = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
            if (unbounded_col_ < n_) out.ray[static_cast<Eigen::Index>(unbounded_col_)] = 1.0;
            for (std::size_t r = 0; r < m_; ++r)
                if (basis_[r] < n_) out.ray[static_cast<Eigen::Index>(basis_[r])] = -at(r, unbounded_col_);
            return out;
        }
        if (status != LpStatus::kOptimal) {
            out.status = status;
            return out;
        }
        extract(out);
        return out;
    }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    double* row_ptr(std::size_t r) { return data_.data() + r * width_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * width_; }
    double* obj_row() { return row_ptr(m_); }
    double at(std::size_t r, std::size_t c) const { return row_ptr(r)[c]; }

    bool is_artificial_col(std::size_t c) const { return artificial_col_[c] != 0; }

    double phase_two_cost(std::size_t c) const {
        return c < n_ ? lp_.objective[static_cast<Eigen::Index>(c)] : 0.0;
    }

    void load_costs(auto&& cost_of) {
        double* obj = obj_row();
        std::fill(obj, obj + width_, 0.0);
        for (std::size_t c = 0; c < cols_; ++c) obj[c] = cost_of(c);
        for (std::size_t r = 0; r < m_; ++r) {
            const double cb = cost_of(basis_[r]);
            if (cb == 0.0) continue;
            const double* row = row_ptr(r);
            for (std::size_t c = 0; c < width_; ++c) obj[c] -= cb * row[c];
        }
    }

    void load_phase_one_costs() {
        load_costs([this](std::size_t c) { return is_artificial_col(c) ? 1.0 : 0.0; });
    }
    void load_phase_two_costs() {
        load_costs([this](std::size_t c) { return phase_two_cost(c); });
    }

    std::size_t choose_entering(bool phase_one, bool bland) const {
        const double* obj = row_ptr(m_);
        std::size_t best = kNone;
        double best_value = -opt_.tolerance;
        for (std::size_t c = 0; c < cols_; ++c) {
            if (!phase_one && is_artificial_col(c)) continue;
            if (obj[c] < best_value) {
                best = c;
                if (bland) return best;
                best_value = obj[c];
            }
        }
        return best;
    }

    std::size_t choose_leaving(std::size_t q) const {
        std::size_t leave = kNone;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m_; ++r) {
            const double a = at(r, q);
            if (a <= opt_.pivot_tolerance) continue;
            const double ratio = std::max(at(r, cols_), 0.0) / a;
            if (ratio < best_ratio - 1e-12) {
                best_ratio = ratio;
                leave = r;
            } else if (leave != kNone && ratio <= best_ratio + 1e-12 && basis_[r] < basis_[leave]) {
                leave = r;
            }
        }
        return leave;
    }

    void pivot(std::size_t p, std::size_t q) {
        double* prow = row_ptr(p);
        const double inv = 1.0 / prow[q];
        nz_.clear();
        for (std::size_t c = 0; c < width_; ++c) {
            if (prow[c] != 0.0) {
                prow[c] *= inv;
                nz_.push_back(c);
            }
        }
        prow[q] = 1.0;
        const bool sparse = nz_.size() * 3 < width_;
        for (std::size_t r = 0; r <= m_; ++r) {
            if (r == p) continue;
            double* row = row_ptr(r);
            const double f = row[q];
            if (f == 0.0) continue;
            if (sparse) {
                for (const std::size_t c : nz_) row[c] -= f * prow[c];
            } else {
                for (std::size_t c = 0; c < width_; ++c) row[c] -= f * prow[c];
            }
            row[q] = 0.0;
        }
        basis_[p] = q;
    }

    LpStatus iterate(bool phase_one) {
        bool bland = false;
        std::size_t degenerate_run = 0;
        for (;;) {
            if (iterations_ >= opt_.max_iterations) return LpStatus::kIterationLimit;
            const std::size_t q = choose_entering(phase_one, bland);
            if (q == kNone) return LpStatus::kOptimal;
            const std::size_t p = choose_leaving(q);
            if (p == kNone) {
                if (phase_one) return LpStatus::kNumericalFailure;  // phase one is bounded below by 0
                unbounded_col_ = q;
                return LpStatus::kUnbounded;
            }
            const double step = at(p, cols_) / at(p, q);
            if (step <= opt_.tolerance) {
                if (++degenerate_run > opt_.degenerate_pivot_limit) bland = true;
            } else {
                degenerate_run = 0;
            }
            pivot(p, q);
            ++iterations_;
            if (!std::isfinite(obj_row()[cols_])) return LpStatus::kNumericalFailure;
        }
    }

    void drive_out_artificials() {
        for (std::size_t r = 0; r < m_; ++r) {
            if (!is_artificial_col(basis_[r])) continue;
            const double* row = row_ptr(r);
            std::size_t best = kNone;
            double best_mag = opt_.pivot_tolerance;
            for (std::size_t c = 0; c < cols_; ++c) {
                if (is_artificial_col(c)) continue;
                if (std::abs(row[c]) > best_mag) {
                    best_mag = std::abs(row[c]);
                    best = c;
                }
            }
            // A row with no eligible pivot is redundant; its artificial stays basic at zero.
            if (best != kNone) pivot(r, best);
        }
    }

    void extract(LpSolution& out) const {
        const auto n = static_cast<Eigen::Index>(n_);
        out.point = Eigen::VectorXd::Zero(n);
        out.basis.resize(m_);
        bool degenerate = false;
        for (std::size_t r = 0; r < m_; ++r) {
            const std::size_t b = basis_[r];
            double value = at(r, cols_);
            if (value < 0.0 && value > -1e-7) value = 0.0;
            if (value <= opt_.tolerance) degenerate = true;
            if (b < n_) {
                out.point[static_cast<Eigen::Index>(b)] = value;
                out.basis[r] = b;
            } else if (b < n_ + m_) {
                out.basis[r] = b;
            } else {
                // surplus column of row k
                const auto it = std::find(surplus_col_.begin(), surplus_col_.end(), b);
                out.basis[r] = n_ + static_cast<std::size_t>(it - surplus_col_.begin());
            }
        }
        out.degenerate = degenerate;
        out.objective_value = lp_.objective.dot(out.point);
        out.duals = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        const double* obj = row_ptr(m_);
        for (std::size_t r = 0; r < m_; ++r) {
            // reduced cost of the identity column is -y_r for the sign-adjusted row
            const double sensitivity = sign_[r] * -obj[n_ + r];
            out.duals[static_cast<Eigen::Index>(r)] = -sensitivity;
        }
        const double scale = 1.0 + (m_ > 0 ? lp_.rhs.cwiseAbs().maxCoeff() : 0.0);
        out.status = feasibility_residual(lp_, out.point) <= 1e-8 * scale ? LpStatus::kOptimal
                                                                          : LpStatus::kNumericalFailure;
    }

    const LinearProgram& lp_;
    SimplexOptions opt_;
    std::size_t n_{0}, m_{0}, cols_{0}, width_{0};
    std::vector<double> data_;
    std::vector<double> sign_;
    std::vector<char> artificial_;
    std::vector<char> artificial_col_;
    std::vector<std::size_t> surplus_col_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> nz_;
    std::size_t iterations_{0};
    std::size_t unbounded_col_{kNone};
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SimplexOptions& options) {
    lp.validate();
    Tableau tableau(lp, options);
    return tableau.run();
}

RhsSensitivity rhs_sensitivity(const LpSolution& solution, const LinearProgram& lp) {
    if (!solution.optimal()) throw std::invalid_argument("rhs sensitivity requires an optimal solution");
    if (static_cast<std::size_t>(solution.duals.size()) != lp.num_rows())
        throw std::invalid_argument("solution does not belong to this linear program");
    return RhsSensitivity{-solution.duals, solution.degenerate};
}

bool basis_stable_along(const LpSolution& solution, const LinearProgram& lp, const Eigen::MatrixXd& directions,
                        double tolerance) {
    if (!solution.optimal()) throw std::invalid_argument("basis check requires an optimal solution");
    const auto m = static_cast<Eigen::Index>(lp.num_rows());
    const auto n = lp.num_vars();
    if (directions.rows() != m || static_cast<Eigen::Index>(solution.basis.size()) != m)
        throw std::invalid_argument("directions and basis must have one entry per row");
    if (m == 0) return true;

    // logical columns are unit vectors in the original row orientation
    Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd value(m);
    const Eigen::VectorXd slack = lp.rhs - lp.constraints * solution.point;
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t b = solution.basis[static_cast<std::size_t>(r)];
        if (b < n) {
            basis_matrix.col(r) = lp.constraints.col(static_cast<Eigen::Index>(b));
            value[r] = solution.point[static_cast<Eigen::Index>(b)];
        } else {
            const auto row = static_cast<Eigen::Index>(b - n);
            basis_matrix(row, r) = 1.0;
            value[r] = lp.sense(static_cast<std::size_t>(row)) == RowSense::kEqual ? 0.0 : slack[row];
        }
    }
    const Eigen::MatrixXd move = basis_matrix.partialPivLu().solve(directions);
    for (Eigen::Index k = 0; k < directions.cols(); ++k) {
        const double scale = 1.0 + directions.col(k).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < m; ++r)
            if (std::abs(value[r]) <= tolerance && std::abs(move(r, k)) > tolerance * scale) return false;
    }
    return true;
}

}  // namespace cfa::lp
