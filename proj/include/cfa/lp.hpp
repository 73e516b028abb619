#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfa::lp {

enum class RowSense { kLessEqual, kEqual };

// minimize objective·x  subject to  constraints·x (≤ | =) rhs,  x ≥ 0.
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd constraints;
    Eigen::VectorXd rhs;
    // Empty means every row is ≤.
    std::vector<RowSense> senses;

    LinearProgram() = default;
    LinearProgram(std::size_t num_vars, std::size_t num_rows);

    std::size_t num_vars() const noexcept { return static_cast<std::size_t>(objective.size()); }
    std::size_t num_rows() const noexcept { return static_cast<std::size_t>(rhs.size()); }
    RowSense sense(std::size_t row) const noexcept {
        return senses.empty() ? RowSense::kLessEqual : senses[row];
    }

    // Throws std::invalid_argument when shapes disagree or an entry is not finite.
    void validate() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure, kIterationLimit };

std::string to_string(LpStatus status);

struct LpSolution {
    LpStatus status{LpStatus::kNumericalFailure};
    Eigen::VectorXd point;
    double objective_value{0.0};
    // One entry per row: index < n is a structural variable, n + r is the logical
    // (slack or artificial) variable of row r.
    std::vector<std::size_t> basis;
    // Lagrange multipliers: nonnegative for ≤ rows at optimality, free for = rows.
    Eigen::VectorXd duals;
    // Unbounded only: feasible direction along which the objective decreases.
    Eigen::VectorXd ray;
    // A basic variable sits on a bound; duals may not be unique.
    bool degenerate{false};
    std::size_t iterations{0};

    bool optimal() const noexcept { return status == LpStatus::kOptimal; }
};

struct SimplexOptions {
    double tolerance{1e-9};
    double pivot_tolerance{1e-9};
    std::size_t max_iterations{50000};
    // Consecutive degenerate pivots before switching to pure Bland pricing.
    std::size_t degenerate_pivot_limit{50};
};

// Dense two-phase simplex. Pricing is Dantzig with lowest-index tie-breaking;
// after a run of degenerate pivots it falls back to Bland's rule, which cannot
// cycle. Deterministic for a fixed input.
LpSolution solve(const LinearProgram& lp, const SimplexOptions& options = {});

struct Vertex {
    Eigen::VectorXd point;
    double objective{0.0};
};

// Brute-force enumeration of basic feasible points. Test oracle only;
// throws std::invalid_argument beyond n ≤ 8, m ≤ 10.
std::vector<Vertex> enumerate_vertices(const LinearProgram& lp, double tolerance = 1e-9);

struct RhsSensitivity {
    // ∂(optimal value)/∂rhs, one entry per row.
    Eigen::VectorXd gradient;
    // True when the basis is degenerate, in which case the gradient is one
    // element of the subdifferential rather than the unique derivative.
    bool degenerate{false};
};

// Throws std::invalid_argument unless the solution is optimal for lp.
RhsSensitivity rhs_sensitivity(const LpSolution& solution, const LinearProgram& lp);

// Whether the optimal basis stays feasible, hence optimal, for rhs ± ε·d and all
// small ε, for every column d of directions. When it does, the optimal value is
// linear along d near rhs and the gradient above gives its exact slope. False
// marks a breakpoint: a basic variable at zero that the move would push negative.
bool basis_stable_along(const LpSolution& solution, const LinearProgram& lp, const Eigen::MatrixXd& directions,
                        double tolerance = 1e-9);

// max over rows of the constraint violation of point (≤ rows one-sided,
// = rows two-sided), also counting negative coordinates.
double feasibility_residual(const LinearProgram& lp, const Eigen::VectorXd& point);

}  // namespace cfa::lp
