#include "cfa/lp.hpp"

#include <algorithm>
#include <cmath>

namespace cfa::lp {

std::vector<Vertex> enumerate_vertices(const LinearProgram& lp, double tolerance) {
    lp.validate();
    const std::size_t n = lp.num_vars();
    const std::size_t m = lp.num_rows();
    if (n > 8 || m > 10) throw std::invalid_argument("vertex enumeration limited to n <= 8, m <= 10");

    // Candidate active sets: every equality row, plus a choice of the remaining
    // n - (#equalities) among the inequality rows and the bounds x_j >= 0.
    std::vector<std::size_t> forced;
    std::vector<std::size_t> optional;  // index < m: row, index >= m: bound on x_{index-m}
    for (std::size_t r = 0; r < m; ++r)
        (lp.sense(r) == RowSense::kEqual ? forced : optional).push_back(r);
    for (std::size_t j = 0; j < n; ++j) optional.push_back(m + j);
    if (forced.size() > n) {
        // Over-determined equality system: only its unique solution, if any, can be a vertex.
        forced.resize(n);
    }
    const std::size_t pick = n - forced.size();

    const auto scale = 1.0 + (m > 0 ? lp.rhs.cwiseAbs().maxCoeff() : 0.0);
    std::vector<Vertex> vertices;
    std::vector<bool> mask(optional.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(pick), true);
    do {
        Eigen::MatrixXd system(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Eigen::VectorXd target(static_cast<Eigen::Index>(n));
        Eigen::Index k = 0;
        auto add = [&](std::size_t idx) {
            if (idx < m) {
                system.row(k) = lp.constraints.row(static_cast<Eigen::Index>(idx));
                target[k] = lp.rhs[static_cast<Eigen::Index>(idx)];
            } else {
                system.row(k).setZero();
                system(k, static_cast<Eigen::Index>(idx - m)) = 1.0;
                target[k] = 0.0;
            }
            ++k;
        };
        for (const auto r : forced) add(r);
        for (std::size_t i = 0; i < optional.size(); ++i)
            if (mask[i]) add(optional[i]);

        Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
        if (lu.rank() < static_cast<Eigen::Index>(n)) continue;
        const Eigen::VectorXd point = lu.solve(target);
        if (!point.allFinite() || feasibility_residual(lp, point) > tolerance * scale * 10.0) continue;

        const bool seen = std::any_of(vertices.begin(), vertices.end(), [&](const Vertex& v) {
            return (v.point - point).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + point.cwiseAbs().maxCoeff());
        });
        if (!seen) vertices.push_back(Vertex{point, lp.objective.dot(point)});
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return vertices;
}

}  // namespace cfa::lp
