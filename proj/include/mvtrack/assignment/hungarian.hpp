#pragma once

#include "mvtrack/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace mvtrack::assignment {

/// Rows are predictions/tracks, columns are ground truths/detections.
/// +infinity marks an infeasible cell; every other entry must be finite.
using CostMatrix = Eigen::MatrixXd;

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct Assignment {
    /// (row, col) pairs sorted by row.
    std::vector<std::pair<int, int>> pairs;
    double total_cost = 0.0;

    /// col_of[r] for every row, -1 when the row is unassigned.
    [[nodiscard]] std::vector<int> row_to_col(int n_rows) const {
        std::vector<int> out(n_rows, -1);
        for (auto [r, c] : pairs) out[r] = c;
        return out;
    }
};

inline void validate_costs(const CostMatrix& costs) {
    for (Eigen::Index i = 0; i < costs.size(); ++i) {
        const double c = costs.data()[i];
        if (std::isnan(c) || c == -kInfeasible)
            throw InvalidInput("cost matrix entries must be finite or +infinity");
    }
}

namespace detail {

/// Shortest augmenting path with row/column potentials; requires rows <= cols.
/// Returns col_of_row, or an empty vector when no finite matching exists.
inline std::vector<int> solve_wide(const CostMatrix& a) {
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(a.cols());
    const double inf = kInfeasible;
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cell = a(i0 - 1, j - 1);
                if (cell != inf) {
                    const double cur = cell - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if (j1 < 0) return {};
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else if (minv[j] != inf) {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> col_of(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) col_of[p[j] - 1] = j - 1;
    return col_of;
}

} // namespace detail

/// Minimum-cost matching of size min(rows, cols). Throws InfeasibleAssignment
/// when no matching of that size avoids the infeasible cells.
[[nodiscard]] inline Assignment hungarian(const CostMatrix& costs) {
    validate_costs(costs);
    Assignment out;
    if (costs.rows() == 0 || costs.cols() == 0) return out;

    const bool transposed = costs.rows() > costs.cols();
    const CostMatrix wide = transposed ? CostMatrix(costs.transpose()) : costs;
    const auto col_of = detail::solve_wide(wide);
    if (col_of.empty()) throw InfeasibleAssignment("no feasible assignment covers min(rows, cols) pairs");

    for (int i = 0; i < static_cast<int>(col_of.size()); ++i) {
        if (transposed) out.pairs.emplace_back(col_of[i], i);
        else out.pairs.emplace_back(i, col_of[i]);
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (auto [r, c] : out.pairs) {
        const double cell = costs(r, c);
        if (cell == kInfeasible) throw InfeasibleAssignment("no feasible assignment covers min(rows, cols) pairs");
        out.total_cost += cell;
    }
    return out;
}

/// Largest matching using only cells with cost <= max_cost, minimum total among
/// those. Cells above max_cost (and infeasible cells) are never paired.
[[nodiscard]] inline Assignment hungarian_gated(const CostMatrix& costs, double max_cost) {
    validate_costs(costs);
    Assignment out;
    if (costs.rows() == 0 || costs.cols() == 0) return out;

    double big = 1.0;
    for (Eigen::Index i = 0; i < costs.size(); ++i) {
        const double c = costs.data()[i];
        if (c <= max_cost) big += std::abs(c);
    }
    CostMatrix padded = costs;
    for (Eigen::Index i = 0; i < padded.size(); ++i)
        if (!(padded.data()[i] <= max_cost)) padded.data()[i] = big;

    for (auto [r, c] : hungarian(padded).pairs) {
        if (!(costs(r, c) <= max_cost)) continue;
        out.pairs.emplace_back(r, c);
        out.total_cost += costs(r, c);
    }
    return out;
}

} // namespace mvtrack::assignment
