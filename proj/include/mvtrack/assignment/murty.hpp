#pragma once

#include "mvtrack/assignment/hungarian.hpp"

#include <algorithm>
#include <optional>
#include <queue>
#include <vector>

namespace mvtrack::assignment {

/// Murty's ranked assignment: up to k lowest-cost matchings of size
/// min(rows, cols), in nondecreasing cost. Equal costs are ordered by the
/// row-to-column vector. Throws InfeasibleAssignment when even the best
/// matching does not exist.
[[nodiscard]] inline std::vector<Assignment> murty_kbest(const CostMatrix& costs, std::size_t k) {
    validate_costs(costs);
    if (k == 0) return {};
    const int n_rows = static_cast<int>(costs.rows());
    const int n_cols = static_cast<int>(costs.cols());
    if (n_rows == 0 || n_cols == 0) return {Assignment{}};

    struct Node {
        CostMatrix constrained;
        Assignment solution;
        std::vector<int> key;
    };
    auto worse = [](const Node& a, const Node& b) {
        if (a.solution.total_cost != b.solution.total_cost)
            return a.solution.total_cost > b.solution.total_cost;
        return a.key > b.key;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);

    auto solve = [&](CostMatrix m) -> std::optional<Node> {
        try {
            auto sol = hungarian(m);
            // Re-sum against the unconstrained matrix so totals are comparable.
            sol.total_cost = 0.0;
            for (auto [r, c] : sol.pairs) sol.total_cost += costs(r, c);
            auto key = sol.row_to_col(n_rows);
            return Node{std::move(m), std::move(sol), std::move(key)};
        } catch (const InfeasibleAssignment&) {
            return std::nullopt;
        }
    };

    auto first = solve(costs);
    if (!first) throw InfeasibleAssignment("murty_kbest: cost matrix has no feasible assignment");
    open.push(std::move(*first));

    std::vector<Assignment> results;
    while (!open.empty() && results.size() < k) {
        Node best = open.top();
        open.pop();
        results.push_back(best.solution);
        if (results.size() >= k) break;

        CostMatrix fixed = best.constrained;
        for (auto [r, c] : best.solution.pairs) {
            CostMatrix excluded = fixed;
            excluded(r, c) = kInfeasible;
            if (auto child = solve(std::move(excluded))) open.push(std::move(*child));

            for (int j = 0; j < n_cols; ++j)
                if (j != c) fixed(r, j) = kInfeasible;
            for (int i = 0; i < n_rows; ++i)
                if (i != r) fixed(i, c) = kInfeasible;
        }
    }

    std::stable_sort(results.begin(), results.end(), [n_rows](const Assignment& a, const Assignment& b) {
        if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
        return a.row_to_col(n_rows) < b.row_to_col(n_rows);
    });
    return results;
}

} // namespace mvtrack::assignment
