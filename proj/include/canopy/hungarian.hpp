#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "canopy/errors.hpp"

namespace canopy {

// score[r][c] is the pair score for row r / column c; missing entries mark
// ineligible pairs that can never be matched.
using ScoreMatrix = std::vector<std::vector<std::optional<double>>>;

struct Assignment {
    std::vector<int> row_to_col; // -1 = unmatched
    std::vector<std::pair<int, int>> pairs;
    double total_score = 0.0;
};

// Maximum-total-score one-to-one partial assignment via the
// Jonker-Volgenant potential method on a zero-padded square matrix of
// negated scores. The matrix is padded to (rows + cols) so every row and
// column has a zero-cost dummy escape, which makes the optimum a true
// maximum-weight matching over the eligible entries. Rows or columns paired
// with a dummy (or an ineligible entry) come out unmatched. Deterministic
// for a given matrix.
inline Assignment hungarian_max(const ScoreMatrix& scores) {
    Assignment result;
    const int n_rows = static_cast<int>(scores.size());
    const int n_cols = n_rows ? static_cast<int>(scores[0].size()) : 0;
    result.row_to_col.assign(n_rows, -1);
    if (n_rows == 0 || n_cols == 0) return result;
    for (const auto& row : scores)
        if (static_cast<int>(row.size()) != n_cols)
            throw InvalidInputError("hungarian_max: ragged score matrix");

    const int n = n_rows + n_cols;
    auto cost = [&](int r, int c) -> double {
        if (r >= n_rows || c >= n_cols) return 0.0;
        const std::optional<double>& s = scores[r][c];
        return s ? -*s : 0.0;
    };

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; way[j] tracks the augmenting path's predecessor.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }

    for (int j = 1; j <= n; ++j) {
        const int i = match[j];
        if (i == 0 || i > n_rows || j > n_cols) continue;
        const std::optional<double>& s = scores[i - 1][j - 1];
        if (!s) continue; // padded onto an ineligible entry
        result.row_to_col[i - 1] = j - 1;
        result.pairs.push_back({i - 1, j - 1});
        result.total_score += *s;
    }
    return result;
}

} // namespace canopy
