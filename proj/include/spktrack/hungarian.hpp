#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace spktrack {

/// Minimum-cost assignment on a dense rows x cols cost matrix (row-major).
/// Returns, for every row, the assigned column or -1 (only when rows > cols).
/// Shortest augmenting path with potentials, O(n^2 m).
inline std::vector<int> solve_assignment(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
    const bool transposed = rows > cols;
    const std::size_t n = transposed ? cols : rows;  // n <= m
    const std::size_t m = transposed ? rows : cols;
    auto at = [&](std::size_t i, std::size_t j) {  // 1-based i in [1, n], j in [1, m]
        return transposed ? cost[(j - 1) * cols + (i - 1)] : cost[(i - 1) * cols + (j - 1)];
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = at(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        if (transposed)
            out[j - 1] = static_cast<int>(p[j] - 1);
        else
            out[p[j] - 1] = static_cast<int>(j - 1);
    }
    return out;
}

}  // namespace spktrack
