#pragma once

// Independent reference implementations used only by tests. These must stay
// decoupled from the library code paths they verify.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "evdetect/common.hpp"

namespace oracle {

using evdetect::real;

/// Classic hard-DTW dynamic program with plain min and squared cell cost.
inline real hard_dtw(std::span<const real> x, std::span<const real> y) {
    const std::size_t n = x.size(), m = y.size();
    const real inf = std::numeric_limits<real>::infinity();
    std::vector<real> dp((n + 1) * (m + 1), inf);
    auto at = [&](std::size_t i, std::size_t j) -> real& { return dp[i * (m + 1) + j]; };
    at(0, 0) = 0;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            const real d = x[i - 1] - y[j - 1];
            at(i, j) = d * d + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
        }
    return at(n, m);
}

/// Enumerates every monotone alignment path and collects its total cost.
/// Exponential; only for very small inputs.
inline void enumerate_path_costs(std::span<const real> x, std::span<const real> y,
                                 std::size_t i, std::size_t j, real acc,
                                 std::vector<real>& out) {
    const real d = x[i] - y[j];
    acc += d * d;
    if (i + 1 == x.size() && j + 1 == y.size()) {
        out.push_back(acc);
        return;
    }
    if (i + 1 < x.size()) enumerate_path_costs(x, y, i + 1, j, acc, out);
    if (j + 1 < y.size()) enumerate_path_costs(x, y, i, j + 1, acc, out);
    if (i + 1 < x.size() && j + 1 < y.size()) enumerate_path_costs(x, y, i + 1, j + 1, acc, out);
}

/// Brute-force soft-min over all alignment paths: -gamma log sum exp(-cost/gamma).
inline real brute_force_soft_dtw(std::span<const real> x, std::span<const real> y, real gamma) {
    std::vector<real> costs;
    enumerate_path_costs(x, y, 0, 0, real(0), costs);
    if (gamma == real(0)) return *std::min_element(costs.begin(), costs.end());
    const real mn = *std::min_element(costs.begin(), costs.end());
    real s = 0;
    for (real c : costs) s += std::exp((mn - c) / gamma);
    return mn - gamma * std::log(s);
}

/// AUC as the pairwise comparison probability P(pos > neg) + 0.5 P(pos == neg).
inline real mann_whitney_auc(const std::vector<real>& scores, const std::vector<int>& labels) {
    real wins = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1;
            else if (scores[i] == scores[j]) wins += real(0.5);
        }
    }
    return wins / real(pairs);
}

} // namespace oracle
