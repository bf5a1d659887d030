#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "evdetect/common.hpp"

namespace evdetect {

/// Scratch matrices for one soft-DTW evaluation. dp matrices are padded to
/// (n+2) x (m+2) so the backward recursion needs no special border cases.
struct SdtwWorkspace {
    std::size_t n = 0, m = 0;
    real gamma = real(1);
    std::vector<real> cost_matrix; // n x m pairwise squared distances
    std::vector<real> dp_forward;  // (n+2) x (m+2) soft-min accumulator
    std::vector<real> dp_backward; // (n+2) x (m+2) alignment expectations
};

namespace detail {

inline real softmin3(real a, real b, real c, real gamma) {
    const real mn = std::min(a, std::min(b, c));
    if (gamma == real(0) || !std::isfinite(mn)) return mn;
    const real s = std::exp((mn - a) / gamma) + std::exp((mn - b) / gamma) +
                   std::exp((mn - c) / gamma);
    return mn - gamma * std::log(s);
}

} // namespace detail

/// Soft-DTW between two scalar sequences with squared-Euclidean cell cost.
/// gamma = 0 gives classic (hard) DTW. If `grad_y` is non-null it receives
/// d(value)/dy, which requires gamma > 0.
inline real soft_dtw(std::span<const real> x, std::span<const real> y, real gamma,
                     SdtwWorkspace* workspace = nullptr,
                     std::vector<real>* grad_y = nullptr) {
    if (x.empty() || y.empty()) throw ShapeError("soft_dtw: empty sequence");
    if (gamma < real(0)) throw ConfigError("soft_dtw: gamma must be >= 0");
    if (grad_y && gamma == real(0))
        throw ConfigError("soft_dtw: gradient requires gamma > 0");

    const std::size_t n = x.size(), m = y.size();
    SdtwWorkspace local;
    SdtwWorkspace& ws = workspace ? *workspace : local;
    ws.n = n;
    ws.m = m;
    ws.gamma = gamma;

    const real inf = std::numeric_limits<real>::infinity();
    const std::size_t rw = m + 2; // padded row width
    ws.cost_matrix.assign(n * m, real(0));
    ws.dp_forward.assign((n + 2) * (m + 2), inf);
    auto R = [&](std::size_t i, std::size_t j) -> real& { return ws.dp_forward[i * rw + j]; };
    auto D = [&](std::size_t i, std::size_t j) -> real& { return ws.cost_matrix[(i - 1) * m + (j - 1)]; };

    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j) {
            const real d = x[i - 1] - y[j - 1];
            D(i, j) = d * d;
        }

    R(0, 0) = real(0);
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            R(i, j) = D(i, j) + detail::softmin3(R(i - 1, j - 1), R(i - 1, j), R(i, j - 1), gamma);

    const real value = R(n, m);
    if (!grad_y) return value;

    // Backward recursion over alignment expectations.
    ws.dp_backward.assign((n + 2) * (m + 2), real(0));
    auto E = [&](std::size_t i, std::size_t j) -> real& { return ws.dp_backward[i * rw + j]; };
    auto Dx = [&](std::size_t i, std::size_t j) -> real {
        return (i >= 1 && i <= n && j >= 1 && j <= m) ? D(i, j) : real(0);
    };

    for (std::size_t i = 1; i <= n; ++i) R(i, m + 1) = -inf;
    for (std::size_t j = 1; j <= m; ++j) R(n + 1, j) = -inf;
    R(n + 1, m + 1) = value;
    E(n + 1, m + 1) = real(1);

    for (std::size_t j = m; j >= 1; --j) {
        for (std::size_t i = n; i >= 1; --i) {
            const real rij = R(i, j);
            const real a = std::exp((R(i + 1, j) - rij - Dx(i + 1, j)) / gamma);
            const real b = std::exp((R(i, j + 1) - rij - Dx(i, j + 1)) / gamma);
            const real c = std::exp((R(i + 1, j + 1) - rij - Dx(i + 1, j + 1)) / gamma);
            E(i, j) = a * E(i + 1, j) + b * E(i, j + 1) + c * E(i + 1, j + 1);
        }
    }

    grad_y->assign(m, real(0));
    for (std::size_t j = 1; j <= m; ++j) {
        real acc = 0;
        for (std::size_t i = 1; i <= n; ++i)
            acc += E(i, j) * real(2) * (y[j - 1] - x[i - 1]);
        (*grad_y)[j - 1] = acc;
    }
    return value;
}

} // namespace evdetect
