#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/soft_dtw.hpp"
#include "evdetect/tensor.hpp"

namespace evdetect {

/// Weights of the combined objective: lambda1 * L_rec + lambda2 * L_DTW + lambda3 * L_cos.
struct LossWeights {
    real lambda1 = real(1);
    real lambda2 = real(0);
    real lambda3 = real(0);

    bool any_positive() const { return lambda1 > 0 || lambda2 > 0 || lambda3 > 0; }
};

inline void validate(const LossWeights& w) {
    if (w.lambda1 < 0 || w.lambda2 < 0 || w.lambda3 < 0)
        throw ConfigError("loss weights must be non-negative");
    if (!w.any_positive()) throw ConfigError("at least one loss weight must be positive");
}

namespace detail {

inline void require_same_shape(const Matrix& x, const Matrix& xhat, const char* what) {
    if (x.rows != xhat.rows || x.cols != xhat.cols)
        throw ShapeError(std::string(what) + ": batch shape mismatch");
    if (x.rows == 0 || x.cols == 0)
        throw ShapeError(std::string(what) + ": empty batch");
}

inline real row_norm(const real* p, std::size_t n) {
    real s = 0;
    for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

} // namespace detail

/// Mean Euclidean reconstruction error: (1/N) sum_i ||x_i - xhat_i||_2.
inline real l2_loss(const Matrix& x, const Matrix& xhat, Matrix* grad_xhat = nullptr) {
    detail::require_same_shape(x, xhat, "l2_loss");
    const std::size_t N = x.rows, W = x.cols;
    if (grad_xhat) *grad_xhat = Matrix(N, W);
    real total = 0;
    for (std::size_t r = 0; r < N; ++r) {
        const real* xr = x.row(r);
        const real* hr = xhat.row(r);
        real s = 0;
        for (std::size_t c = 0; c < W; ++c) {
            const real d = xr[c] - hr[c];
            s += d * d;
        }
        const real norm = std::sqrt(s);
        total += norm;
        if (grad_xhat && norm > real(0)) {
            real* g = grad_xhat->row(r);
            const real scale = real(1) / (norm * real(N));
            for (std::size_t c = 0; c < W; ++c) g[c] = (hr[c] - xr[c]) * scale;
        }
    }
    return total / real(N);
}

/// Mean cosine similarity across the batch.
inline real cosine_similarity(const Matrix& x, const Matrix& xhat) {
    detail::require_same_shape(x, xhat, "cosine_loss");
    const std::size_t N = x.rows, W = x.cols;
    real total = 0;
    for (std::size_t r = 0; r < N; ++r) {
        const real nx = detail::row_norm(x.row(r), W);
        const real nh = detail::row_norm(xhat.row(r), W);
        if (!(nx > real(0)) || !(nh > real(0)))
            throw NumericError("cosine_loss: zero-norm sequence");
        real dot = 0;
        const real* xr = x.row(r);
        const real* hr = xhat.row(r);
        for (std::size_t c = 0; c < W; ++c) dot += xr[c] * hr[c];
        total += dot / (nx * nh);
    }
    return total / real(N);
}

/// Trainable cosine loss: 1 - mean similarity, so minimizing aligns
/// reconstructions with their inputs.
inline real cosine_loss(const Matrix& x, const Matrix& xhat, Matrix* grad_xhat = nullptr) {
    detail::require_same_shape(x, xhat, "cosine_loss");
    const std::size_t N = x.rows, W = x.cols;
    if (grad_xhat) *grad_xhat = Matrix(N, W);
    real total_sim = 0;
    for (std::size_t r = 0; r < N; ++r) {
        const real* xr = x.row(r);
        const real* hr = xhat.row(r);
        const real nx = detail::row_norm(xr, W);
        const real nh = detail::row_norm(hr, W);
        if (!(nx > real(0)) || !(nh > real(0)))
            throw NumericError("cosine_loss: zero-norm sequence");
        real dot = 0;
        for (std::size_t c = 0; c < W; ++c) dot += xr[c] * hr[c];
        const real sim = dot / (nx * nh);
        total_sim += sim;
        if (grad_xhat) {
            // d(sim)/d(xhat) = x/(|x||xhat|) - sim * xhat/|xhat|^2
            real* g = grad_xhat->row(r);
            const real inv = real(1) / (nx * nh);
            const real self = sim / (nh * nh);
            for (std::size_t c = 0; c < W; ++c)
                g[c] = -(xr[c] * inv - self * hr[c]) / real(N);
        }
    }
    return real(1) - total_sim / real(N);
}

/// Batch-mean soft-DTW between rows, gradient taken w.r.t. xhat.
inline real sdtw_loss(const Matrix& x, const Matrix& xhat, real gamma,
                      Matrix* grad_xhat = nullptr, SdtwWorkspace* workspace = nullptr) {
    detail::require_same_shape(x, xhat, "sdtw_loss");
    const std::size_t N = x.rows, W = x.cols;
    if (grad_xhat) *grad_xhat = Matrix(N, W);
    SdtwWorkspace local;
    SdtwWorkspace& ws = workspace ? *workspace : local;
    std::vector<real> g;
    real total = 0;
    for (std::size_t r = 0; r < N; ++r) {
        std::span<const real> xr(x.row(r), W);
        std::span<const real> hr(xhat.row(r), W);
        total += soft_dtw(xr, hr, gamma, &ws, grad_xhat ? &g : nullptr);
        if (grad_xhat) {
            real* out = grad_xhat->row(r);
            for (std::size_t c = 0; c < W; ++c) out[c] = g[c] / real(N);
        }
    }
    return total / real(N);
}

/// Weighted combination; zero-weight terms are skipped entirely.
inline real combined_loss(const Matrix& x, const Matrix& xhat, const LossWeights& w,
                          real gamma, Matrix* grad_xhat = nullptr,
                          SdtwWorkspace* workspace = nullptr) {
    validate(w);
    detail::require_same_shape(x, xhat, "combined_loss");
    if (grad_xhat) *grad_xhat = Matrix(x.rows, x.cols);
    real value = 0;
    Matrix part;
    auto add = [&](real weight, real term) {
        value += weight * term;
        if (grad_xhat)
            for (std::size_t i = 0; i < part.data.size(); ++i)
                grad_xhat->data[i] += weight * part.data[i];
    };
    if (w.lambda1 > 0) add(w.lambda1, l2_loss(x, xhat, grad_xhat ? &part : nullptr));
    if (w.lambda2 > 0) add(w.lambda2, sdtw_loss(x, xhat, gamma, grad_xhat ? &part : nullptr, workspace));
    if (w.lambda3 > 0) add(w.lambda3, cosine_loss(x, xhat, grad_xhat ? &part : nullptr));
    return value;
}

} // namespace evdetect
