#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "evdetect/common.hpp"
#include "evdetect/rng.hpp"
#include "evdetect/tensor.hpp"

namespace evdetect {

inline Tensor1C relu(const Tensor1C& x) {
    Tensor1C out = x;
    for (auto& v : out.data) v = std::max(real(0), v);
    return out;
}

/// Gates upstream by the sign of the pre-activation (subgradient 0 at 0).
inline Tensor1C relu_backward(const Tensor1C& pre, const Tensor1C& upstream) {
    Tensor1C dx = upstream;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (!(pre.data[i] > real(0))) dx.data[i] = real(0);
    return dx;
}

/// Per-element multiplier: 0 for dropped entries, 1/(1-rate) for survivors.
/// Stored so the backward pass replays the exact same mask.
struct DropoutMask {
    std::vector<real> scale;
};

inline DropoutMask make_dropout_mask(std::size_t n, real rate, std::uint64_t seed) {
    if (!(rate >= real(0)) || rate >= real(1))
        throw ConfigError("dropout rate must be in [0,1)");
    DropoutMask mask;
    mask.scale.assign(n, real(1));
    if (rate == real(0)) return mask;
    auto rng = make_rng(seed);
    std::uniform_real_distribution<real> u(real(0), real(1));
    const real keep = real(1) / (real(1) - rate);
    for (std::size_t i = 0; i < n; ++i) mask.scale[i] = (u(rng) < rate) ? real(0) : keep;
    return mask;
}

inline Tensor1C apply_mask(const Tensor1C& x, const DropoutMask& mask) {
    Tensor1C out = x;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.scale[i];
    return out;
}

/// Inverted dropout: identity in inference mode; in training mode zeroes each
/// element with probability `rate` and scales survivors by 1/(1-rate).
inline Tensor1C dropout(const Tensor1C& x, real rate, std::uint64_t seed, bool training) {
    if (!(rate >= real(0)) || rate >= real(1))
        throw ConfigError("dropout rate must be in [0,1)");
    if (!training || rate == real(0)) return x;
    return apply_mask(x, make_dropout_mask(x.data.size(), rate, seed));
}

/// Halves the time axis by averaging adjacent pairs.
inline Tensor1C avg_pool2(const Tensor1C& x) {
    if (x.length % 2 != 0) throw ShapeError("avg_pool2: input length must be even");
    Tensor1C out(x.channels, x.length / 2);
    for (std::size_t c = 0; c < x.channels; ++c) {
        const real* in = x.row(c);
        real* o = out.row(c);
        for (std::size_t t = 0; t < out.length; ++t)
            o[t] = (in[2 * t] + in[2 * t + 1]) / real(2);
    }
    return out;
}

inline Tensor1C avg_pool2_backward(const Tensor1C& upstream) {
    Tensor1C dx(upstream.channels, upstream.length * 2);
    for (std::size_t c = 0; c < upstream.channels; ++c) {
        const real* up = upstream.row(c);
        real* d = dx.row(c);
        for (std::size_t t = 0; t < upstream.length; ++t) {
            d[2 * t] = up[t] / real(2);
            d[2 * t + 1] = up[t] / real(2);
        }
    }
    return dx;
}

/// Doubles the time axis by nearest-neighbor repetition.
inline Tensor1C upsample2(const Tensor1C& x) {
    Tensor1C out(x.channels, x.length * 2);
    for (std::size_t c = 0; c < x.channels; ++c) {
        const real* in = x.row(c);
        real* o = out.row(c);
        for (std::size_t t = 0; t < x.length; ++t) {
            o[2 * t] = in[t];
            o[2 * t + 1] = in[t];
        }
    }
    return out;
}

inline Tensor1C upsample2_backward(const Tensor1C& upstream) {
    if (upstream.length % 2 != 0) throw ShapeError("upsample2_backward: odd length");
    Tensor1C dx(upstream.channels, upstream.length / 2);
    for (std::size_t c = 0; c < upstream.channels; ++c) {
        const real* up = upstream.row(c);
        real* d = dx.row(c);
        for (std::size_t t = 0; t < dx.length; ++t) d[t] = up[2 * t] + up[2 * t + 1];
    }
    return dx;
}

} // namespace evdetect
