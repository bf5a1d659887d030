#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/tensor.hpp"

namespace evdetect {

/// Weight-normalized dilated causal convolution parameters.
///
/// The effective kernel is g * v / ||v|| per out-channel, where the norm runs
/// over that channel's (in_channels x kernel_size) slice. Output at step s
/// uses taps x(s - i*d), i = 0..k-1, with implicit zeros left of the sequence,
/// so the output never looks at the future and keeps the input length.
struct ConvParams {
    std::size_t out_channels = 1;
    std::size_t in_channels = 1;
    std::size_t kernel_size = 1;
    std::size_t dilation = 1;
    std::vector<real> v;    // out x in x k, direction
    std::vector<real> g;    // out, magnitude
    std::vector<real> bias; // out

    ConvParams() = default;
    ConvParams(std::size_t oc, std::size_t ic, std::size_t k, std::size_t d)
        : out_channels(oc), in_channels(ic), kernel_size(k), dilation(d),
          v(oc * ic * k, real(0)), g(oc, real(0)), bias(oc, real(0)) {}

    std::size_t row_size() const { return in_channels * kernel_size; }
    std::size_t param_count() const { return v.size() + g.size() + bias.size(); }

    real v_norm(std::size_t oc) const {
        const real* r = v.data() + oc * row_size();
        real s = 0;
        for (std::size_t i = 0; i < row_size(); ++i) s += r[i] * r[i];
        return std::sqrt(s);
    }

    /// g * v / ||v||, laid out like v.
    std::vector<real> effective_kernel() const {
        std::vector<real> w(v.size());
        for (std::size_t oc = 0; oc < out_channels; ++oc) {
            const real n = v_norm(oc);
            if (!(n > real(0))) throw NumericError("conv: zero-norm direction v");
            const real scale = g[oc] / n;
            const real* src = v.data() + oc * row_size();
            real* dst = w.data() + oc * row_size();
            for (std::size_t i = 0; i < row_size(); ++i) dst[i] = scale * src[i];
        }
        return w;
    }

    /// Builds params whose effective kernel equals `kernel` exactly:
    /// v = kernel row, g = its norm. All-zero rows get a unit direction and g = 0.
    static ConvParams from_kernel(std::size_t oc, std::size_t ic, std::size_t k, std::size_t d,
                                  const std::vector<real>& kernel, const std::vector<real>& b) {
        ConvParams p(oc, ic, k, d);
        if (kernel.size() != p.v.size() || b.size() != oc)
            throw ShapeError("from_kernel: size mismatch");
        p.v = kernel;
        p.bias = b;
        for (std::size_t c = 0; c < oc; ++c) {
            real n = p.v_norm(c);
            if (n > real(0)) {
                p.g[c] = n;
            } else {
                p.v[c * p.row_size()] = real(1);
                p.g[c] = real(0);
            }
        }
        return p;
    }

    /// Seeded uniform init in +-sqrt(1/fan_in); g set so the effective kernel
    /// starts equal to v.
    static ConvParams init(std::size_t oc, std::size_t ic, std::size_t k, std::size_t d,
                           std::mt19937_64& rng) {
        ConvParams p(oc, ic, k, d);
        const real bound = real(1) / std::sqrt(real(ic * k));
        std::uniform_real_distribution<real> dist(-bound, bound);
        for (auto& x : p.v) x = dist(rng);
        for (auto& x : p.bias) x = dist(rng);
        for (std::size_t c = 0; c < oc; ++c) {
            real n = p.v_norm(c);
            if (!(n > real(0))) { p.v[c * p.row_size()] = bound; n = p.v_norm(c); }
            p.g[c] = n;
        }
        return p;
    }
};

inline Tensor1C causal_conv(const Tensor1C& x, const ConvParams& p) {
    if (x.channels != p.in_channels)
        throw ShapeError("causal_conv: input has " + std::to_string(x.channels) +
                         " channels, kernel expects " + std::to_string(p.in_channels));
    require_finite(x, "causal_conv input");
    const std::vector<real> w = p.effective_kernel();
    const std::size_t L = x.length, k = p.kernel_size, d = p.dilation;
    Tensor1C out(p.out_channels, L);
    for (std::size_t oc = 0; oc < p.out_channels; ++oc) {
        real* o = out.row(oc);
        for (std::size_t t = 0; t < L; ++t) o[t] = p.bias[oc];
        for (std::size_t ic = 0; ic < p.in_channels; ++ic) {
            const real* xin = x.row(ic);
            const real* wrow = w.data() + (oc * p.in_channels + ic) * k;
            for (std::size_t i = 0; i < k; ++i) {
                const real wt = wrow[i];
                const std::size_t shift = i * d;
                if (shift >= L) break;
                for (std::size_t t = shift; t < L; ++t) o[t] += wt * xin[t - shift];
            }
        }
    }
    return out;
}

/// Gradients in the (v, g, bias) parameterization.
struct ConvGrads {
    std::vector<real> v, g, bias;

    explicit ConvGrads(const ConvParams& p)
        : v(p.v.size(), real(0)), g(p.g.size(), real(0)), bias(p.bias.size(), real(0)) {}
};

/// Returns d(loss)/d(input); accumulates parameter gradients into `grads`.
/// The v/g gradients go through the g*v/||v|| reparameterization.
inline Tensor1C causal_conv_backward(const Tensor1C& x, const ConvParams& p,
                                     const Tensor1C& upstream, ConvGrads& grads) {
    if (x.channels != p.in_channels || upstream.channels != p.out_channels ||
        upstream.length != x.length)
        throw ShapeError("causal_conv_backward: shape mismatch");
    const std::vector<real> w = p.effective_kernel();
    const std::size_t L = x.length, k = p.kernel_size, d = p.dilation;
    const std::size_t rs = p.row_size();

    Tensor1C dx(p.in_channels, L);
    std::vector<real> dw(w.size(), real(0)); // grad wrt effective kernel

    for (std::size_t oc = 0; oc < p.out_channels; ++oc) {
        const real* up = upstream.row(oc);
        real bsum = 0;
        for (std::size_t t = 0; t < L; ++t) bsum += up[t];
        grads.bias[oc] += bsum;
        for (std::size_t ic = 0; ic < p.in_channels; ++ic) {
            const real* xin = x.row(ic);
            real* dxr = dx.row(ic);
            const std::size_t base = (oc * p.in_channels + ic) * k;
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t shift = i * d;
                if (shift >= L) break;
                const real wt = w[base + i];
                real acc = 0;
                for (std::size_t t = shift; t < L; ++t) acc += up[t] * xin[t - shift];
                for (std::size_t t = shift; t < L; ++t) dxr[t - shift] += wt * up[t];
                dw[base + i] += acc;
            }
        }
    }

    // Chain rule through w = g * v / ||v||:
    //   dg = (v . dw) / ||v||
    //   dv = g/||v|| * dw - g (v . dw)/||v||^3 * v
    for (std::size_t oc = 0; oc < p.out_channels; ++oc) {
        const real n = p.v_norm(oc);
        const real* vr = p.v.data() + oc * rs;
        const real* dwr = dw.data() + oc * rs;
        real dot = 0;
        for (std::size_t i = 0; i < rs; ++i) dot += vr[i] * dwr[i];
        grads.g[oc] += dot / n;
        const real a = p.g[oc] / n;
        const real b = p.g[oc] * dot / (n * n * n);
        real* dvr = grads.v.data() + oc * rs;
        for (std::size_t i = 0; i < rs; ++i) dvr[i] += a * dwr[i] - b * vr[i];
    }
    return dx;
}

} // namespace evdetect
