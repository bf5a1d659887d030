#pragma once

#include <cstdint>
#include <optional>

#include "evdetect/conv.hpp"
#include "evdetect/layers.hpp"
#include "evdetect/rng.hpp"
#include "evdetect/tensor.hpp"

namespace evdetect {

/// Temporal residual block: two dilated causal conv layers, each followed by
/// ReLU and dropout, plus a 1x1 projection on the skip path when the channel
/// counts differ. Output is relu(skip + transform).
struct ResidualBlockParams {
    ConvParams conv1;
    ConvParams conv2;
    std::optional<ConvParams> skip_proj;
    real dropout_rate = real(0);

    static ResidualBlockParams init(std::size_t in_ch, std::size_t out_ch, std::size_t k,
                                    std::size_t dilation, real dropout_rate,
                                    std::mt19937_64& rng) {
        ResidualBlockParams b;
        b.conv1 = ConvParams::init(out_ch, in_ch, k, dilation, rng);
        b.conv2 = ConvParams::init(out_ch, out_ch, k, dilation, rng);
        if (in_ch != out_ch) b.skip_proj = ConvParams::init(out_ch, in_ch, 1, 1, rng);
        b.dropout_rate = dropout_rate;
        return b;
    }
};

/// Intermediates kept for the backward pass.
struct ResidualBlockCache {
    Tensor1C input;
    Tensor1C pre1, act1;   // conv1 output, post-relu+dropout
    Tensor1C pre2, act2;   // conv2 output, post-relu+dropout
    Tensor1C skip;         // projected (or raw) skip path
    Tensor1C pre_out;      // skip + act2, before the final relu
    DropoutMask mask1, mask2;
    bool training = false;
};

inline Tensor1C residual_block_forward(const Tensor1C& x, const ResidualBlockParams& p,
                                       bool training, std::uint64_t seed,
                                       ResidualBlockCache* cache = nullptr) {
    const bool drop = training && p.dropout_rate > real(0);

    Tensor1C pre1 = causal_conv(x, p.conv1);
    Tensor1C a1 = relu(pre1);
    DropoutMask m1;
    if (drop) {
        m1 = make_dropout_mask(a1.size(), p.dropout_rate, derive_seed(seed, 1));
        a1 = apply_mask(a1, m1);
    }

    Tensor1C pre2 = causal_conv(a1, p.conv2);
    Tensor1C a2 = relu(pre2);
    DropoutMask m2;
    if (drop) {
        m2 = make_dropout_mask(a2.size(), p.dropout_rate, derive_seed(seed, 2));
        a2 = apply_mask(a2, m2);
    }

    Tensor1C skip = p.skip_proj ? causal_conv(x, *p.skip_proj) : x;
    Tensor1C pre_out(skip.channels, skip.length);
    for (std::size_t i = 0; i < pre_out.data.size(); ++i)
        pre_out.data[i] = skip.data[i] + a2.data[i];
    Tensor1C out = relu(pre_out);

    if (cache) {
        cache->input = x;
        cache->pre1 = std::move(pre1);
        cache->act1 = a1;
        cache->pre2 = std::move(pre2);
        cache->act2 = std::move(a2);
        cache->skip = std::move(skip);
        cache->pre_out = std::move(pre_out);
        cache->mask1 = std::move(m1);
        cache->mask2 = std::move(m2);
        cache->training = drop;
    }
    return out;
}

struct ResidualBlockGrads {
    ConvGrads conv1, conv2;
    std::optional<ConvGrads> skip_proj;

    explicit ResidualBlockGrads(const ResidualBlockParams& p)
        : conv1(p.conv1), conv2(p.conv2) {
        if (p.skip_proj) skip_proj.emplace(*p.skip_proj);
    }
};

inline Tensor1C residual_block_backward(const ResidualBlockParams& p,
                                        const ResidualBlockCache& cache,
                                        const Tensor1C& upstream,
                                        ResidualBlockGrads& grads) {
    Tensor1C d_pre_out = relu_backward(cache.pre_out, upstream);

    // Transform branch: dropout -> relu -> conv2 -> dropout -> relu -> conv1.
    Tensor1C d_a2 = cache.training ? apply_mask(d_pre_out, cache.mask2) : d_pre_out;
    Tensor1C d_pre2 = relu_backward(cache.pre2, d_a2);
    Tensor1C d_a1 = causal_conv_backward(cache.act1, p.conv2, d_pre2, grads.conv2);
    if (cache.training) d_a1 = apply_mask(d_a1, cache.mask1);
    Tensor1C d_pre1 = relu_backward(cache.pre1, d_a1);
    Tensor1C dx = causal_conv_backward(cache.input, p.conv1, d_pre1, grads.conv1);

    // Skip branch.
    if (p.skip_proj) {
        Tensor1C d_skip = causal_conv_backward(cache.input, *p.skip_proj, d_pre_out, *grads.skip_proj);
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += d_skip.data[i];
    } else {
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += d_pre_out.data[i];
    }
    return dx;
}

} // namespace evdetect
