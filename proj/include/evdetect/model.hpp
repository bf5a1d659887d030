#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "evdetect/adam.hpp"
#include "evdetect/common.hpp"
#include "evdetect/losses.hpp"
#include "evdetect/residual.hpp"
#include "evdetect/rng.hpp"
#include "evdetect/tensor.hpp"

namespace evdetect {

/// Architecture and training settings for the temporal autoencoder.
struct TaeConfig {
    std::size_t window_length = 168;
    std::size_t kernel_size = 7;
    std::array<std::size_t, 3> filters = {32, 16, 8};   // encoder; decoder mirrors
    std::array<std::size_t, 3> dilations = {1, 2, 4};
    real dropout_rate = real(0.1);
    real learning_rate = real(1e-3);
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    LossWeights loss_weights{};
    real gamma = real(1);
    std::uint64_t seed = 42;
};

inline void validate(const TaeConfig& c) {
    if (c.window_length == 0 || c.window_length % 2 != 0)
        throw ConfigError("window_length must be positive and even");
    if (c.kernel_size == 0) throw ConfigError("kernel_size must be positive");
    for (std::size_t f : c.filters)
        if (f == 0) throw ConfigError("filter counts must be positive");
    for (std::size_t i = 0; i < 3; ++i) {
        if (c.dilations[i] == 0) throw ConfigError("dilations must be positive");
        if (i > 0 && c.dilations[i] <= c.dilations[i - 1])
            throw ConfigError("dilations must be strictly increasing");
    }
    if ((c.kernel_size - 1) * c.dilations[2] >= c.window_length)
        throw ConfigError("receptive field (k-1)*max_dilation must be < window_length");
    if (!(c.dropout_rate >= 0) || c.dropout_rate >= 1)
        throw ConfigError("dropout_rate must be in [0,1)");
    if (!(c.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (c.gamma < 0) throw ConfigError("gamma must be >= 0");
    validate(c.loss_weights);
    if (c.loss_weights.lambda2 > 0 && c.gamma == 0)
        throw ConfigError("training with the DTW term requires gamma > 0");
}

/// Encoder: three residual blocks then average pooling (halves the length).
/// Decoder: upsampling, three residual blocks with mirrored filter counts,
/// then a 1x1 projection back to one channel.
struct TaeModel {
    TaeConfig config;
    std::array<ResidualBlockParams, 3> encoder_blocks;
    std::array<ResidualBlockParams, 3> decoder_blocks;
    ConvParams output_projection;
    int format_version = 1;
};

inline std::size_t decoder_out_channels(const TaeConfig& c, std::size_t i) {
    return c.filters[2 - i];
}

inline TaeModel init_tae(const TaeConfig& cfg) {
    validate(cfg);
    TaeModel m;
    m.config = cfg;
    auto rng = make_rng(derive_seed(cfg.seed, 0x1217));
    std::size_t in_ch = 1;
    for (std::size_t i = 0; i < 3; ++i) {
        m.encoder_blocks[i] = ResidualBlockParams::init(in_ch, cfg.filters[i], cfg.kernel_size,
                                                        cfg.dilations[i], cfg.dropout_rate, rng);
        in_ch = cfg.filters[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t out_ch = decoder_out_channels(cfg, i);
        m.decoder_blocks[i] = ResidualBlockParams::init(in_ch, out_ch, cfg.kernel_size,
                                                        cfg.dilations[i], cfg.dropout_rate, rng);
        in_ch = out_ch;
    }
    m.output_projection = ConvParams::init(1, in_ch, 1, 1, rng);
    return m;
}

struct TaeForwardCache {
    std::array<ResidualBlockCache, 3> encoder, decoder;
    Tensor1C decoder_out; // input to the output projection
};

inline Tensor1C tae_forward_window(const TaeModel& m, const Tensor1C& x, bool training,
                                   std::uint64_t seed, TaeForwardCache* cache = nullptr) {
    if (x.channels != 1 || x.length != m.config.window_length)
        throw ShapeError("tae_forward: window must be 1 x " +
                         std::to_string(m.config.window_length));
    Tensor1C t = x;
    for (std::size_t i = 0; i < 3; ++i)
        t = residual_block_forward(t, m.encoder_blocks[i], training, derive_seed(seed, 16 + i),
                                   cache ? &cache->encoder[i] : nullptr);
    t = avg_pool2(t);   // latent: filters[2] x W/2
    t = upsample2(t);
    for (std::size_t i = 0; i < 3; ++i)
        t = residual_block_forward(t, m.decoder_blocks[i], training, derive_seed(seed, 32 + i),
                                   cache ? &cache->decoder[i] : nullptr);
    if (cache) cache->decoder_out = t;
    return causal_conv(t, m.output_projection);
}

/// Latent/compressed representation (post-pooling encoder output).
inline Tensor1C tae_encode(const TaeModel& m, const Tensor1C& x) {
    Tensor1C t = x;
    for (std::size_t i = 0; i < 3; ++i)
        t = residual_block_forward(t, m.encoder_blocks[i], false, 0);
    return avg_pool2(t);
}

/// Batch forward; rows are windows. Inference mode is deterministic.
inline Matrix tae_forward(const TaeModel& m, const Matrix& batch, bool training = false,
                          std::uint64_t seed = 0) {
    Matrix out(batch.rows, batch.cols);
    for (std::size_t r = 0; r < batch.rows; ++r) {
        Tensor1C w(1, batch.cols);
        std::copy(batch.row(r), batch.row(r) + batch.cols, w.data.begin());
        Tensor1C y = tae_forward_window(m, w, training, derive_seed(seed, r));
        std::copy(y.data.begin(), y.data.end(), out.row(r));
    }
    return out;
}

struct TaeGrads {
    std::vector<ResidualBlockGrads> encoder, decoder;
    ConvGrads output_projection;

    explicit TaeGrads(const TaeModel& m) : output_projection(m.output_projection) {
        for (const auto& b : m.encoder_blocks) encoder.emplace_back(b);
        for (const auto& b : m.decoder_blocks) decoder.emplace_back(b);
    }
};

inline void tae_backward_window(const TaeModel& m, const TaeForwardCache& cache,
                                const Tensor1C& d_out, TaeGrads& grads) {
    Tensor1C d = causal_conv_backward(cache.decoder_out, m.output_projection, d_out,
                                      grads.output_projection);
    for (std::size_t i = 3; i-- > 0;)
        d = residual_block_backward(m.decoder_blocks[i], cache.decoder[i], d, grads.decoder[i]);
    d = upsample2_backward(d);
    d = avg_pool2_backward(d);
    for (std::size_t i = 3; i-- > 0;)
        d = residual_block_backward(m.encoder_blocks[i], cache.encoder[i], d, grads.encoder[i]);
}

// --- parameter registry (deterministic order shared by model and grads) ---

namespace detail {

template <typename ConvT, typename Fn>
void visit_conv(ConvT& c, Fn&& fn) {
    fn(c.v);
    fn(c.g);
    fn(c.bias);
}

template <typename ModelT, typename Fn>
void visit_params(ModelT& m, Fn&& fn) {
    for (auto& b : m.encoder_blocks) {
        visit_conv(b.conv1, fn);
        visit_conv(b.conv2, fn);
        if (b.skip_proj) visit_conv(*b.skip_proj, fn);
    }
    for (auto& b : m.decoder_blocks) {
        visit_conv(b.conv1, fn);
        visit_conv(b.conv2, fn);
        if (b.skip_proj) visit_conv(*b.skip_proj, fn);
    }
    visit_conv(m.output_projection, fn);
}

template <typename Fn>
void visit_grads(TaeGrads& g, Fn&& fn) {
    for (auto& b : g.encoder) {
        visit_conv(b.conv1, fn);
        visit_conv(b.conv2, fn);
        if (b.skip_proj) visit_conv(*b.skip_proj, fn);
    }
    for (auto& b : g.decoder) {
        visit_conv(b.conv1, fn);
        visit_conv(b.conv2, fn);
        if (b.skip_proj) visit_conv(*b.skip_proj, fn);
    }
    visit_conv(g.output_projection, fn);
}

} // namespace detail

inline std::vector<std::span<real>> parameter_tensors(TaeModel& m) {
    std::vector<std::span<real>> out;
    detail::visit_params(m, [&](std::vector<real>& v) { out.emplace_back(v); });
    return out;
}

inline std::vector<std::span<const real>> parameter_tensors(const TaeModel& m) {
    std::vector<std::span<const real>> out;
    detail::visit_params(m, [&](const std::vector<real>& v) { out.emplace_back(v); });
    return out;
}

inline std::vector<std::span<real>> gradient_tensors(TaeGrads& g) {
    std::vector<std::span<real>> out;
    detail::visit_grads(g, [&](std::vector<real>& v) { out.emplace_back(v); });
    return out;
}

inline std::size_t parameter_count(const TaeModel& m) {
    std::size_t n = 0;
    for (auto s : parameter_tensors(m)) n += s.size();
    return n;
}

inline std::vector<real> flatten_parameters(const TaeModel& m) {
    std::vector<real> out;
    out.reserve(parameter_count(m));
    for (auto s : parameter_tensors(m)) out.insert(out.end(), s.begin(), s.end());
    return out;
}

inline void unflatten_parameters(TaeModel& m, std::span<const real> flat) {
    std::size_t off = 0;
    for (auto s : parameter_tensors(m)) {
        if (off + s.size() > flat.size()) throw ShapeError("unflatten_parameters: size mismatch");
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + s.size()), s.begin());
        off += s.size();
    }
    if (off != flat.size()) throw ShapeError("unflatten_parameters: size mismatch");
}

// --- training ---

struct TrainReport {
    std::vector<real> train_loss;
    std::vector<real> val_loss;
    real wall_time_seconds = real(0);
};

/// Trains on shuffled mini-batches with Adam. Both splits must contain only
/// normal (non-EV) windows and be disjoint at the consumer level; that is the
/// caller's contract. Fully deterministic for a fixed config seed.
inline std::pair<TaeModel, TrainReport> train_tae(const Matrix& train_windows,
                                                  const Matrix& val_windows,
                                                  const TaeConfig& cfg) {
    validate(cfg);
    if (train_windows.rows == 0) throw DataError("train_tae: empty training set");
    if (train_windows.cols != cfg.window_length)
        throw ShapeError("train_tae: window length mismatch");
    if (val_windows.rows > 0 && val_windows.cols != cfg.window_length)
        throw ShapeError("train_tae: validation window length mismatch");

    const auto t0 = std::chrono::steady_clock::now();
    TaeModel model = init_tae(cfg);
    TrainReport report;

    std::vector<AdamState> opt;
    for (auto s : parameter_tensors(model))
        opt.push_back(AdamState::for_size(s.size(), cfg.learning_rate));

    auto shuffle_rng = make_rng(derive_seed(cfg.seed, 0x5f1e));
    std::vector<std::size_t> order(train_windows.rows);
    std::iota(order.begin(), order.end(), std::size_t(0));

    SdtwWorkspace sdtw_ws;
    std::uint64_t dropout_counter = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        real epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t bs = std::min(cfg.batch_size, order.size() - start);
            Matrix xb(bs, cfg.window_length);
            for (std::size_t r = 0; r < bs; ++r)
                std::copy(train_windows.row(order[start + r]),
                          train_windows.row(order[start + r]) + cfg.window_length, xb.row(r));

            std::vector<TaeForwardCache> caches(bs);
            Matrix xhat(bs, cfg.window_length);
            std::vector<std::uint64_t> seeds(bs);
            for (std::size_t r = 0; r < bs; ++r) {
                seeds[r] = derive_seed(cfg.seed, 0xd0 + dropout_counter++);
                Tensor1C w(1, cfg.window_length);
                std::copy(xb.row(r), xb.row(r) + cfg.window_length, w.data.begin());
                Tensor1C y = tae_forward_window(model, w, true, seeds[r], &caches[r]);
                std::copy(y.data.begin(), y.data.end(), xhat.row(r));
            }

            Matrix dloss;
            const real loss =
                combined_loss(xb, xhat, cfg.loss_weights, cfg.gamma, &dloss, &sdtw_ws);
            if (!std::isfinite(loss))
                throw NumericError("training diverged (non-finite loss) at epoch " +
                                   std::to_string(epoch + 1));
            epoch_loss += loss * real(bs);

            TaeGrads grads(model);
            for (std::size_t r = 0; r < bs; ++r) {
                Tensor1C d(1, cfg.window_length);
                std::copy(dloss.row(r), dloss.row(r) + cfg.window_length, d.data.begin());
                tae_backward_window(model, caches[r], d, grads);
            }

            auto params = parameter_tensors(model);
            auto gsp = gradient_tensors(grads);
            for (std::size_t i = 0; i < params.size(); ++i)
                adam_step(params[i], std::span<const real>(gsp[i].data(), gsp[i].size()), opt[i]);
        }
        report.train_loss.push_back(epoch_loss / real(train_windows.rows));

        if (val_windows.rows > 0) {
            Matrix vhat = tae_forward(model, val_windows, false, 0);
            report.val_loss.push_back(
                combined_loss(val_windows, vhat, cfg.loss_weights, cfg.gamma, nullptr, &sdtw_ws));
        }
    }

    report.wall_time_seconds = std::chrono::duration<real>(
        std::chrono::steady_clock::now() - t0).count();
    return {std::move(model), std::move(report)};
}

} // namespace evdetect
