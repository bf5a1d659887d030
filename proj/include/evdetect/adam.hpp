#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "evdetect/common.hpp"

namespace evdetect {

/// Per-parameter-tensor Adam accumulators.
struct AdamState {
    std::vector<real> first_moment;
    std::vector<real> second_moment;
    std::int64_t step_count = 0;
    real learning_rate = real(1e-3);
    real beta1 = real(0.9);
    real beta2 = real(0.999);
    real epsilon = real(1e-8);

    static AdamState for_size(std::size_t n, real lr = real(1e-3)) {
        AdamState s;
        s.first_moment.assign(n, real(0));
        s.second_moment.assign(n, real(0));
        s.learning_rate = lr;
        return s;
    }
};

/// Bias-corrected adaptive-moment update, in place.
inline void adam_step(std::span<real> params, std::span<const real> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw ShapeError("adam_step: size mismatch");
    state.step_count += 1;
    const real b1 = state.beta1, b2 = state.beta2;
    const real corr1 = real(1) - std::pow(b1, real(state.step_count));
    const real corr2 = real(1) - std::pow(b2, real(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        real& m = state.first_moment[i];
        real& v = state.second_moment[i];
        const real gi = grads[i];
        m = b1 * m + (real(1) - b1) * gi;
        v = b2 * v + (real(1) - b2) * gi * gi;
        const real mhat = m / corr1;
        const real vhat = v / corr2;
        params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

} // namespace evdetect
