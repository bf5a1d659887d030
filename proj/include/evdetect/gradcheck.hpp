#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "evdetect/common.hpp"
#include "evdetect/rng.hpp"

namespace evdetect {

struct GradCheckResult {
    real max_relative_error = real(0);
    std::vector<real> per_parameter_errors;
};

struct GradCheckOptions {
    real step = real(1e-5);
    std::size_t max_probes = 0; // 0 = probe every parameter
    std::uint64_t probe_seed = 0;
    // Entries where both gradients sit below this are counted as matching:
    // central differences cannot resolve anything under their own rounding
    // noise (~eps*|f|/2h), e.g. the exactly-zero radial direction of g*v/||v||.
    real noise_floor = real(1e-9);
};

/// Central finite differences against an analytic gradient.
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
inline GradCheckResult grad_check(const std::function<real(std::span<const real>)>& f,
                                  std::span<const real> params,
                                  std::span<const real> analytic_grad,
                                  GradCheckOptions opts = {}) {
    if (params.size() != analytic_grad.size())
        throw ShapeError("grad_check: gradient size mismatch");
    std::vector<real> work(params.begin(), params.end());

    std::vector<std::size_t> probes(params.size());
    std::iota(probes.begin(), probes.end(), std::size_t(0));
    if (opts.max_probes > 0 && opts.max_probes < probes.size()) {
        auto rng = make_rng(opts.probe_seed);
        std::shuffle(probes.begin(), probes.end(), rng);
        probes.resize(opts.max_probes);
        std::sort(probes.begin(), probes.end());
    }

    GradCheckResult result;
    result.per_parameter_errors.reserve(probes.size());
    const real h = opts.step;
    for (std::size_t idx : probes) {
        const real saved = work[idx];
        work[idx] = saved + h;
        const real fp = f(work);
        work[idx] = saved - h;
        const real fm = f(work);
        work[idx] = saved;
        const real numeric = (fp - fm) / (real(2) * h);
        const real a = analytic_grad[idx];
        const real denom = std::max({std::abs(a), std::abs(numeric), real(1e-8)});
        real err = std::abs(a - numeric) / denom;
        if (std::max(std::abs(a), std::abs(numeric)) < opts.noise_floor) err = real(0);
        result.per_parameter_errors.push_back(err);
        result.max_relative_error = std::max(result.max_relative_error, err);
    }
    return result;
}

} // namespace evdetect
