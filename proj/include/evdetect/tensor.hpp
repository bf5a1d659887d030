#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "evdetect/common.hpp"

namespace evdetect {

/// A single sequence laid out as (channels x time-steps), row-major.
struct Tensor1C {
    std::size_t channels = 1;
    std::size_t length = 0;
    std::vector<real> data; // size = channels * length

    Tensor1C() = default;
    Tensor1C(std::size_t c, std::size_t l) : channels(c), length(l), data(c * l, real(0)) {}

    static Tensor1C zeros(std::size_t c, std::size_t l) { return Tensor1C(c, l); }

    real& at(std::size_t c, std::size_t t) { return data[c * length + t]; }
    real at(std::size_t c, std::size_t t) const { return data[c * length + t]; }

    real* row(std::size_t c) { return data.data() + c * length; }
    const real* row(std::size_t c) const { return data.data() + c * length; }

    std::size_t size() const { return data.size(); }
};

inline bool all_finite(const std::vector<real>& v) {
    for (real x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_finite(const Tensor1C& t, const std::string& what) {
    if (!all_finite(t.data)) throw NumericError(what + ": non-finite values");
}

/// Dense row-major matrix; rows are fixed-length subsequences in batches.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<real> data; // size = rows * cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, real(0)) {}

    real& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    real at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    real* row(std::size_t r) { return data.data() + r * cols; }
    const real* row(std::size_t r) const { return data.data() + r * cols; }
};

} // namespace evdetect
