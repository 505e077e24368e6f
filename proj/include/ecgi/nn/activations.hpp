#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace ecgi::nn {

// Vector-friendly sigmoid/tanh. The float path uses a polynomial exp2
// (|rel err| ~ 1e-7, plenty below training noise) written so the compiler
// vectorizes the whole loop; the double path keeps libm exactly, because the
// finite-difference gradient suite runs in double.

namespace act_detail {

inline float exp_fast(float x) {
    // e^x = 2^(x * log2 e), split into integer and fractional powers; written
    // branch-free with bit_cast so the surrounding loops vectorize
    const float y = std::max(-126.0f, std::min(126.0f, x * 1.44269504088896341f));
    const float shifted = y + 12582912.0f; // 1.5 * 2^23 rounds to integer
    const float n = shifted - 12582912.0f;
    const float f = y - n;
    // degree-5 fit of 2^f on [-0.5, 0.5]
    float p = 1.8775767e-3f;
    p = p * f + 8.9893397e-3f;
    p = p * f + 5.5826318e-2f;
    p = p * f + 2.4015361e-1f;
    p = p * f + 6.9315308e-1f;
    p = p * f + 9.9999994e-1f;
    const auto bits = static_cast<std::uint32_t>((static_cast<std::int32_t>(n) + 127) << 23);
    return p * std::bit_cast<float>(bits);
}

} // namespace act_detail

inline void sigmoid_span(float* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0f / (1.0f + act_detail::exp_fast(-v[i]));
}

inline void tanh_span(float* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        v[i] = 2.0f / (1.0f + act_detail::exp_fast(-2.0f * v[i])) - 1.0f;
}

inline void sigmoid_span(double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
}

inline void tanh_span(double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
}

} // namespace ecgi::nn
