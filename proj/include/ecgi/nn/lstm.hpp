#pragma once

#include "ecgi/mat.hpp"
#include "ecgi/nn/activations.hpp"
#include "ecgi/nn/layers.hpp"
#include "ecgi/rng.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace ecgi::nn {

// ---------------------------------------------------------------------------
// LSTM over a full sequence, returning every step's hidden state.
//
// Buffers are time-major [t * batch + b, ...] so each step is one contiguous
// block and the per-step recurrences are plain gemms. Gate order i, f, g, o;
// the forget gate bias starts at one. The input-to-gate product is hoisted
// into a single gemm over all timesteps, as are the weight gradients.
// ---------------------------------------------------------------------------
template <typename T>
class Lstm {
public:
    Lstm(std::size_t c_in, std::size_t units)
        : c_in_(c_in), units_(units), wx_(c_in, 4 * units), wh_(units, 4 * units),
          bias_(1, 4 * units), dwx_(c_in, 4 * units), dwh_(units, 4 * units),
          dbias_(1, 4 * units) {}

    void init(Rng& rng) {
        const double lim_x = std::sqrt(6.0 / static_cast<double>(c_in_ + units_));
        const double lim_h = std::sqrt(6.0 / static_cast<double>(2 * units_));
        for (std::size_t i = 0; i < wx_.size(); ++i)
            wx_.data()[i] = static_cast<T>(rng.uniform(-lim_x, lim_x));
        for (std::size_t i = 0; i < wh_.size(); ++i)
            wh_.data()[i] = static_cast<T>(rng.uniform(-lim_h, lim_h));
        bias_.fill(T(0));
        for (std::size_t u = 0; u < units_; ++u) bias_(0, units_ + u) = T(1); // forget gate
    }

    // x: [t_steps*batch, c_in] time-major; h out: [t_steps*batch, units]
    void forward(const Mat<T>& x, Mat<T>& h, std::size_t t_steps, std::size_t batch) {
        const std::size_t g4 = 4 * units_;
        h.resize(t_steps * batch, units_);
        gates_.resize(t_steps * batch, g4);
        cell_.resize(t_steps * batch, units_);
        tanh_cell_.resize(t_steps * batch, units_);

        matmul(x, wx_, gates_); // input contribution for every step at once
        const auto wh_packed = prepack_b(Trans::N, wh_.data(), g4, units_, g4);

        for (std::size_t t = 0; t < t_steps; ++t) {
            T* g = gates_.row(t * batch);
            // recurrent contribution and bias
            if (t > 0)
                gemm_prepacked(batch, h.row((t - 1) * batch), units_, wh_packed, g, g4,
                               /*accumulate=*/true);
            parallel_for(batch, [&](std::size_t b_lo, std::size_t b_hi) {
            for (std::size_t b = b_lo; b < b_hi; ++b) {
                T* gb = g + b * g4;
                const T* bias = bias_.data();
                for (std::size_t u = 0; u < g4; ++u) gb[u] += bias[u];
                sigmoid_span(gb, units_);                  // input gate
                sigmoid_span(gb + units_, units_);         // forget gate
                tanh_span(gb + 2 * units_, units_);        // candidate
                sigmoid_span(gb + 3 * units_, units_);     // output gate

                const T* c_prev = t > 0 ? cell_.row((t - 1) * batch + b) : nullptr;
                T* c = cell_.row(t * batch + b);
                T* tc = tanh_cell_.row(t * batch + b);
                T* hb = h.row(t * batch + b);
                if (c_prev) {
                    for (std::size_t u = 0; u < units_; ++u)
                        c[u] = gb[u] * gb[2 * units_ + u] + gb[units_ + u] * c_prev[u];
                } else {
                    for (std::size_t u = 0; u < units_; ++u) c[u] = gb[u] * gb[2 * units_ + u];
                }
                for (std::size_t u = 0; u < units_; ++u) tc[u] = c[u];
                tanh_span(tc, units_);
                for (std::size_t u = 0; u < units_; ++u) hb[u] = gb[3 * units_ + u] * tc[u];
            }
            });
        }
    }

    // dh: gradient w.r.t. every hidden state, same layout as h.
    void backward(const Mat<T>& x, const Mat<T>& h, const Mat<T>& dh, Mat<T>* dx,
                  std::size_t t_steps, std::size_t batch) {
        const std::size_t g4 = 4 * units_;
        dgates_.resize(t_steps * batch, g4);
        Mat<T> dh_carry(batch, units_), dc(batch, units_);
        const auto whT_packed = prepack_b(Trans::T, wh_.data(), g4, g4, units_);

        for (std::size_t t = t_steps; t-- > 0;) {
            parallel_for(batch, [&](std::size_t b_lo, std::size_t b_hi) {
            std::vector<T> dh_total(units_);
            for (std::size_t b = b_lo; b < b_hi; ++b) {
                const T* gb = gates_.row(t * batch + b);
                const T* gi = gb;
                const T* gf = gb + units_;
                const T* gg = gb + 2 * units_;
                const T* go = gb + 3 * units_;
                const T* tc = tanh_cell_.row(t * batch + b);
                const T* c_prev = t > 0 ? cell_.row((t - 1) * batch + b) : nullptr;
                const T* dh_in = dh.row(t * batch + b);
                T* carry = dh_carry.row(b);
                T* dcb = dc.row(b);
                T* dg = dgates_.row(t * batch + b);
                T* dt = dh_total.data();
                // unit-stride subloops so each one vectorizes
                for (std::size_t u = 0; u < units_; ++u) dt[u] = dh_in[u] + carry[u];
                for (std::size_t u = 0; u < units_; ++u)
                    dg[3 * units_ + u] = dt[u] * tc[u] * go[u] * (T(1) - go[u]);
                for (std::size_t u = 0; u < units_; ++u)
                    dcb[u] += dt[u] * go[u] * (T(1) - tc[u] * tc[u]);
                for (std::size_t u = 0; u < units_; ++u)
                    dg[u] = dcb[u] * gg[u] * gi[u] * (T(1) - gi[u]);
                for (std::size_t u = 0; u < units_; ++u)
                    dg[2 * units_ + u] = dcb[u] * gi[u] * (T(1) - gg[u] * gg[u]);
                if (c_prev) {
                    for (std::size_t u = 0; u < units_; ++u)
                        dg[units_ + u] = dcb[u] * c_prev[u] * gf[u] * (T(1) - gf[u]);
                } else {
                    for (std::size_t u = 0; u < units_; ++u) dg[units_ + u] = T(0);
                }
                for (std::size_t u = 0; u < units_; ++u) dcb[u] *= gf[u]; // carries to t-1
            }
            });
            if (t > 0)
                gemm_prepacked(batch, dgates_.row(t * batch), g4, whT_packed, dh_carry.data(),
                               units_, /*accumulate=*/false);
        }

        matmul(x, dgates_, dwx_, Trans::T, Trans::N);
        if (t_steps > 1) {
            dwh_.fill(T(0));
            gemm(Trans::T, Trans::N, units_, g4, (t_steps - 1) * batch, h.data(), units_,
                 dgates_.row(batch), g4, dwh_.data(), g4, /*accumulate=*/false);
        } else {
            dwh_.fill(T(0));
        }
        dbias_.fill(T(0));
        for (std::size_t r = 0; r < dgates_.rows(); ++r) {
            const T* row = dgates_.row(r);
            for (std::size_t u = 0; u < g4; ++u) dbias_(0, u) += row[u];
        }
        if (dx) matmul(dgates_, wx_, *dx, Trans::N, Trans::T);
    }

    void update(const AdamConfig& cfg, std::size_t t) {
        opt_wx_.step(wx_.data(), dwx_.data(), wx_.size(), cfg, t);
        opt_wh_.step(wh_.data(), dwh_.data(), wh_.size(), cfg, t);
        opt_b_.step(bias_.data(), dbias_.data(), bias_.size(), cfg, t);
    }

    Mat<T>& wx() { return wx_; }
    Mat<T>& wh() { return wh_; }
    Mat<T>& bias() { return bias_; }
    const Mat<T>& wx() const { return wx_; }
    const Mat<T>& wh() const { return wh_; }
    const Mat<T>& bias() const { return bias_; }
    const Mat<T>& dwx() const { return dwx_; }
    const Mat<T>& dwh() const { return dwh_; }
    const Mat<T>& dbias() const { return dbias_; }
    std::size_t units() const { return units_; }
    std::size_t c_in() const { return c_in_; }

private:
    std::size_t c_in_, units_;
    Mat<T> wx_, wh_, bias_, dwx_, dwh_, dbias_;
    Mat<T> gates_, cell_, tanh_cell_, dgates_;
    AdamState<T> opt_wx_, opt_wh_, opt_b_;
};

// ---------------------------------------------------------------------------
// Max pool (size 2, stride 2) over the time axis of a time-major sequence,
// flattened per sample to [batch, (t/2)*units] in (time, unit) order.
// ---------------------------------------------------------------------------
template <typename T>
class SequencePoolFlatten {
public:
    void forward(const Mat<T>& h, Mat<T>& y, std::size_t t_steps, std::size_t batch) {
        const std::size_t u = h.cols();
        const std::size_t t_out = t_steps / 2;
        y.resize(batch, t_out * u);
        argmax_.assign(batch * t_out * u, 0);
        for (std::size_t t = 0; t < t_out; ++t)
            for (std::size_t b = 0; b < batch; ++b) {
                const T* a = h.row((2 * t) * batch + b);
                const T* c = h.row((2 * t + 1) * batch + b);
                T* out = y.row(b) + t * u;
                for (std::size_t k = 0; k < u; ++k) {
                    const bool first = a[k] >= c[k];
                    out[k] = first ? a[k] : c[k];
                    argmax_[(b * t_out + t) * u + k] = first ? 0 : 1;
                }
            }
    }

    void backward(const Mat<T>& dy, Mat<T>& dh, std::size_t t_steps, std::size_t batch,
                  std::size_t units) {
        const std::size_t t_out = t_steps / 2;
        dh.resize(t_steps * batch, units);
        dh.fill(T(0));
        for (std::size_t t = 0; t < t_out; ++t)
            for (std::size_t b = 0; b < batch; ++b) {
                const T* d = dy.row(b) + t * units;
                for (std::size_t k = 0; k < units; ++k) {
                    const std::size_t winner = argmax_[(b * t_out + t) * units + k];
                    dh((2 * t + winner) * batch + b, k) += d[k];
                }
            }
    }

private:
    std::vector<std::uint8_t> argmax_;
};

} // namespace ecgi::nn
