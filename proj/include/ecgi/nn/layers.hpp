#pragma once

#include "ecgi/error.hpp"
#include "ecgi/mat.hpp"
#include "ecgi/rng.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace ecgi::nn {

inline constexpr std::size_t kClasses = 9; // output width; index 0 stays unused

// ---------------------------------------------------------------------------
// Layout for the convolutional stack.
//
// Activations live as [batch, t_pad, channels] row-major with a zero halo of
// pad_lo rows before and (t_pad - t_real - pad_lo) rows after each sample's
// real region. "Same" convolution then becomes one shifted gemm per kernel
// tap, accumulating into the output; the halo invariant (halo rows are zero
// in every activation and gradient buffer) keeps sample boundaries from
// leaking into each other.
// ---------------------------------------------------------------------------
struct ConvShape {
    std::size_t batch = 0;
    std::size_t t_real = 0;
    std::size_t t_pad = 0;
    std::size_t pad_lo = 0;

    std::size_t rows() const { return batch * t_pad; }
    std::size_t real_row(std::size_t b, std::size_t t) const { return b * t_pad + pad_lo + t; }
};

template <typename T>
void zero_halos(Mat<T>& x, const ConvShape& shape) {
    const std::size_t pad_hi_start = shape.pad_lo + shape.t_real;
    for (std::size_t b = 0; b < shape.batch; ++b) {
        T* base = x.row(b * shape.t_pad);
        std::fill(base, base + shape.pad_lo * x.cols(), T(0));
        std::fill(base + pad_hi_start * x.cols(), base + shape.t_pad * x.cols(), T(0));
    }
}

// ---------------------------------------------------------------------------
// Adam state for one parameter tensor.
// ---------------------------------------------------------------------------
struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
class AdamState {
public:
    void step(T* w, const T* g, std::size_t n, const AdamConfig& cfg, std::size_t t) {
        if (m_.size() != n) {
            m_.assign(n, T(0));
            v_.assign(n, T(0));
        }
        const T b1 = static_cast<T>(cfg.beta1);
        const T b2 = static_cast<T>(cfg.beta2);
        const T correction1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
        const T correction2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
        const T lr = static_cast<T>(cfg.lr);
        const T eps = static_cast<T>(cfg.eps);
        for (std::size_t i = 0; i < n; ++i) {
            m_[i] = b1 * m_[i] + (T(1) - b1) * g[i];
            v_[i] = b2 * v_[i] + (T(1) - b2) * g[i] * g[i];
            const T mhat = m_[i] / correction1;
            const T vhat = v_[i] / correction2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }

private:
    std::vector<T> m_, v_;
};

// ---------------------------------------------------------------------------
// 1-D convolution, "same" padding, built-in ReLU option lives outside.
// Weights: [kernel][c_in][c_out] flattened as a (kernel*c_in, c_out) matrix.
// ---------------------------------------------------------------------------
template <typename T>
class Conv1d {
public:
    Conv1d(std::size_t c_in, std::size_t c_out, std::size_t kernel)
        : c_in_(c_in), c_out_(c_out), kernel_(kernel), weight_(kernel * c_in, c_out),
          bias_(1, c_out), dweight_(kernel * c_in, c_out), dbias_(1, c_out) {}

    void init(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(kernel_ * c_in_));
        for (std::size_t i = 0; i < weight_.size(); ++i)
            weight_.data()[i] = static_cast<T>(rng.uniform(-limit, limit));
        bias_.fill(T(0));
    }

    void forward(const Mat<T>& x, Mat<T>& y, const ConvShape& shape) const {
        y.resize(shape.rows(), c_out_);
        y.fill(T(0)); // shifts accumulate
        const std::size_t rows = shape.rows();
        if (c_in_ == 1) {
            // single input channel: the shift gemms degenerate to rank-1
            // updates, so accumulate the sliding window directly
            const std::size_t pad_hi = kernel_ - 1 - shape.pad_lo;
            for (std::size_t row = shape.pad_lo; row + pad_hi < rows; ++row) {
                const T* xwin = x.data() + (row - shape.pad_lo);
                T* yr = y.row(row);
                for (std::size_t r = 0; r < kernel_; ++r) {
                    const T xv = xwin[r];
                    const T* w = weight_.row(r);
                    for (std::size_t f = 0; f < c_out_; ++f) yr[f] += xv * w[f];
                }
            }
            for (std::size_t b = 0; b < shape.batch; ++b)
                for (std::size_t t = 0; t < shape.t_real; ++t) {
                    T* row = y.row(shape.real_row(b, t));
                    for (std::size_t c = 0; c < c_out_; ++c) row[c] += bias_(0, c);
                }
            zero_halos(y, shape);
            return;
        }
        for (std::size_t r = 0; r < kernel_; ++r) {
            // y[row] += x[row + r - pad_lo] * W_r over the valid global range
            const std::ptrdiff_t offset =
                static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(shape.pad_lo);
            const std::size_t y_lo = offset < 0 ? static_cast<std::size_t>(-offset) : 0;
            const std::size_t y_hi = offset > 0 ? rows - static_cast<std::size_t>(offset) : rows;
            gemm(Trans::N, Trans::N, y_hi - y_lo, c_out_, c_in_,
                 x.row(y_lo) + offset * static_cast<std::ptrdiff_t>(c_in_), c_in_,
                 weight_.row(r * c_in_), c_out_, y.row(y_lo), c_out_, /*accumulate=*/true);
        }
        for (std::size_t b = 0; b < shape.batch; ++b)
            for (std::size_t t = 0; t < shape.t_real; ++t) {
                T* row = y.row(shape.real_row(b, t));
                for (std::size_t c = 0; c < c_out_; ++c) row[c] += bias_(0, c);
            }
        zero_halos(y, shape);
    }

    // dY halo rows must be zero. Accumulates nothing; overwrites gradients.
    void backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>* dx, const ConvShape& shape) {
        const std::size_t rows = shape.rows();
        if (c_in_ == 1) {
            // stream dY once, accumulating the sliding window into the
            // kernel-resident gradient block
            dweight_.fill(T(0));
            const std::size_t pad_hi = kernel_ - 1 - shape.pad_lo;
            for (std::size_t row = shape.pad_lo; row + pad_hi < rows; ++row) {
                const T* dyr = dy.row(row);
                const T* xwin = x.data() + (row - shape.pad_lo);
                for (std::size_t r = 0; r < kernel_; ++r) {
                    const T xv = xwin[r];
                    T* acc = dweight_.row(r);
                    for (std::size_t f = 0; f < c_out_; ++f) acc[f] += xv * dyr[f];
                }
            }
        } else {
            for (std::size_t r = 0; r < kernel_; ++r) {
                const std::ptrdiff_t offset =
                    static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(shape.pad_lo);
                const std::size_t y_lo = offset < 0 ? static_cast<std::size_t>(-offset) : 0;
                const std::size_t y_hi =
                    offset > 0 ? rows - static_cast<std::size_t>(offset) : rows;
                // dW_r = X_shifted^T dY ; halo dY rows are zero so full ranges are safe
                gemm(Trans::T, Trans::N, c_in_, c_out_, y_hi - y_lo,
                     x.row(y_lo) + offset * static_cast<std::ptrdiff_t>(c_in_), c_in_,
                     dy.row(y_lo), c_out_, dweight_.row(r * c_in_), c_out_,
                     /*accumulate=*/false);
            }
        }
        dbias_.fill(T(0));
        for (std::size_t row = 0; row < rows; ++row) {
            const T* d = dy.row(row);
            for (std::size_t c = 0; c < c_out_; ++c) dbias_(0, c) += d[c];
        }
        if (dx) {
            dx->resize(rows, c_in_);
            dx->fill(T(0)); // shifts accumulate
            for (std::size_t r = 0; r < kernel_; ++r) {
                // dX[row] += dY[row - (r - pad_lo)] W_r^T
                const std::ptrdiff_t offset =
                    static_cast<std::ptrdiff_t>(shape.pad_lo) - static_cast<std::ptrdiff_t>(r);
                const std::size_t x_lo = offset < 0 ? static_cast<std::size_t>(-offset) : 0;
                const std::size_t x_hi = offset > 0 ? rows - static_cast<std::size_t>(offset) : rows;
                gemm(Trans::N, Trans::T, x_hi - x_lo, c_in_, c_out_,
                     dy.row(x_lo) + offset * static_cast<std::ptrdiff_t>(c_out_), c_out_,
                     weight_.row(r * c_in_), c_out_, dx->row(x_lo), c_in_, /*accumulate=*/true);
            }
            zero_halos(*dx, shape);
        }
    }

    void update(const AdamConfig& cfg, std::size_t t) {
        opt_w_.step(weight_.data(), dweight_.data(), weight_.size(), cfg, t);
        opt_b_.step(bias_.data(), dbias_.data(), bias_.size(), cfg, t);
    }

    Mat<T>& weight() { return weight_; }
    Mat<T>& bias() { return bias_; }
    const Mat<T>& weight() const { return weight_; }
    const Mat<T>& bias() const { return bias_; }
    const Mat<T>& dweight() const { return dweight_; }
    const Mat<T>& dbias() const { return dbias_; }
    std::size_t c_in() const { return c_in_; }
    std::size_t c_out() const { return c_out_; }
    std::size_t kernel() const { return kernel_; }

private:
    std::size_t c_in_, c_out_, kernel_;
    Mat<T> weight_, bias_, dweight_, dbias_;
    AdamState<T> opt_w_, opt_b_;
};

// ---------------------------------------------------------------------------
// Batch normalization over channels: statistics across batch x real time.
// Keras-style defaults (momentum 0.99, eps 1e-3). Halo rows are skipped so
// they stay zero.
// ---------------------------------------------------------------------------
template <typename T>
class BatchNorm1d {
public:
    explicit BatchNorm1d(std::size_t channels)
        : c_(channels), gamma_(1, channels), beta_(1, channels), dgamma_(1, channels),
          dbeta_(1, channels), running_mean_(1, channels), running_var_(1, channels) {
        gamma_.fill(T(1));
        running_var_.fill(T(1));
    }

    void forward(const Mat<T>& x, Mat<T>& y, const ConvShape& shape, bool training) {
        y.resize(x.rows(), c_);
        const auto n = static_cast<T>(shape.batch * shape.t_real);
        if (training) {
            mean_.assign(c_, T(0));
            var_.assign(c_, T(0));
            for (std::size_t b = 0; b < shape.batch; ++b)
                for (std::size_t t = 0; t < shape.t_real; ++t) {
                    const T* row = x.row(shape.real_row(b, t));
                    for (std::size_t c = 0; c < c_; ++c) {
                        mean_[c] += row[c];
                        var_[c] += row[c] * row[c];
                    }
                }
            for (std::size_t c = 0; c < c_; ++c) {
                mean_[c] /= n;
                var_[c] = std::max(T(0), var_[c] / n - mean_[c] * mean_[c]);
            }
            for (std::size_t c = 0; c < c_; ++c) {
                running_mean_(0, c) = static_cast<T>(kMomentum) * running_mean_(0, c) +
                                      static_cast<T>(1 - kMomentum) * mean_[c];
                running_var_(0, c) = static_cast<T>(kMomentum) * running_var_(0, c) +
                                     static_cast<T>(1 - kMomentum) * var_[c];
            }
            inv_std_.resize(c_);
            for (std::size_t c = 0; c < c_; ++c)
                inv_std_[c] = T(1) / std::sqrt(var_[c] + static_cast<T>(kEps));
            xhat_.resize(x.rows(), c_);
            xhat_.fill(T(0));
            for (std::size_t b = 0; b < shape.batch; ++b)
                for (std::size_t t = 0; t < shape.t_real; ++t) {
                    const std::size_t r = shape.real_row(b, t);
                    const T* xr = x.row(r);
                    T* xh = xhat_.row(r);
                    T* yr = y.row(r);
                    for (std::size_t c = 0; c < c_; ++c) {
                        xh[c] = (xr[c] - mean_[c]) * inv_std_[c];
                        yr[c] = gamma_(0, c) * xh[c] + beta_(0, c);
                    }
                }
            zero_halos(y, shape);
        } else {
            y.fill(T(0));
            std::vector<T> scale(c_), shift(c_);
            for (std::size_t c = 0; c < c_; ++c) {
                scale[c] = gamma_(0, c) / std::sqrt(running_var_(0, c) + static_cast<T>(kEps));
                shift[c] = beta_(0, c) - scale[c] * running_mean_(0, c);
            }
            for (std::size_t b = 0; b < shape.batch; ++b)
                for (std::size_t t = 0; t < shape.t_real; ++t) {
                    const std::size_t r = shape.real_row(b, t);
                    const T* xr = x.row(r);
                    T* yr = y.row(r);
                    for (std::size_t c = 0; c < c_; ++c) yr[c] = scale[c] * xr[c] + shift[c];
                }
        }
    }

    void backward(const Mat<T>& dy, Mat<T>& dx, const ConvShape& shape) {
        const auto n = static_cast<T>(shape.batch * shape.t_real);
        dgamma_.fill(T(0));
        dbeta_.fill(T(0));
        std::vector<T> sum_dy(c_, T(0)), sum_dy_xhat(c_, T(0));
        for (std::size_t b = 0; b < shape.batch; ++b)
            for (std::size_t t = 0; t < shape.t_real; ++t) {
                const std::size_t r = shape.real_row(b, t);
                const T* d = dy.row(r);
                const T* xh = xhat_.row(r);
                for (std::size_t c = 0; c < c_; ++c) {
                    sum_dy[c] += d[c];
                    sum_dy_xhat[c] += d[c] * xh[c];
                }
            }
        for (std::size_t c = 0; c < c_; ++c) {
            dgamma_(0, c) = sum_dy_xhat[c];
            dbeta_(0, c) = sum_dy[c];
        }
        dx.resize(dy.rows(), c_);
        dx.fill(T(0));
        for (std::size_t b = 0; b < shape.batch; ++b)
            for (std::size_t t = 0; t < shape.t_real; ++t) {
                const std::size_t r = shape.real_row(b, t);
                const T* d = dy.row(r);
                const T* xh = xhat_.row(r);
                T* out = dx.row(r);
                for (std::size_t c = 0; c < c_; ++c) {
                    out[c] = gamma_(0, c) * inv_std_[c] *
                             (d[c] - sum_dy[c] / n - xh[c] * sum_dy_xhat[c] / n);
                }
            }
    }

    void update(const AdamConfig& cfg, std::size_t t) {
        opt_g_.step(gamma_.data(), dgamma_.data(), gamma_.size(), cfg, t);
        opt_b_.step(beta_.data(), dbeta_.data(), beta_.size(), cfg, t);
    }

    Mat<T>& gamma() { return gamma_; }
    Mat<T>& beta() { return beta_; }
    const Mat<T>& dgamma() const { return dgamma_; }
    const Mat<T>& dbeta() const { return dbeta_; }
    Mat<T>& running_mean() { return running_mean_; }
    Mat<T>& running_var() { return running_var_; }
    const Mat<T>& gamma() const { return gamma_; }
    const Mat<T>& beta() const { return beta_; }
    const Mat<T>& running_mean() const { return running_mean_; }
    const Mat<T>& running_var() const { return running_var_; }

    static constexpr double kMomentum = 0.99;
    static constexpr double kEps = 1e-3;

private:
    std::size_t c_;
    Mat<T> gamma_, beta_, dgamma_, dbeta_, running_mean_, running_var_;
    std::vector<T> mean_, var_, inv_std_;
    Mat<T> xhat_;
    AdamState<T> opt_g_, opt_b_;
};

// ---------------------------------------------------------------------------
// ReLU (elementwise; halos stay zero through it).
// ---------------------------------------------------------------------------
template <typename T>
struct Relu {
    void forward(const Mat<T>& x, Mat<T>& y) const {
        y.resize(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i)
            y.data()[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
    }
    // dx = dy where y > 0
    void backward(const Mat<T>& y, const Mat<T>& dy, Mat<T>& dx) const {
        dx.resize(dy.rows(), dy.cols());
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx.data()[i] = y.data()[i] > T(0) ? dy.data()[i] : T(0);
    }
};

// ---------------------------------------------------------------------------
// Max pooling over time (size 2, stride 2), padded conv layout in, compact
// [batch, (t_real/2)*channels] out; the flatten is free.
// ---------------------------------------------------------------------------
template <typename T>
class MaxPoolFlatten {
public:
    void forward(const Mat<T>& x, Mat<T>& y, const ConvShape& shape) {
        const std::size_t c = x.cols();
        const std::size_t t_out = shape.t_real / 2;
        y.resize(shape.batch, t_out * c);
        argmax_.assign(shape.batch * t_out * c, 0);
        for (std::size_t b = 0; b < shape.batch; ++b) {
            T* out = y.row(b);
            for (std::size_t t = 0; t < t_out; ++t) {
                const std::size_t r0 = shape.real_row(b, 2 * t);
                const T* a = x.row(r0);
                const T* bb = x.row(r0 + 1);
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const bool first = a[ch] >= bb[ch];
                    out[t * c + ch] = first ? a[ch] : bb[ch];
                    argmax_[(b * t_out + t) * c + ch] = first ? 0 : 1;
                }
            }
        }
    }

    void backward(const Mat<T>& dy, Mat<T>& dx, const ConvShape& shape, std::size_t channels) {
        const std::size_t t_out = shape.t_real / 2;
        dx.resize(shape.rows(), channels);
        dx.fill(T(0));
        for (std::size_t b = 0; b < shape.batch; ++b) {
            const T* d = dy.row(b);
            for (std::size_t t = 0; t < t_out; ++t) {
                const std::size_t r0 = shape.real_row(b, 2 * t);
                for (std::size_t ch = 0; ch < channels; ++ch) {
                    const std::size_t winner = argmax_[(b * t_out + t) * channels + ch];
                    dx(r0 + winner, ch) += d[t * channels + ch];
                }
            }
        }
    }

private:
    std::vector<std::uint8_t> argmax_;
};

// ---------------------------------------------------------------------------
// Dense layer on [batch, features].
// ---------------------------------------------------------------------------
template <typename T>
class Dense {
public:
    Dense(std::size_t in, std::size_t out)
        : in_(in), out_(out), weight_(in, out), bias_(1, out), dweight_(in, out), dbias_(1, out) {}

    void init(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_));
        for (std::size_t i = 0; i < weight_.size(); ++i)
            weight_.data()[i] = static_cast<T>(rng.uniform(-limit, limit));
        bias_.fill(T(0));
    }

    void forward(const Mat<T>& x, Mat<T>& y) const {
        matmul(x, weight_, y);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            T* row = y.row(r);
            for (std::size_t c = 0; c < out_; ++c) row[c] += bias_(0, c);
        }
    }

    void backward(const Mat<T>& x, const Mat<T>& dy, Mat<T>* dx) {
        matmul(x, dy, dweight_, Trans::T, Trans::N);
        dbias_.fill(T(0));
        for (std::size_t r = 0; r < dy.rows(); ++r) {
            const T* row = dy.row(r);
            for (std::size_t c = 0; c < out_; ++c) dbias_(0, c) += row[c];
        }
        if (dx) matmul(dy, weight_, *dx, Trans::N, Trans::T);
    }

    void update(const AdamConfig& cfg, std::size_t t) {
        opt_w_.step(weight_.data(), dweight_.data(), weight_.size(), cfg, t);
        opt_b_.step(bias_.data(), dbias_.data(), bias_.size(), cfg, t);
    }

    Mat<T>& weight() { return weight_; }
    Mat<T>& bias() { return bias_; }
    const Mat<T>& weight() const { return weight_; }
    const Mat<T>& bias() const { return bias_; }
    const Mat<T>& dweight() const { return dweight_; }
    const Mat<T>& dbias() const { return dbias_; }
    std::size_t in() const { return in_; }
    std::size_t out() const { return out_; }

private:
    std::size_t in_, out_;
    Mat<T> weight_, bias_, dweight_, dbias_;
    AdamState<T> opt_w_, opt_b_;
};

// ---------------------------------------------------------------------------
// Softmax + categorical cross-entropy (mean over the batch).
// ---------------------------------------------------------------------------
template <typename T>
struct SoftmaxCrossEntropy {
    // probs out; returns mean loss over rows
    double forward(const Mat<T>& logits, const std::vector<int>& targets, Mat<T>& probs) const {
        probs.resize(logits.rows(), logits.cols());
        double loss = 0;
        for (std::size_t r = 0; r < logits.rows(); ++r) {
            const T* z = logits.row(r);
            T* p = probs.row(r);
            T zmax = z[0];
            for (std::size_t c = 1; c < logits.cols(); ++c) zmax = std::max(zmax, z[c]);
            T sum = T(0);
            for (std::size_t c = 0; c < logits.cols(); ++c) {
                p[c] = std::exp(z[c] - zmax);
                sum += p[c];
            }
            for (std::size_t c = 0; c < logits.cols(); ++c) p[c] /= sum;
            loss -= std::log(static_cast<double>(
                std::max(p[static_cast<std::size_t>(targets[r])], static_cast<T>(1e-12))));
        }
        return loss / static_cast<double>(logits.rows());
    }

    void backward(const Mat<T>& probs, const std::vector<int>& targets, Mat<T>& dlogits) const {
        dlogits = probs;
        const T scale = T(1) / static_cast<T>(probs.rows());
        for (std::size_t r = 0; r < probs.rows(); ++r) {
            T* d = dlogits.row(r);
            for (std::size_t c = 0; c < probs.cols(); ++c) d[c] *= scale;
            d[static_cast<std::size_t>(targets[r])] -= scale;
        }
    }
};

inline void softmax_row(double* z, std::size_t n) {
    double zmax = z[0];
    for (std::size_t c = 1; c < n; ++c) zmax = std::max(zmax, z[c]);
    double sum = 0;
    for (std::size_t c = 0; c < n; ++c) {
        z[c] = std::exp(z[c] - zmax);
        sum += z[c];
    }
    for (std::size_t c = 0; c < n; ++c) z[c] /= sum;
}

} // namespace ecgi::nn
