#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/nn/layers.hpp"
#include "ecgi/nn/lstm.hpp"

#include <cstddef>
#include <vector>

namespace ecgi::nn {

inline constexpr std::size_t kKernel = 16;

// ---------------------------------------------------------------------------
// CNN: conv(128,k16,relu) bn conv(32,k16,relu) bn conv(9,k16,relu) maxpool(2)
// flatten dense(512,relu) dense(128,relu) dense(32,relu) dense(9).
// Softmax lives in the loss / caller.
// ---------------------------------------------------------------------------
template <typename T>
class CnnNet {
public:
    CnnNet()
        : conv1_(1, 128, kKernel), bn1_(128), conv2_(128, 32, kKernel), bn2_(32),
          conv3_(32, kClasses, kKernel), d1_((kBeatLength / 2) * kClasses, 512), d2_(512, 128),
          d3_(128, 32), d4_(32, kClasses) {}

    void init(std::uint64_t seed) {
        Rng rng(seed);
        conv1_.init(rng);
        conv2_.init(rng);
        conv3_.init(rng);
        d1_.init(rng);
        d2_.init(rng);
        d3_.init(rng);
        d4_.init(rng);
    }

    // rows: `batch` pointers to 220-sample beats.
    void load_batch(const double* const* rows, std::size_t batch) {
        shape_ = ConvShape{batch, kBeatLength, kBeatLength + kKernel - 1, (kKernel - 1) / 2};
        x_.resize(shape_.rows(), 1); // zero halos included
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < kBeatLength; ++t)
                x_(shape_.real_row(b, t), 0) = static_cast<T>(rows[b][t]);
    }

    const Mat<T>& forward(bool training) {
        conv1_.forward(x_, c1_, shape_);
        relu_.forward(c1_, r1_);
        bn1_.forward(r1_, b1_, shape_, training);
        conv2_.forward(b1_, c2_, shape_);
        relu_.forward(c2_, r2_);
        bn2_.forward(r2_, b2_, shape_, training);
        conv3_.forward(b2_, c3_, shape_);
        relu_.forward(c3_, r3_);
        pool_.forward(r3_, flat_, shape_);
        d1_.forward(flat_, z1_);
        relu_.forward(z1_, a1_);
        d2_.forward(a1_, z2_);
        relu_.forward(z2_, a2_);
        d3_.forward(a2_, z3_);
        relu_.forward(z3_, a3_);
        d4_.forward(a3_, logits_);
        return logits_;
    }

    void backward(const Mat<T>& dlogits) {
        d4_.backward(a3_, dlogits, &da3_);
        relu_.backward(a3_, da3_, dz3_);
        d3_.backward(a2_, dz3_, &da2_);
        relu_.backward(a2_, da2_, dz2_);
        d2_.backward(a1_, dz2_, &da1_);
        relu_.backward(a1_, da1_, dz1_);
        d1_.backward(flat_, dz1_, &dflat_);
        pool_.backward(dflat_, dr3_, shape_, kClasses);
        relu_.backward(r3_, dr3_, dc3_);
        conv3_.backward(b2_, dc3_, &db2_, shape_);
        bn2_.backward(db2_, dr2_, shape_);
        relu_.backward(r2_, dr2_, dc2_);
        conv2_.backward(b1_, dc2_, &db1_, shape_);
        bn1_.backward(db1_, dr1_, shape_);
        relu_.backward(r1_, dr1_, dc1_);
        conv1_.backward(x_, dc1_, nullptr, shape_); // first layer: no input grad
    }

    void update(const AdamConfig& cfg, std::size_t step) {
        conv1_.update(cfg, step);
        bn1_.update(cfg, step);
        conv2_.update(cfg, step);
        bn2_.update(cfg, step);
        conv3_.update(cfg, step);
        d1_.update(cfg, step);
        d2_.update(cfg, step);
        d3_.update(cfg, step);
        d4_.update(cfg, step);
    }

    // Final conv layer activation map for one traced sample: [220 x 9].
    Mat<T> saliency_map() const {
        Mat<T> a(kBeatLength, kClasses);
        for (std::size_t t = 0; t < kBeatLength; ++t)
            for (std::size_t c = 0; c < kClasses; ++c) a(t, c) = r3_(shape_.real_row(0, t), c);
        return a;
    }

    // d(logit class_id) / d(final conv activation map), head layers only.
    Mat<T> saliency_grad(int class_id) {
        Mat<T> dlogits(logits_.rows(), kClasses);
        for (std::size_t b = 0; b < dlogits.rows(); ++b)
            dlogits(b, static_cast<std::size_t>(class_id)) = T(1);
        d4_.backward(a3_, dlogits, &da3_);
        relu_.backward(a3_, da3_, dz3_);
        d3_.backward(a2_, dz3_, &da2_);
        relu_.backward(a2_, da2_, dz2_);
        d2_.backward(a1_, dz2_, &da1_);
        relu_.backward(a1_, da1_, dz1_);
        d1_.backward(flat_, dz1_, &dflat_);
        pool_.backward(dflat_, dr3_, shape_, kClasses);
        Mat<T> grad(kBeatLength, kClasses);
        for (std::size_t t = 0; t < kBeatLength; ++t)
            for (std::size_t c = 0; c < kClasses; ++c) grad(t, c) = dr3_(shape_.real_row(0, t), c);
        return grad;
    }

    const Mat<T>& logits() const { return logits_; }

    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn("conv1.w", conv1_.weight());
        fn("conv1.b", conv1_.bias());
        fn("bn1.gamma", bn1_.gamma());
        fn("bn1.beta", bn1_.beta());
        fn("bn1.mean", bn1_.running_mean());
        fn("bn1.var", bn1_.running_var());
        fn("conv2.w", conv2_.weight());
        fn("conv2.b", conv2_.bias());
        fn("bn2.gamma", bn2_.gamma());
        fn("bn2.beta", bn2_.beta());
        fn("bn2.mean", bn2_.running_mean());
        fn("bn2.var", bn2_.running_var());
        fn("conv3.w", conv3_.weight());
        fn("conv3.b", conv3_.bias());
        fn("dense1.w", d1_.weight());
        fn("dense1.b", d1_.bias());
        fn("dense2.w", d2_.weight());
        fn("dense2.b", d2_.bias());
        fn("dense3.w", d3_.weight());
        fn("dense3.b", d3_.bias());
        fn("dense4.w", d4_.weight());
        fn("dense4.b", d4_.bias());
    }

private:
    Conv1d<T> conv1_;
    BatchNorm1d<T> bn1_;
    Conv1d<T> conv2_;
    BatchNorm1d<T> bn2_;
    Conv1d<T> conv3_;
    Dense<T> d1_, d2_, d3_, d4_;
    Relu<T> relu_;
    MaxPoolFlatten<T> pool_;
    ConvShape shape_;

    Mat<T> x_, c1_, r1_, b1_, c2_, r2_, b2_, c3_, r3_, flat_, z1_, a1_, z2_, a2_, z3_, a3_, logits_;
    Mat<T> da3_, dz3_, da2_, dz2_, da1_, dz1_, dflat_, dr3_, dc3_, db2_, dr2_, dc2_, db1_, dr1_, dc1_;
};

// ---------------------------------------------------------------------------
// LSTM: lstm(128, full sequence) lstm(9, full sequence) maxpool(2 over time)
// flatten dense(512,relu) dense(128,relu) dense(32,relu) dense(9).
// ---------------------------------------------------------------------------
template <typename T>
class LstmNet {
public:
    LstmNet()
        : lstm1_(1, 128), lstm2_(128, kClasses), d1_((kBeatLength / 2) * kClasses, 512),
          d2_(512, 128), d3_(128, 32), d4_(32, kClasses) {}

    void init(std::uint64_t seed) {
        Rng rng(seed);
        lstm1_.init(rng);
        lstm2_.init(rng);
        d1_.init(rng);
        d2_.init(rng);
        d3_.init(rng);
        d4_.init(rng);
    }

    void load_batch(const double* const* rows, std::size_t batch) {
        batch_ = batch;
        x_.resize(kBeatLength * batch, 1); // time-major [t*batch + b]
        for (std::size_t t = 0; t < kBeatLength; ++t)
            for (std::size_t b = 0; b < batch; ++b)
                x_(t * batch + b, 0) = static_cast<T>(rows[b][t]);
    }

    const Mat<T>& forward(bool) {
        lstm1_.forward(x_, h1_, kBeatLength, batch_);
        lstm2_.forward(h1_, h2_, kBeatLength, batch_);
        pool_.forward(h2_, flat_, kBeatLength, batch_);
        d1_.forward(flat_, z1_);
        relu_.forward(z1_, a1_);
        d2_.forward(a1_, z2_);
        relu_.forward(z2_, a2_);
        d3_.forward(a2_, z3_);
        relu_.forward(z3_, a3_);
        d4_.forward(a3_, logits_);
        return logits_;
    }

    void backward(const Mat<T>& dlogits) {
        d4_.backward(a3_, dlogits, &da3_);
        relu_.backward(a3_, da3_, dz3_);
        d3_.backward(a2_, dz3_, &da2_);
        relu_.backward(a2_, da2_, dz2_);
        d2_.backward(a1_, dz2_, &da1_);
        relu_.backward(a1_, da1_, dz1_);
        d1_.backward(flat_, dz1_, &dflat_);
        pool_.backward(dflat_, dh2_, kBeatLength, batch_, kClasses);
        lstm2_.backward(h1_, h2_, dh2_, &dh1_, kBeatLength, batch_);
        lstm1_.backward(x_, h1_, dh1_, nullptr, kBeatLength, batch_);
    }

    void update(const AdamConfig& cfg, std::size_t step) {
        lstm1_.update(cfg, step);
        lstm2_.update(cfg, step);
        d1_.update(cfg, step);
        d2_.update(cfg, step);
        d3_.update(cfg, step);
        d4_.update(cfg, step);
    }

    // Final LSTM layer output for one traced sample: [220 x 9].
    Mat<T> saliency_map() const {
        Mat<T> a(kBeatLength, kClasses);
        for (std::size_t t = 0; t < kBeatLength; ++t)
            for (std::size_t c = 0; c < kClasses; ++c) a(t, c) = h2_(t * batch_ + 0, c);
        return a;
    }

    Mat<T> saliency_grad(int class_id) {
        Mat<T> dlogits(logits_.rows(), kClasses);
        for (std::size_t b = 0; b < dlogits.rows(); ++b)
            dlogits(b, static_cast<std::size_t>(class_id)) = T(1);
        d4_.backward(a3_, dlogits, &da3_);
        relu_.backward(a3_, da3_, dz3_);
        d3_.backward(a2_, dz3_, &da2_);
        relu_.backward(a2_, da2_, dz2_);
        d2_.backward(a1_, dz2_, &da1_);
        relu_.backward(a1_, da1_, dz1_);
        d1_.backward(flat_, dz1_, &dflat_);
        pool_.backward(dflat_, dh2_, kBeatLength, batch_, kClasses);
        Mat<T> grad(kBeatLength, kClasses);
        for (std::size_t t = 0; t < kBeatLength; ++t)
            for (std::size_t c = 0; c < kClasses; ++c) grad(t, c) = dh2_(t * batch_ + 0, c);
        return grad;
    }

    const Mat<T>& logits() const { return logits_; }

    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn("lstm1.wx", lstm1_.wx());
        fn("lstm1.wh", lstm1_.wh());
        fn("lstm1.b", lstm1_.bias());
        fn("lstm2.wx", lstm2_.wx());
        fn("lstm2.wh", lstm2_.wh());
        fn("lstm2.b", lstm2_.bias());
        fn("dense1.w", d1_.weight());
        fn("dense1.b", d1_.bias());
        fn("dense2.w", d2_.weight());
        fn("dense2.b", d2_.bias());
        fn("dense3.w", d3_.weight());
        fn("dense3.b", d3_.bias());
        fn("dense4.w", d4_.weight());
        fn("dense4.b", d4_.bias());
    }

private:
    Lstm<T> lstm1_, lstm2_;
    Dense<T> d1_, d2_, d3_, d4_;
    Relu<T> relu_;
    SequencePoolFlatten<T> pool_;
    std::size_t batch_ = 0;

    Mat<T> x_, h1_, h2_, flat_, z1_, a1_, z2_, a2_, z3_, a3_, logits_;
    Mat<T> da3_, dz3_, da2_, dz2_, da1_, dz1_, dflat_, dh2_, dh1_;
};

// ---------------------------------------------------------------------------
// MLP: one hidden layer of 100 relu units over the raw 220 samples.
// ---------------------------------------------------------------------------
template <typename T>
class MlpNet {
public:
    MlpNet() : d1_(kBeatLength, 100), d2_(100, kClasses) {}

    void init(std::uint64_t seed) {
        Rng rng(seed);
        d1_.init(rng);
        d2_.init(rng);
    }

    void load_batch(const double* const* rows, std::size_t batch) {
        x_.resize(batch, kBeatLength);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t t = 0; t < kBeatLength; ++t) x_(b, t) = static_cast<T>(rows[b][t]);
    }

    const Mat<T>& forward(bool) {
        d1_.forward(x_, z1_);
        relu_.forward(z1_, a1_);
        d2_.forward(a1_, logits_);
        return logits_;
    }

    void backward(const Mat<T>& dlogits) {
        d2_.backward(a1_, dlogits, &da1_);
        relu_.backward(a1_, da1_, dz1_);
        d1_.backward(x_, dz1_, nullptr);
    }

    void update(const AdamConfig& cfg, std::size_t step) {
        d1_.update(cfg, step);
        d2_.update(cfg, step);
    }

    const Mat<T>& logits() const { return logits_; }

    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn("dense1.w", d1_.weight());
        fn("dense1.b", d1_.bias());
        fn("dense2.w", d2_.weight());
        fn("dense2.b", d2_.bias());
    }

private:
    Dense<T> d1_, d2_;
    Relu<T> relu_;
    Mat<T> x_, z1_, a1_, logits_;
    Mat<T> da1_, dz1_;
};

} // namespace ecgi::nn
