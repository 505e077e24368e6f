#include "ecgi/nn/layers.hpp"
#include "ecgi/nn/lstm.hpp"
#include "ecgi/nn/nets.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace ecgi;
using namespace ecgi::nn;

namespace {

constexpr double kStep = 1e-4;
constexpr double kRelTol = 1e-4;
constexpr double kGradFloor = 1e-6;

void fill_random(Mat<double>& m, Rng& rng, double scale = 1.0) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1, 1);
}

// Central finite difference over every element of `param` vs `analytic`.
// `include` masks out structural zeros (the padded-layout halo rows are not
// free variables).
void check_grad(Mat<double>& param, const Mat<double>& analytic,
                const std::function<double()>& objective, const char* what,
                const std::function<bool(std::size_t)>& include = {}) {
    REQUIRE(analytic.rows() == param.rows());
    REQUIRE(analytic.cols() == param.cols());
    for (std::size_t i = 0; i < param.size(); ++i) {
        if (include && !include(i)) continue;
        const double saved = param.data()[i];
        param.data()[i] = saved + kStep;
        const double up = objective();
        param.data()[i] = saved - kStep;
        const double down = objective();
        param.data()[i] = saved;
        const double fd = (up - down) / (2 * kStep);
        const double an = analytic.data()[i];
        if (std::abs(an) > kGradFloor || std::abs(fd) > kGradFloor) {
            const double rel = std::abs(an - fd) / std::max(std::abs(an), std::abs(fd));
            CAPTURE(what);
            CAPTURE(i);
            CAPTURE(an);
            CAPTURE(fd);
            CHECK(rel <= kRelTol);
        }
    }
}

// Mask selecting only real (non-halo) entries of a padded buffer.
std::function<bool(std::size_t)> real_rows_only(const ConvShape& shape, std::size_t cols) {
    return [shape, cols](std::size_t i) {
        const std::size_t row = i / cols;
        const std::size_t t = row % shape.t_pad;
        return t >= shape.pad_lo && t < shape.pad_lo + shape.t_real;
    };
}

double project(const Mat<double>& y, const Mat<double>& w) {
    double s = 0;
    for (std::size_t i = 0; i < std::min(y.size(), w.size()); ++i)
        s += y.data()[i] * w.data()[i];
    return s;
}

} // namespace

TEST_CASE("conv1d gradients match finite differences") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        Rng rng(seed);
        const ConvShape shape{2, 10, 10 + 5 - 1, 2}; // batch 2, T 10, kernel 5
        Conv1d<double> conv(3, 4, 5);
        conv.init(rng);
        Mat<double> x(shape.rows(), 3);
        fill_random(x, rng);
        zero_halos(x, shape);

        Mat<double> proj(shape.rows(), 4);
        fill_random(proj, rng);
        zero_halos(proj, shape); // downstream losses never read halo rows

        Mat<double> y;
        auto objective = [&] {
            conv.forward(x, y, shape);
            return project(y, proj);
        };
        objective();
        Mat<double> dx;
        conv.backward(x, proj, &dx, shape);
        const Mat<double> dw = conv.dweight();
        const Mat<double> db = conv.dbias();

        check_grad(conv.weight(), dw, objective, "conv.weight");
        check_grad(conv.bias(), db, objective, "conv.bias");
        check_grad(x, dx, objective, "conv.input", real_rows_only(shape, 3));
    }
}

TEST_CASE("batchnorm training-mode gradients match finite differences") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        Rng rng(seed);
        const ConvShape shape{3, 6, 6 + 4, 2};
        BatchNorm1d<double> bn(4);
        fill_random(bn.gamma(), rng);
        fill_random(bn.beta(), rng);
        Mat<double> x(shape.rows(), 4);
        fill_random(x, rng);
        zero_halos(x, shape);
        Mat<double> proj(shape.rows(), 4);
        fill_random(proj, rng);
        zero_halos(proj, shape);

        Mat<double> y;
        auto objective = [&] {
            bn.forward(x, y, shape, /*training=*/true);
            return project(y, proj);
        };
        objective();
        Mat<double> dx;
        bn.backward(proj, dx, shape);
        const Mat<double> dgamma = bn.dgamma();
        const Mat<double> dbeta = bn.dbeta();

        check_grad(bn.gamma(), dgamma, objective, "bn.gamma");
        check_grad(bn.beta(), dbeta, objective, "bn.beta");
        check_grad(x, dx, objective, "bn.input", real_rows_only(shape, 4));
    }
}

TEST_CASE("dense gradients match finite differences") {
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        Rng rng(seed);
        Dense<double> dense(7, 5);
        dense.init(rng);
        Mat<double> x(4, 7);
        fill_random(x, rng);
        Mat<double> proj(4, 5);
        fill_random(proj, rng);

        Mat<double> y;
        auto objective = [&] {
            dense.forward(x, y);
            return project(y, proj);
        };
        objective();
        Mat<double> dx;
        dense.backward(x, proj, &dx);
        const Mat<double> dw = dense.dweight();
        const Mat<double> db = dense.dbias();

        check_grad(dense.weight(), dw, objective, "dense.weight");
        check_grad(dense.bias(), db, objective, "dense.bias");
        check_grad(x, dx, objective, "dense.input");
    }
}

TEST_CASE("max pool over padded layout routes gradients to the argmax") {
    for (std::uint64_t seed : {41u, 42u, 43u}) {
        Rng rng(seed);
        const ConvShape shape{2, 8, 8 + 4, 2};
        MaxPoolFlatten<double> pool;
        Mat<double> x(shape.rows(), 3);
        fill_random(x, rng);
        zero_halos(x, shape);
        Mat<double> proj(2, 4 * 3);
        fill_random(proj, rng);

        Mat<double> y;
        auto objective = [&] {
            pool.forward(x, y, shape);
            return project(y, proj);
        };
        objective();
        Mat<double> dx;
        pool.backward(proj, dx, shape, 3);
        check_grad(x, dx, objective, "maxpool.input", real_rows_only(shape, 3));
    }
}

TEST_CASE("sequence pool over time-major layout routes gradients to the argmax") {
    for (std::uint64_t seed : {51u, 52u, 53u}) {
        Rng rng(seed);
        const std::size_t t_steps = 6, batch = 2, units = 3;
        SequencePoolFlatten<double> pool;
        Mat<double> h(t_steps * batch, units);
        fill_random(h, rng);
        Mat<double> proj(batch, (t_steps / 2) * units);
        fill_random(proj, rng);

        Mat<double> y;
        auto objective = [&] {
            pool.forward(h, y, t_steps, batch);
            return project(y, proj);
        };
        objective();
        Mat<double> dh;
        pool.backward(proj, dh, t_steps, batch, units);
        check_grad(h, dh, objective, "seqpool.input");
    }
}

TEST_CASE("lstm gradients match finite differences") {
    for (std::uint64_t seed : {61u, 62u, 63u}) {
        Rng rng(seed);
        const std::size_t t_steps = 5, batch = 2, c_in = 3, units = 4;
        Lstm<double> lstm(c_in, units);
        lstm.init(rng);
        Mat<double> x(t_steps * batch, c_in);
        fill_random(x, rng);
        Mat<double> proj(t_steps * batch, units);
        fill_random(proj, rng);

        Mat<double> h;
        auto objective = [&] {
            lstm.forward(x, h, t_steps, batch);
            return project(h, proj);
        };
        objective();
        Mat<double> dx(t_steps * batch, c_in);
        lstm.backward(x, h, proj, &dx, t_steps, batch);
        const Mat<double> dwx = lstm.dwx();
        const Mat<double> dwh = lstm.dwh();
        const Mat<double> db = lstm.dbias();

        check_grad(lstm.wx(), dwx, objective, "lstm.wx");
        check_grad(lstm.wh(), dwh, objective, "lstm.wh");
        check_grad(lstm.bias(), db, objective, "lstm.bias");
        check_grad(x, dx, objective, "lstm.input");
    }
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
    for (std::uint64_t seed : {71u, 72u, 73u}) {
        Rng rng(seed);
        SoftmaxCrossEntropy<double> loss;
        Mat<double> logits(4, 9);
        fill_random(logits, rng, 2.0);
        std::vector<int> targets = {1, 4, 8, 2};

        Mat<double> probs;
        auto objective = [&] { return loss.forward(logits, targets, probs); };
        objective();
        Mat<double> dlogits;
        loss.backward(probs, targets, dlogits);
        check_grad(logits, dlogits, objective, "softmax-ce.logits");
    }
}

TEST_CASE("a miniature conv net end to end matches finite differences") {
    for (std::uint64_t seed : {81u, 82u, 83u}) {
        Rng rng(seed);
        // conv-bn-relu / conv-relu / pool / dense / softmax-ce: the CNN in miniature
        const ConvShape shape{2, 8, 8 + 5 - 1, 2};
        Conv1d<double> conv1(1, 4, 5), conv2(4, 3, 5);
        BatchNorm1d<double> bn(4);
        Relu<double> relu;
        MaxPoolFlatten<double> pool;
        Dense<double> dense(4 * 3, 5);
        SoftmaxCrossEntropy<double> loss;
        conv1.init(rng);
        conv2.init(rng);
        dense.init(rng);
        fill_random(bn.gamma(), rng);
        fill_random(bn.beta(), rng);

        Mat<double> x(shape.rows(), 1);
        fill_random(x, rng);
        zero_halos(x, shape);
        std::vector<int> targets = {2, 0};

        Mat<double> c1, r1, b1, c2, r2, flat, z, probs;
        auto objective = [&] {
            conv1.forward(x, c1, shape);
            relu.forward(c1, r1);
            bn.forward(r1, b1, shape, true);
            conv2.forward(b1, c2, shape);
            relu.forward(c2, r2);
            pool.forward(r2, flat, shape);
            dense.forward(flat, z);
            return loss.forward(z, targets, probs);
        };
        objective();

        Mat<double> dz, dflat, dr2, dc2, db1, dr1, dc1, dx;
        loss.backward(probs, targets, dz);
        dense.backward(flat, dz, &dflat);
        pool.backward(dflat, dr2, shape, 3);
        relu.backward(r2, dr2, dc2);
        conv2.backward(b1, dc2, &db1, shape);
        bn.backward(db1, dr1, shape);
        relu.backward(r1, dr1, dc1);
        conv1.backward(x, dc1, &dx, shape);

        check_grad(conv1.weight(), Mat<double>(conv1.dweight()), objective, "mini-cnn conv1.w");
        check_grad(bn.gamma(), Mat<double>(bn.dgamma()), objective, "mini-cnn bn.gamma");
        check_grad(conv2.weight(), Mat<double>(conv2.dweight()), objective, "mini-cnn conv2.w");
        check_grad(dense.weight(), Mat<double>(dense.dweight()), objective, "mini-cnn dense.w");
        check_grad(x, dx, objective, "mini-cnn input", real_rows_only(shape, 1));
    }
}

TEST_CASE("a miniature lstm net end to end matches finite differences") {
    for (std::uint64_t seed : {91u, 92u, 93u}) {
        Rng rng(seed);
        const std::size_t t_steps = 6, batch = 2;
        Lstm<double> lstm1(1, 5), lstm2(5, 3);
        SequencePoolFlatten<double> pool;
        Dense<double> dense(3 * 3, 4);
        SoftmaxCrossEntropy<double> loss;
        lstm1.init(rng);
        lstm2.init(rng);
        dense.init(rng);

        Mat<double> x(t_steps * batch, 1);
        fill_random(x, rng);
        std::vector<int> targets = {1, 3};

        Mat<double> h1, h2, flat, z, probs;
        auto objective = [&] {
            lstm1.forward(x, h1, t_steps, batch);
            lstm2.forward(h1, h2, t_steps, batch);
            pool.forward(h2, flat, t_steps, batch);
            dense.forward(flat, z);
            return loss.forward(z, targets, probs);
        };
        objective();

        Mat<double> dz, dflat, dh2, dh1, dx(t_steps * batch, 1);
        loss.backward(probs, targets, dz);
        dense.backward(flat, dz, &dflat);
        pool.backward(dflat, dh2, t_steps, batch, 3);
        lstm2.backward(h1, h2, dh2, &dh1, t_steps, batch);
        lstm1.backward(x, h1, dh1, &dx, t_steps, batch);

        check_grad(lstm1.wx(), Mat<double>(lstm1.dwx()), objective, "mini-lstm lstm1.wx");
        check_grad(lstm1.wh(), Mat<double>(lstm1.dwh()), objective, "mini-lstm lstm1.wh");
        check_grad(lstm2.wx(), Mat<double>(lstm2.dwx()), objective, "mini-lstm lstm2.wx");
        check_grad(dense.weight(), Mat<double>(dense.dweight()), objective, "mini-lstm dense.w");
        check_grad(x, dx, objective, "mini-lstm input");
    }
}

TEST_CASE("adam first step applies the bias-corrected update") {
    AdamConfig cfg;
    AdamState<double> opt;
    double w = 1.0;
    const double g = 0.3;
    opt.step(&w, &g, 1, cfg, 1);
    // t=1: mhat = g, vhat = g^2 -> step = lr * g / (|g| + eps)
    const double expected = 1.0 - cfg.lr * g / (std::abs(g) + cfg.eps);
    CHECK(w == doctest::Approx(expected).epsilon(1e-12));
}
