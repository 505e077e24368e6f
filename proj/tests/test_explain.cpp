#include "ecgi/explain/gradcam.hpp"
#include "ecgi/explain/noise.hpp"
#include "ecgi/explain/pdp.hpp"
#include "ecgi/explain/pfi.hpp"
#include "ecgi/explain/shap.hpp"

#include <doctest.h>

#include <functional>

using namespace ecgi;
using namespace ecgi::explain;

namespace {

// Deterministic stand-in classifier defined by a probability function.
class MockModel : public model::ClassifierModel {
public:
    using Fn = std::function<void(const double*, double*)>; // beat -> 9 probs
    explicit MockModel(Fn fn) : fn_(std::move(fn)) {}

    model::ModelKind kind() const override { return model::ModelKind::NB; }
    bool trained() const override { return true; }
    void fit(const BeatDataset&, const model::TrainConfig&) override {}
    void save(const std::filesystem::path&) const override {}
    void load(const std::filesystem::path&) override {}

    Mat<double> predict_proba_rows(const double* beats, std::size_t n) const override {
        Mat<double> out(n, 9);
        for (std::size_t i = 0; i < n; ++i) fn_(beats + i * kBeatLength, out.row(i));
        return out;
    }

private:
    Fn fn_;
};

double segment_mean_of(const double* beat, std::size_t k) {
    double s = 0;
    for (std::size_t j = k * kSegmentWidth; j < (k + 1) * kSegmentWidth; ++j) s += beat[j];
    return s / kSegmentWidth;
}

BeatDataset random_beats(std::size_t n, std::uint64_t seed, int label = 1) {
    BeatDataset ds;
    Rng rng(seed);
    double row[kBeatLength];
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = rng.normal();
        ds.push_row(row, label, 0, 0);
    }
    return ds;
}

// Fixed-map saliency stub for checking the CAM arithmetic in isolation.
class MockSaliency : public model::SaliencyCapable {
public:
    Mat<double> map, grad;
    model::ForwardTrace forward_trace(const double*) const override {
        model::ForwardTrace trace;
        trace.feature_map = map;
        trace.probs[1] = 1.0;
        return trace;
    }
    Mat<double> grad_wrt_activation(const model::ForwardTrace&, int) const override {
        return grad;
    }
};

// Exact Shapley values by direct enumeration of all coalitions.
std::array<double, kNumSegments> exact_shapley(const model::ClassifierModel& model,
                                               const double* beat,
                                               const std::array<double, kBeatLength>& background,
                                               int explained_class) {
    constexpr std::size_t m = kNumSegments;
    Mat<double> probe(1, kBeatLength);
    auto value = [&](unsigned mask) {
        for (std::size_t k = 0; k < m; ++k) {
            const bool present = mask & (1u << k);
            for (std::size_t j = k * kSegmentWidth; j < (k + 1) * kSegmentWidth; ++j)
                probe(0, j) = present ? beat[j] : background[j];
        }
        return model.predict_proba(probe)(0, static_cast<std::size_t>(explained_class));
    };
    auto factorial = [](std::size_t n) {
        double f = 1;
        for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
        return f;
    };
    std::array<double, m> phi{};
    for (std::size_t k = 0; k < m; ++k) {
        for (unsigned mask = 0; mask < (1u << m); ++mask) {
            if (mask & (1u << k)) continue;
            const auto s = static_cast<std::size_t>(__builtin_popcount(mask));
            const double w = factorial(s) * factorial(m - s - 1) / factorial(m);
            phi[k] += w * (value(mask | (1u << k)) - value(mask));
        }
    }
    return phi;
}

} // namespace

TEST_CASE("grad_cam arithmetic on a hand-set one-filter map") {
    MockSaliency stub;
    stub.map.resize(kBeatLength, 9);
    stub.grad.resize(kBeatLength, 9);
    // channel 1 carries a ramp activation; gradient weight 2 everywhere on it
    for (std::size_t t = 0; t < kBeatLength; ++t) {
        stub.map(t, 1) = static_cast<double>(t) - 40.0; // negative early: ReLU clips
        stub.grad(t, 1) = 2.0;
    }
    double beat[kBeatLength] = {};
    auto map = grad_cam(stub, beat, 1);

    // alpha = (2, on channel 1); raw(t) = relu(2 (t - 40)); min-max scaled
    for (std::size_t t = 0; t <= 40; ++t) CHECK(map.values[t] == 0.0);
    CHECK(map.values[kBeatLength - 1] == doctest::Approx(1.0));
    const double expect_mid = (2.0 * (150.0 - 40.0)) / (2.0 * (219.0 - 40.0));
    CHECK(map.values[150] == doctest::Approx(expect_mid).epsilon(1e-12));

    // segment weights are the per-segment means of the scaled values
    const auto prof = segment_means(std::span<const double>(map.values.data(), kBeatLength));
    for (std::size_t k = 0; k < kNumSegments; ++k)
        CHECK(map.segment_weights[k] == doctest::Approx(prof[k]).epsilon(1e-12));
}

TEST_CASE("grad_cam: zero gradient gives the all-zero map") {
    MockSaliency stub;
    stub.map.resize(kBeatLength, 9);
    stub.grad.resize(kBeatLength, 9); // all zeros
    for (std::size_t i = 0; i < stub.map.size(); ++i) stub.map.data()[i] = 0.5;
    double beat[kBeatLength] = {};
    auto map = grad_cam(stub, beat, 1);
    for (double v : map.values) CHECK(v == 0.0);
    for (double w : map.segment_weights) CHECK(w == 0.0);
}

TEST_CASE("grad_cam is invariant to positive gradient rescaling") {
    Rng rng(3);
    MockSaliency stub;
    stub.map.resize(kBeatLength, 9);
    stub.grad.resize(kBeatLength, 9);
    for (std::size_t i = 0; i < stub.map.size(); ++i) {
        stub.map.data()[i] = rng.normal();
        stub.grad.data()[i] = rng.normal();
    }
    double beat[kBeatLength] = {};
    auto base = grad_cam(stub, beat, 1);
    for (std::size_t i = 0; i < stub.grad.size(); ++i) stub.grad.data()[i] *= 37.5;
    auto scaled = grad_cam(stub, beat, 1);
    for (std::size_t t = 0; t < kBeatLength; ++t)
        CHECK(scaled.values[t] == doctest::Approx(base.values[t]).epsilon(1e-9));
}

TEST_CASE("aggregate_saliency averages and filters") {
    SaliencyMap a, b;
    a.class_id = 2;
    a.correct = true;
    b.class_id = 2;
    b.correct = true;
    for (std::size_t t = 0; t < kBeatLength; ++t) {
        a.values[t] = 1.0;
        b.values[t] = 0.0;
    }
    auto one = aggregate_saliency({a}, {});
    for (std::size_t t = 0; t < kBeatLength; ++t) CHECK(one.values[t] == 1.0);

    auto two = aggregate_saliency({a, a}, {});
    for (std::size_t t = 0; t < kBeatLength; ++t) CHECK(two.values[t] == 1.0);

    auto mixed = aggregate_saliency({a, b}, {});
    for (std::size_t t = 0; t < kBeatLength; ++t) CHECK(mixed.values[t] == doctest::Approx(0.5));

    SaliencyMap wrong = a;
    wrong.correct = false;
    auto filtered = aggregate_saliency({a, wrong, b}, {std::nullopt, true});
    CHECK(filtered.count == 2);

    CHECK_THROWS_AS(aggregate_saliency({a}, {5, std::nullopt}), EmptySelection);
}

TEST_CASE("permutation importance: unused segments score exactly zero") {
    // model reads only segment 5 (id 6 is index 5): threshold on its mean
    MockModel seg5_only([](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        const double m = segment_mean_of(beat, 5);
        probs[m > 0 ? 1 : 2] = 1.0;
    });
    auto ds = random_beats(300, 7);
    // labels = model's own outputs, so baseline accuracy is 1
    BeatDataset labelled;
    const auto pred = seg5_only.predict(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) labelled.push_row(ds.row(i), pred[i], 0, 0);

    auto imp = permutation_importance(seg5_only, labelled, 3, 11);
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        if (k == 5) {
            CHECK(imp.weights[k] > 0.2);
        } else {
            CHECK(imp.weights[k] == 0.0);
            CHECK(imp.stdevs[k] == 0.0);
        }
    }

    SUBCASE("constant predictions make every importance zero") {
        MockModel constant([](const double*, double* probs) {
            std::fill(probs, probs + 9, 0.0);
            probs[3] = 1.0;
        });
        auto imp2 = permutation_importance(constant, labelled, 2, 1);
        for (double w : imp2.weights) CHECK(w == 0.0);
    }
}

TEST_CASE("pfi_by_correctness partitions by prediction and scores each side") {
    // model is right on beats whose segment-5 mean is positive, else wrong
    MockModel seg5_only([](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        const double m = segment_mean_of(beat, 5);
        probs[m > 0 ? 1 : 2] = 1.0;
    });
    auto ds = random_beats(200, 13, /*label=*/1); // all true class 1
    auto split = pfi_by_correctness(seg5_only, ds, 2, 3);
    CHECK(split.n_correct + split.n_misclassified == ds.size());
    CHECK(split.n_correct > 0);
    CHECK(split.n_misclassified > 0);

    // a perfect model leaves the misclassified side empty
    BeatDataset labelled;
    const auto pred = seg5_only.predict(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) labelled.push_row(ds.row(i), pred[i], 0, 0);
    CHECK_THROWS_AS(pfi_by_correctness(seg5_only, labelled, 2, 3), EmptySubset);
}

TEST_CASE("pdp: constant model is flat, threshold model steps, linear model is a line") {
    auto ds = random_beats(150, 17);

    MockModel constant([](const double*, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        probs[1] = 0.7;
        probs[2] = 0.3;
    });
    auto flat = pdp_one_way(constant, ds, 6, 9);
    for (double r : flat.mean_response) CHECK(r == doctest::Approx(0.7));

    const double threshold = 0.05;
    MockModel stepper([threshold](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        const bool low = segment_mean_of(beat, 5) < threshold;
        probs[1] = low ? 0.9 : 0.1;
        probs[2] = low ? 0.1 : 0.9;
    });
    auto step = pdp_one_way(stepper, ds, 6, 41);
    CHECK(step.target_class == 1); // majority predicted class at threshold 0.05
    for (std::size_t g = 0; g < step.grid.size(); ++g) {
        const double expected = step.grid[g] < threshold ? 0.9 : 0.1;
        CHECK(step.mean_response[g] == doctest::Approx(expected));
    }

    const double w = 0.35, intercept = 0.5;
    MockModel linear([w, intercept](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        const double p = intercept + w * segment_mean_of(beat, 5);
        probs[1] = p;
        probs[2] = 1.0 - p;
    });
    auto line = pdp_one_way(linear, ds, 6, 11, /*target_class=*/1);
    for (std::size_t g = 1; g < line.grid.size(); ++g) {
        const double slope = (line.mean_response[g] - line.mean_response[g - 1]) /
                             (line.grid[g] - line.grid[g - 1]);
        CHECK(slope == doctest::Approx(w).epsilon(1e-9));
    }
}

TEST_CASE("kernel shap equals exact Shapley enumeration at full coverage") {
    // interaction model: probability depends on products of segment means
    MockModel interactive([](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        const double a = segment_mean_of(beat, 1), b = segment_mean_of(beat, 5),
                     c = segment_mean_of(beat, 8);
        double p = 0.5 + 0.2 * std::tanh(a * b) + 0.1 * std::tanh(c) + 0.05 * std::tanh(a);
        probs[1] = p;
        probs[2] = 1.0 - p;
    });
    auto ds = random_beats(40, 23);
    const auto bg = background_mean(ds);

    const auto shap = kernel_shap(interactive, ds.row(0), bg, 1u << kNumSegments, 5);
    const auto exact = exact_shapley(interactive, ds.row(0), bg, shap.explained_class);
    for (std::size_t k = 0; k < kNumSegments; ++k)
        CHECK(std::abs(shap.phi[k] - exact[k]) <= 1e-9);

    // efficiency at full enumeration
    double sum = shap.base_value;
    for (double p : shap.phi) sum += p;
    CHECK(std::abs(sum - shap.explained_output) <= 1e-9);
}

TEST_CASE("kernel shap recovers the additive closed form") {
    std::array<double, kNumSegments> w{};
    Rng rng(31);
    for (auto& v : w) v = rng.uniform(-0.04, 0.04);
    MockModel additive([w](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        double p = 0.6;
        for (std::size_t k = 0; k < kNumSegments; ++k) p += w[k] * segment_mean_of(beat, k);
        probs[1] = p;
        probs[2] = 1.0 - p;
    });
    auto ds = random_beats(60, 37);
    const auto bg = background_mean(ds);
    const auto shap = kernel_shap(additive, ds.row(3), bg, 1u << kNumSegments, 7);

    std::array<double, kBeatLength> x{};
    std::copy(ds.row(3), ds.row(3) + kBeatLength, x.begin());
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        const double expected =
            w[k] * (segment_mean_of(x.data(), k) - segment_mean_of(bg.data(), k));
        CHECK(std::abs(shap.phi[k] - expected) <= 1e-9);
    }
}

TEST_CASE("kernel shap: no deviation, nothing to attribute; sampled stays efficient") {
    MockModel any([](const double* beat, double* probs) {
        std::fill(probs, probs + 9, 0.0);
        const double p = 0.5 + 0.3 * std::tanh(segment_mean_of(beat, 4));
        probs[1] = p;
        probs[2] = 1.0 - p;
    });
    auto ds = random_beats(30, 41);
    const auto bg = background_mean(ds);

    // x equal to the background mean
    const auto zero = kernel_shap(any, bg.data(), bg, 1u << kNumSegments, 1);
    for (double p : zero.phi) CHECK(std::abs(p) <= 1e-9);

    // sampled coalitions keep the efficiency constraint exactly
    const auto sampled = kernel_shap(any, ds.row(0), bg, 64, 9);
    double sum = sampled.base_value;
    for (double p : sampled.phi) sum += p;
    CHECK(std::abs(sum - sampled.explained_output) <= 1e-9);

    CHECK_THROWS_AS(kernel_shap(any, ds.row(0), bg, 10, 1), OutOfRange);
}

TEST_CASE("gaussian noise: identity at zero, correct scale, reproducible") {
    auto ds = random_beats(500, 3); // 110k samples

    auto same = add_gaussian_noise(ds, 0.0, 9);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < kBeatLength; ++j) CHECK(same.row(i)[j] == ds.row(i)[j]);

    // global sigma of standard normal data is ~1; noise stdev ~0.25
    auto noisy = add_gaussian_noise(ds, 0.25, 9);
    double mean = 0, sq = 0;
    const std::size_t total = ds.size() * kBeatLength;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < kBeatLength; ++j) {
            const double d = noisy.row(i)[j] - ds.row(i)[j];
            mean += d;
            sq += d * d;
        }
    mean /= static_cast<double>(total);
    const double stdev = std::sqrt(sq / static_cast<double>(total) - mean * mean);

    double data_mean = 0, data_sq = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < kBeatLength; ++j) {
            data_mean += ds.row(i)[j];
            data_sq += ds.row(i)[j] * ds.row(i)[j];
        }
    data_mean /= static_cast<double>(total);
    const double data_stdev =
        std::sqrt(data_sq / static_cast<double>(total) - data_mean * data_mean);
    CHECK(stdev == doctest::Approx(0.25 * data_stdev).epsilon(0.02));

    auto again = add_gaussian_noise(ds, 0.25, 9);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < kBeatLength; ++j) CHECK(again.row(i)[j] == noisy.row(i)[j]);

    // labels unchanged
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(noisy.label(i) == ds.label(i));
}
