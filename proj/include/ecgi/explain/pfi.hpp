#pragma once

#include "ecgi/error.hpp"
#include "ecgi/model/classifier.hpp"
#include "ecgi/rng.hpp"
#include "ecgi/segment.hpp"

#include <array>
#include <cmath>
#include <vector>

namespace ecgi::explain {

struct ImportanceVector {
    std::array<double, kNumSegments> weights{}; // baseline minus mean permuted score
    std::array<double, kNumSegments> stdevs{};
    std::size_t n_repeats = 0;
};

namespace detail {

inline double accuracy_of(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hit;
    return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

} // namespace detail

// Importance of segment k = drop in accuracy when its 20 columns are jointly
// row-permuted (one shared permutation per repeat per segment). Networks are
// probed directly on the permuted 220-point input.
inline ImportanceVector permutation_importance(const model::ClassifierModel& model,
                                               const BeatDataset& dataset,
                                               std::size_t n_repeats, std::uint64_t seed) {
    if (!model.trained()) throw UntrainedModel("permutation_importance: model was never fitted");
    if (n_repeats < 1) throw OutOfRange("permutation_importance: n_repeats must be >= 1");
    const std::size_t n = dataset.size();
    if (n == 0) throw EmptySubset("permutation_importance: empty dataset");

    const double baseline = detail::accuracy_of(model.predict(dataset), dataset.labels());

    Mat<double> permuted(n, kBeatLength);
    std::copy(dataset.row(0), dataset.row(0) + n * kBeatLength, permuted.data());
    std::vector<std::size_t> perm(n);

    ImportanceVector out;
    out.n_repeats = n_repeats;
    const Rng master(seed);
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        double sum = 0, sumsq = 0;
        for (std::size_t rep = 0; rep < n_repeats; ++rep) {
            Rng rng = master.spawn(k * 1000 + rep);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            rng.shuffle(perm);
            for (std::size_t i = 0; i < n; ++i) {
                const double* src = dataset.row(perm[i]) + k * kSegmentWidth;
                std::copy(src, src + kSegmentWidth, permuted.row(i) + k * kSegmentWidth);
            }
            const double score =
                detail::accuracy_of(model.predict(permuted), dataset.labels());
            sum += score;
            sumsq += score * score;
        }
        const double mean_score = sum / static_cast<double>(n_repeats);
        out.weights[k] = baseline - mean_score;
        const double var =
            std::max(0.0, sumsq / static_cast<double>(n_repeats) - mean_score * mean_score);
        out.stdevs[k] = std::sqrt(var);
        // restore the segment before moving on
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = dataset.row(i) + k * kSegmentWidth;
            std::copy(src, src + kSegmentWidth, permuted.row(i) + k * kSegmentWidth);
        }
    }
    return out;
}

struct PfiByCorrectness {
    ImportanceVector correct;
    ImportanceVector misclassified;
    std::size_t n_correct = 0;
    std::size_t n_misclassified = 0;
};

// Splits the dataset by the model's own predictions and runs the permutation
// importance on each side independently.
inline PfiByCorrectness pfi_by_correctness(const model::ClassifierModel& model,
                                           const BeatDataset& dataset, std::size_t n_repeats,
                                           std::uint64_t seed) {
    const auto pred = model.predict(dataset);
    std::vector<std::size_t> right, wrong;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        (pred[i] == dataset.label(i) ? right : wrong).push_back(i);
    if (right.empty() || wrong.empty())
        throw EmptySubset("pfi_by_correctness: a side is empty (" + std::to_string(right.size()) +
                          " correct, " + std::to_string(wrong.size()) + " misclassified)");
    PfiByCorrectness out;
    out.n_correct = right.size();
    out.n_misclassified = wrong.size();
    out.correct = permutation_importance(model, dataset.gather(right), n_repeats, seed);
    out.misclassified = permutation_importance(model, dataset.gather(wrong), n_repeats, seed + 1);
    return out;
}

} // namespace ecgi::explain
