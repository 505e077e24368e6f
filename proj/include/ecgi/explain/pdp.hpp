#pragma once

#include "ecgi/error.hpp"
#include "ecgi/model/classifier.hpp"
#include "ecgi/segment.hpp"

#include <algorithm>
#include <vector>

namespace ecgi::explain {

struct PdpCurve {
    int segment_id = 0; // 1..11
    int target_class = 0;
    std::vector<double> grid;
    std::vector<double> mean_response;
};

// One-way partial dependence of one segment: sweep a constant over the
// observed range of that segment's mean, substitute it into every row's
// 20-sample block, and record the mean predicted probability of the target
// class. By default the target is the class the model predicts most often on
// the dataset, pinning a single response column.
inline PdpCurve pdp_one_way(const model::ClassifierModel& model, const BeatDataset& dataset,
                            int segment_id, std::size_t grid_size, int target_class = 0) {
    if (!model.trained()) throw UntrainedModel("pdp_one_way: model was never fitted");
    if (segment_id < 1 || segment_id > static_cast<int>(kNumSegments))
        throw OutOfRange("pdp_one_way: segment id " + std::to_string(segment_id));
    if (grid_size < 2) throw OutOfRange("pdp_one_way: grid size must be >= 2");
    if (dataset.empty()) throw EmptySubset("pdp_one_way: empty dataset");

    const auto k = static_cast<std::size_t>(segment_id - 1);

    if (target_class == 0) {
        const auto pred = model.predict(dataset);
        std::array<std::size_t, kNumClasses + 1> votes{};
        for (int p : pred) ++votes[static_cast<std::size_t>(p)];
        target_class = 1;
        for (int c = 2; c <= kNumClasses; ++c)
            if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(target_class)])
                target_class = c;
    }

    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        double mean = 0;
        const double* block = dataset.row(i) + k * kSegmentWidth;
        for (std::size_t j = 0; j < kSegmentWidth; ++j) mean += block[j];
        mean /= static_cast<double>(kSegmentWidth);
        if (i == 0) {
            lo = hi = mean;
        } else {
            lo = std::min(lo, mean);
            hi = std::max(hi, mean);
        }
    }

    PdpCurve curve;
    curve.segment_id = segment_id;
    curve.target_class = target_class;
    Mat<double> modified(dataset.size(), kBeatLength);
    std::copy(dataset.row(0), dataset.row(0) + dataset.size() * kBeatLength, modified.data());
    for (std::size_t g = 0; g < grid_size; ++g) {
        const double v = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_size - 1);
        for (std::size_t i = 0; i < dataset.size(); ++i)
            std::fill(modified.row(i) + k * kSegmentWidth,
                      modified.row(i) + (k + 1) * kSegmentWidth, v);
        const auto proba = model.predict_proba(modified);
        double mean = 0;
        for (std::size_t i = 0; i < proba.rows(); ++i)
            mean += proba(i, static_cast<std::size_t>(target_class));
        curve.grid.push_back(v);
        curve.mean_response.push_back(mean / static_cast<double>(proba.rows()));
    }
    return curve;
}

} // namespace ecgi::explain
