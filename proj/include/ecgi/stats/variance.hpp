#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/error.hpp"
#include "ecgi/segment.hpp"

#include <array>
#include <optional>
#include <vector>

namespace ecgi::stats {

struct VarianceProfile {
    std::array<double, kNumSegments> per_segment{}; // variance of segment means across beats
    std::array<double, kBeatLength> per_sample{};   // pointwise variance across beats
    std::size_t n = 0;
};

// Where the selected beats differ: variance of the 11 segment means plus the
// full 220-point variance profile. Population variance.
inline VarianceProfile variance_per_segment(const BeatDataset& dataset,
                                            std::optional<int> class_filter = std::nullopt) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (!class_filter || dataset.label(i) == *class_filter) rows.push_back(i);
    if (rows.size() < 2) throw TooFewBeats("variance_per_segment: need at least 2 beats");

    VarianceProfile out;
    out.n = rows.size();
    const auto n = static_cast<double>(rows.size());

    std::array<double, kBeatLength> mean{}, sq{};
    std::array<double, kNumSegments> seg_mean{}, seg_sq{};
    for (std::size_t r : rows) {
        const double* beat = dataset.row(r);
        for (std::size_t i = 0; i < kBeatLength; ++i) {
            mean[i] += beat[i];
            sq[i] += beat[i] * beat[i];
        }
        const auto profile = segment_means(dataset.beat(r));
        for (std::size_t k = 0; k < kNumSegments; ++k) {
            seg_mean[k] += profile[k];
            seg_sq[k] += profile[k] * profile[k];
        }
    }
    for (std::size_t i = 0; i < kBeatLength; ++i) {
        mean[i] /= n;
        out.per_sample[i] = std::max(0.0, sq[i] / n - mean[i] * mean[i]);
    }
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        seg_mean[k] /= n;
        out.per_segment[k] = std::max(0.0, seg_sq[k] / n - seg_mean[k] * seg_mean[k]);
    }
    return out;
}

} // namespace ecgi::stats
