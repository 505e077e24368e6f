#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/error.hpp"

#include <array>
#include <span>
#include <string>

namespace ecgi {

// 11 equal slices of 20 samples tile the 220-point beat. Segments are
// numbered 1..11; 1-4 cover the PR interval, 5-7 the QRS complex, 8-11 the
// ST segment.
inline constexpr std::size_t kNumSegments = 11;
inline constexpr std::size_t kSegmentWidth = kBeatLength / kNumSegments;

enum class Region { PR, QRS, ST };

inline Region region_of(int segment_id) {
    if (segment_id < 1 || segment_id > static_cast<int>(kNumSegments))
        throw OutOfRange("region_of: segment " + std::to_string(segment_id));
    if (segment_id <= 4) return Region::PR;
    if (segment_id <= 7) return Region::QRS;
    return Region::ST;
}

inline const char* region_name(Region r) {
    switch (r) {
        case Region::PR: return "PR";
        case Region::QRS: return "QRS";
        default: return "ST";
    }
}

struct SegmentProfile {
    std::array<double, kNumSegments> means{};

    double operator[](std::size_t k) const { return means[k]; }
    double& operator[](std::size_t k) { return means[k]; }
};

inline SegmentProfile segment_means(std::span<const double> beat) {
    if (beat.size() != kBeatLength)
        throw LengthMismatch("segment_means: expected " + std::to_string(kBeatLength) +
                             " samples, got " + std::to_string(beat.size()));
    SegmentProfile profile;
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        double sum = 0;
        for (std::size_t i = k * kSegmentWidth; i < (k + 1) * kSegmentWidth; ++i) sum += beat[i];
        profile.means[k] = sum / static_cast<double>(kSegmentWidth);
    }
    return profile;
}

// The piecewise-constant beat the explainers see: every sample replaced by
// its segment mean.
inline std::array<double, kBeatLength> reconstruct(const SegmentProfile& profile) {
    std::array<double, kBeatLength> out;
    for (std::size_t k = 0; k < kNumSegments; ++k)
        for (std::size_t i = k * kSegmentWidth; i < (k + 1) * kSegmentWidth; ++i)
            out[i] = profile.means[k];
    return out;
}

} // namespace ecgi
