#pragma once

#include "ecgi/error.hpp"
#include "ecgi/model/classifier.hpp"
#include "ecgi/segment.hpp"

#include <array>
#include <optional>
#include <vector>

namespace ecgi::explain {

struct SaliencyMap {
    std::array<double, kBeatLength> values{};       // min-max scaled to [0, 1]
    std::array<double, kNumSegments> segment_weights{};
    int class_id = 0;
    bool correct = false;
};

namespace detail {

inline void finalize_map(std::array<double, kBeatLength>& values,
                         std::array<double, kNumSegments>& weights) {
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi > lo) {
        for (double& v : values) v = (v - lo) / (hi - lo);
    } else {
        // an identically-zero raw map stays zero rather than dividing by zero
        for (double& v : values) v = 0.0;
    }
    const auto profile = segment_means(std::span<const double>(values.data(), values.size()));
    for (std::size_t k = 0; k < kNumSegments; ++k) weights[k] = profile[k];
}

} // namespace detail

// Grad-CAM over the final feature map: channel weights are the time-averaged
// gradients, the map is the ReLU of the weighted channel sum, upsampled
// (nearest neighbour) to the 220 input positions and min-max scaled.
inline SaliencyMap grad_cam(const model::SaliencyCapable& net, const double* beat, int class_id,
                            std::optional<bool> correct = std::nullopt) {
    const auto trace = net.forward_trace(beat);
    const auto grad = net.grad_wrt_activation(trace, class_id);
    const std::size_t t_map = trace.feature_map.rows();
    const std::size_t channels = trace.feature_map.cols();

    std::vector<double> alpha(channels, 0.0);
    for (std::size_t t = 0; t < t_map; ++t)
        for (std::size_t k = 0; k < channels; ++k) alpha[k] += grad(t, k);
    for (auto& a : alpha) a /= static_cast<double>(t_map);

    std::vector<double> raw(t_map, 0.0);
    for (std::size_t t = 0; t < t_map; ++t) {
        double v = 0;
        for (std::size_t k = 0; k < channels; ++k) v += alpha[k] * trace.feature_map(t, k);
        raw[t] = v > 0 ? v : 0.0;
    }

    SaliencyMap map;
    map.class_id = class_id;
    int predicted = 1;
    for (int c = 2; c < static_cast<int>(nn::kClasses); ++c)
        if (trace.probs[static_cast<std::size_t>(c)] > trace.probs[static_cast<std::size_t>(predicted)])
            predicted = c;
    map.correct = correct.value_or(predicted == class_id);
    for (std::size_t t = 0; t < kBeatLength; ++t)
        map.values[t] = raw[t * t_map / kBeatLength]; // nearest-neighbour upsample
    detail::finalize_map(map.values, map.segment_weights);
    return map;
}

struct AggregateSaliency {
    std::array<double, kBeatLength> values{};
    std::array<double, kNumSegments> segment_weights{};
    std::size_t count = 0;

    int argmax_segment() const { // 1-based
        std::size_t best = 0;
        for (std::size_t k = 1; k < kNumSegments; ++k)
            if (segment_weights[k] > segment_weights[best]) best = k;
        return static_cast<int>(best) + 1;
    }
};

struct SaliencyFilter {
    std::optional<int> class_id;
    std::optional<bool> correct;
};

// Pointwise mean of the selected maps.
inline AggregateSaliency aggregate_saliency(const std::vector<SaliencyMap>& maps,
                                            const SaliencyFilter& filter = {}) {
    AggregateSaliency agg;
    for (const auto& map : maps) {
        if (filter.class_id && map.class_id != *filter.class_id) continue;
        if (filter.correct && map.correct != *filter.correct) continue;
        for (std::size_t t = 0; t < kBeatLength; ++t) agg.values[t] += map.values[t];
        for (std::size_t k = 0; k < kNumSegments; ++k)
            agg.segment_weights[k] += map.segment_weights[k];
        ++agg.count;
    }
    if (agg.count == 0) throw EmptySelection("aggregate_saliency: no maps match the filter");
    for (auto& v : agg.values) v /= static_cast<double>(agg.count);
    for (auto& w : agg.segment_weights) w /= static_cast<double>(agg.count);
    return agg;
}

} // namespace ecgi::explain
