#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/rng.hpp"

#include <cmath>

namespace ecgi::explain {

// Adds i.i.d. Gaussian noise with stdev = std_factor x (global stdev of the
// dataset's samples). Labels, records and channels are untouched.
inline BeatDataset add_gaussian_noise(const BeatDataset& dataset, double std_factor,
                                      std::uint64_t seed) {
    if (std_factor < 0) throw OutOfRange("add_gaussian_noise: std factor must be >= 0");
    BeatDataset out;
    out.split_tag = dataset.split_tag + "-noisy";
    out.seed = seed;
    out.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        out.push_row(dataset.row(i), dataset.label(i), dataset.record(i), dataset.channel(i));
    if (std_factor == 0 || dataset.empty()) return out;

    const std::size_t total = dataset.size() * kBeatLength;
    double mean = 0, sq = 0;
    const double* data = dataset.row(0);
    for (std::size_t i = 0; i < total; ++i) {
        mean += data[i];
        sq += data[i] * data[i];
    }
    mean /= static_cast<double>(total);
    const double sigma = std::sqrt(std::max(0.0, sq / static_cast<double>(total) - mean * mean));

    Rng rng(seed);
    double* noisy = out.samples().data();
    for (std::size_t i = 0; i < total; ++i) noisy[i] += std_factor * sigma * rng.normal();
    return out;
}

} // namespace ecgi::explain
