#pragma once

#include "ecgi/beat.hpp"
#include "ecgi/error.hpp"
#include "ecgi/rng.hpp"

#include <map>
#include <vector>

namespace ecgi::stats {

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified k-fold: per class, rows are shuffled under the seed and dealt
// round-robin into the k test buckets, so per-class proportions match within
// one row. The resample step before fitting belongs to the evaluation driver,
// not to the fold indexer.
inline std::vector<FoldIndices> stratified_kfold(const BeatDataset& dataset, std::size_t k,
                                                 std::uint64_t seed) {
    if (k < 2) throw OutOfRange("stratified_kfold: k must be >= 2");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.label(i)].push_back(i);
    for (const auto& [cls, rows] : by_class)
        if (rows.size() < k)
            throw ClassTooSmall("stratified_kfold: class " + std::to_string(cls) + " has " +
                                std::to_string(rows.size()) + " rows, need >= " + std::to_string(k));

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> buckets(k);
    std::size_t start = 0; // rotates so per-class remainders spread over folds
    for (auto& [cls, rows] : by_class) {
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) buckets[(start + i) % k].push_back(rows[i]);
        start = (start + rows.size()) % k;
    }

    std::vector<FoldIndices> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(buckets[f].begin(), buckets[f].end());
        folds[f].test = buckets[f];
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            folds[f].train.insert(folds[f].train.end(), buckets[g].begin(), buckets[g].end());
        }
        std::sort(folds[f].train.begin(), folds[f].train.end());
    }
    return folds;
}

// Patient-wise split used by the leave-groups-out evaluation.
inline std::pair<BeatDataset, BeatDataset> leave_groups_out(
    const BeatDataset& dataset, const std::vector<int>& test_records = {104, 113, 119, 208, 210}) {
    SplitSpec spec;
    spec.mode = SplitSpec::Mode::PatientHoldout;
    spec.test_records = test_records;
    return split(dataset, spec);
}

} // namespace ecgi::stats
