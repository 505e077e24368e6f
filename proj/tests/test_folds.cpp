#include "ecgi/stats/folds.hpp"
#include "ecgi/stats/variance.hpp"

#include <doctest.h>

#include <set>

using namespace ecgi;
using namespace ecgi::stats;

namespace {

BeatDataset dataset_with_labels(const std::vector<int>& labels,
                                const std::vector<int>& records = {}) {
    BeatDataset ds;
    Rng rng(1);
    double row[kBeatLength];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (auto& v : row) v = rng.normal();
        ds.push_row(row, labels[i], records.empty() ? 0 : records[i], 0);
    }
    return ds;
}

} // namespace

TEST_CASE("stratified 6-fold on 60 rows of 6 classes gives 10-row folds") {
    std::vector<int> labels;
    for (int c = 1; c <= 6; ++c)
        for (int i = 0; i < 10; ++i) labels.push_back(c);
    auto ds = dataset_with_labels(labels);

    auto folds = stratified_kfold(ds, 6, 3);
    REQUIRE(folds.size() == 6);

    std::set<std::size_t> seen;
    for (const auto& fold : folds) {
        CHECK(fold.test.size() == 10);
        CHECK(fold.train.size() == 50);
        // stratification: 10 rows per class dealt into 6 buckets gives 1 or 2
        std::map<int, int> per_class;
        for (std::size_t i : fold.test) per_class[ds.label(i)]++;
        for (const auto& [c, n] : per_class) CHECK((n == 1 || n == 2));
        for (std::size_t i : fold.test) {
            CHECK(seen.count(i) == 0);
            seen.insert(i);
        }
        // train and test are disjoint
        std::set<std::size_t> train_set(fold.train.begin(), fold.train.end());
        for (std::size_t i : fold.test) CHECK(train_set.count(i) == 0);
    }
    CHECK(seen.size() == 60); // folds exhaust the dataset

    // same seed, same folds
    auto again = stratified_kfold(ds, 6, 3);
    for (std::size_t f = 0; f < 6; ++f) CHECK(again[f].test == folds[f].test);

    CHECK_THROWS_AS(stratified_kfold(dataset_with_labels({1, 1, 1, 2}), 6, 0), ClassTooSmall);
}

TEST_CASE("per-class proportions are preserved within one row") {
    std::vector<int> labels;
    for (int i = 0; i < 33; ++i) labels.push_back(1);
    for (int i = 0; i < 14; ++i) labels.push_back(2);
    auto ds = dataset_with_labels(labels);
    auto folds = stratified_kfold(ds, 4, 9);
    for (const auto& fold : folds) {
        std::map<int, int> per_class;
        for (std::size_t i : fold.test) per_class[ds.label(i)]++;
        CHECK(per_class[1] >= 8);
        CHECK(per_class[1] <= 9);
        CHECK(per_class[2] >= 3);
        CHECK(per_class[2] <= 4);
    }
}

TEST_CASE("leave_groups_out splits by patient and is deterministic") {
    std::vector<int> labels(40, 1);
    std::vector<int> records;
    for (int i = 0; i < 40; ++i) records.push_back(i % 4 == 0 ? 104 : (i % 4 == 1 ? 119 : 201));
    auto ds = dataset_with_labels(labels, records);

    auto [train, test] = leave_groups_out(ds);
    CHECK(test.size() == 20);
    for (std::size_t i = 0; i < test.size(); ++i)
        CHECK((test.record(i) == 104 || test.record(i) == 119));
    for (std::size_t i = 0; i < train.size(); ++i) CHECK(train.record(i) == 201);

    auto [train2, test2] = leave_groups_out(ds);
    CHECK(train2.size() == train.size());
    CHECK(test2.size() == test.size());
}

TEST_CASE("variance_per_segment isolates the differing segment") {
    BeatDataset ds;
    double row[kBeatLength] = {};
    ds.push_row(row, 1, 0, 0);
    ds.push_row(row, 1, 0, 0); // identical pair first
    auto zero = variance_per_segment(ds);
    for (double v : zero.per_segment) CHECK(v == 0.0);
    for (double v : zero.per_sample) CHECK(v == 0.0);

    // two beats differing only in segment id 6 (0-based 5: samples 100..119)
    BeatDataset two;
    two.push_row(row, 1, 0, 0);
    for (std::size_t i = 100; i < 120; ++i) row[i] = 2.0;
    two.push_row(row, 1, 0, 0);
    auto v = variance_per_segment(two);
    for (std::size_t k = 0; k < kNumSegments; ++k) {
        if (k == 5)
            CHECK(v.per_segment[k] > 0);
        else
            CHECK(v.per_segment[k] == 0.0);
    }

    BeatDataset one;
    one.push_row(row, 1, 0, 0);
    CHECK_THROWS_AS(variance_per_segment(one), TooFewBeats);

    // class filter
    BeatDataset mixed;
    mixed.push_row(row, 1, 0, 0);
    mixed.push_row(row, 2, 0, 0);
    CHECK_THROWS_AS(variance_per_segment(mixed, 1), TooFewBeats);
}
