#pragma once

#include "ecgi/csv.hpp"
#include "ecgi/error.hpp"
#include "ecgi/mat.hpp"
#include "ecgi/rng.hpp"
#include "ecgi/wfdb.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ecgi {

inline constexpr std::size_t kBeatLength = 220;
inline constexpr std::size_t kHalfWindow = 110;
inline constexpr int kNumClasses = 8;

// Class ids 1..8 for the symbols N L R V A F f / (everything else is ignored).
inline std::optional<int> map_symbol_to_class(char symbol) {
    switch (symbol) {
        case 'N': return 1;
        case 'L': return 2;
        case 'R': return 3;
        case 'V': return 4;
        case 'A': return 5;
        case 'F': return 6;
        case 'f': return 7;
        case '/': return 8;
        default: return std::nullopt;
    }
}

inline char class_symbol(int class_id) {
    static constexpr char symbols[9] = {'?', 'N', 'L', 'R', 'V', 'A', 'F', 'f', '/'};
    return (class_id >= 1 && class_id <= 8) ? symbols[class_id] : '?';
}

// z-score with the population standard deviation; a flat window maps to all
// zeros so the function stays total.
inline void standardize(std::span<double> samples) {
    double mean = 0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double var = 0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples.size());
    if (var == 0.0) {
        for (double& v : samples) v = 0.0;
        return;
    }
    const double inv = 1.0 / std::sqrt(var);
    for (double& v : samples) v = (v - mean) * inv;
}

struct Beat {
    std::array<double, kBeatLength> samples;
    int class_id = 0;
    int record_id = 0;
    int channel = 0;
};

// Beats stored row-flat: one matrix of standardized samples plus parallel
// label/record/channel columns. Mirrors the on-disk CSV exactly.
class BeatDataset {
public:
    BeatDataset() = default;

    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    const double* row(std::size_t i) const { return samples_.row(i); }
    std::span<const double> beat(std::size_t i) const { return {samples_.row(i), kBeatLength}; }
    int label(std::size_t i) const { return labels_[i]; }
    int record(std::size_t i) const { return records_[i]; }
    int channel(std::size_t i) const { return channels_[i]; }

    const Mat<double>& samples() const { return samples_; }
    Mat<double>& samples() { return samples_; }
    const std::vector<int>& labels() const { return labels_; }

    std::string split_tag = "full";
    std::uint64_t seed = 0;

    void reserve(std::size_t n) {
        if (capacity_ >= n) return;
        Mat<double> grown(n, kBeatLength);
        std::copy(samples_.data(), samples_.data() + size() * kBeatLength, grown.data());
        samples_.swap(grown);
        capacity_ = n;
        labels_.reserve(n);
        records_.reserve(n);
        channels_.reserve(n);
    }

    void push_row(const double* samples, int class_id, int record_id, int channel) {
        if (size() == capacity_) reserve(capacity_ == 0 ? 1024 : capacity_ * 2);
        std::copy(samples, samples + kBeatLength, samples_.row(size()));
        labels_.push_back(class_id);
        records_.push_back(record_id);
        channels_.push_back(channel);
    }

    void push_beat(const Beat& b) { push_row(b.samples.data(), b.class_id, b.record_id, b.channel); }

    // Rows in `idx` order; duplicates allowed (resampling).
    BeatDataset gather(const std::vector<std::size_t>& idx) const {
        BeatDataset out;
        out.split_tag = split_tag;
        out.seed = seed;
        out.reserve(idx.size());
        for (std::size_t i : idx) out.push_row(row(i), labels_[i], records_[i], channels_[i]);
        return out;
    }

    std::map<int, std::size_t> class_counts() const {
        std::map<int, std::size_t> counts;
        for (int c : labels_) ++counts[c];
        return counts;
    }

private:
    Mat<double> samples_;
    std::size_t capacity_ = 0;
    std::vector<int> labels_;
    std::vector<int> records_;
    std::vector<int> channels_;
};

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

struct ExtractResult {
    std::vector<Beat> beats;
    std::size_t skipped_out_of_bounds = 0;
};

// One beat per channel per class-mapped annotation whose window fits inside
// the record. The R peak sits at offset half_window of the window.
inline ExtractResult extract_beats(const wfdb::EcgRecord& record,
                                   std::size_t half_window = kHalfWindow) {
    if (half_window < 1) throw OutOfRange("extract_beats: half_window must be >= 1");
    ExtractResult out;
    int record_id = -1;
    try {
        record_id = std::stoi(record.header.record_name);
    } catch (...) {
    }
    const std::int64_t n = record.header.n_samples;
    const auto window = static_cast<std::int64_t>(2 * half_window);
    for (const auto& ev : record.annotations) {
        const auto cls = map_symbol_to_class(ev.symbol);
        if (!cls) continue;
        const std::int64_t lo = ev.sample_index - static_cast<std::int64_t>(half_window);
        if (lo < 0 || lo + window > n) {
            ++out.skipped_out_of_bounds;
            continue;
        }
        for (int ch = 0; ch < 2; ++ch) {
            Beat beat;
            beat.class_id = *cls;
            beat.record_id = record_id;
            beat.channel = ch;
            const auto& sig = record.signal[static_cast<std::size_t>(ch)];
            for (std::int64_t t = 0; t < window; ++t)
                beat.samples[static_cast<std::size_t>(t)] =
                    static_cast<double>(sig[static_cast<std::size_t>(lo + t)]);
            standardize(beat.samples);
            out.beats.push_back(beat);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitSpec {
    enum class Mode { BeatHoldout, PatientHoldout };
    Mode mode = Mode::BeatHoldout;
    double train_fraction = 0.75;
    std::vector<int> test_records = {104, 113, 119, 208, 210};
    std::uint64_t seed = 0;
};

inline std::pair<BeatDataset, BeatDataset> split(const BeatDataset& dataset, const SplitSpec& spec) {
    if (dataset.empty()) throw EmptySide("split: empty dataset");
    std::vector<std::size_t> train_idx, test_idx;
    if (spec.mode == SplitSpec::Mode::BeatHoldout) {
        if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
            throw OutOfRange("split: train fraction must be in (0,1)");
        std::vector<std::size_t> idx(dataset.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(spec.seed);
        rng.shuffle(idx);
        const auto n_train =
            static_cast<std::size_t>(spec.train_fraction * static_cast<double>(dataset.size()));
        train_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    } else {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const int rec = dataset.record(i);
            const bool held_out = std::find(spec.test_records.begin(), spec.test_records.end(),
                                            rec) != spec.test_records.end();
            (held_out ? test_idx : train_idx).push_back(i);
        }
    }
    if (train_idx.empty() || test_idx.empty()) throw EmptySide("split: a side received zero rows");
    auto train = dataset.gather(train_idx);
    auto test = dataset.gather(test_idx);
    train.split_tag = "train";
    test.split_tag = "test";
    train.seed = test.seed = spec.seed;
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Bootstrap resampling
// ---------------------------------------------------------------------------

// Equalizes every class at n = floor(mean count of the abnormal classes 2..8)
// by sampling with replacement, then shuffles the row order.
inline BeatDataset bootstrap_resample(const BeatDataset& train, std::uint64_t seed) {
    std::array<std::vector<std::size_t>, kNumClasses + 1> by_class;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int c = train.label(i);
        if (c >= 1 && c <= kNumClasses) by_class[static_cast<std::size_t>(c)].push_back(i);
    }
    double abnormal_sum = 0;
    for (int c = 1; c <= kNumClasses; ++c) {
        if (by_class[static_cast<std::size_t>(c)].empty())
            throw MissingClass("bootstrap_resample: class " + std::to_string(c) + " has no beats");
        if (c >= 2) abnormal_sum += static_cast<double>(by_class[static_cast<std::size_t>(c)].size());
    }
    const auto n = static_cast<std::size_t>(std::floor(abnormal_sum / (kNumClasses - 1)));

    Rng rng(seed);
    std::vector<std::size_t> idx;
    idx.reserve(n * kNumClasses);
    for (int c = 1; c <= kNumClasses; ++c) {
        const auto& rows = by_class[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < n; ++i) idx.push_back(rows[rng.index(rows.size())]);
    }
    rng.shuffle(idx);
    auto out = train.gather(idx);
    out.split_tag = train.split_tag + "-resampled";
    out.seed = seed;
    return out;
}

// Caps every class at `cap` rows (without replacement); classes below the cap
// keep all rows. Row order is preserved.
inline BeatDataset subsample_per_class(const BeatDataset& dataset, std::size_t cap,
                                       std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.label(i)].push_back(i);
    Rng rng(seed);
    std::vector<std::size_t> keep;
    for (auto& [c, rows] : by_class) {
        if (rows.size() > cap) {
            rng.shuffle(rows);
            rows.resize(cap);
        }
        keep.insert(keep.end(), rows.begin(), rows.end());
    }
    std::sort(keep.begin(), keep.end());
    return dataset.gather(keep);
}

// ---------------------------------------------------------------------------
// CSV round trip: header `s0..s219,class,record,channel`
// ---------------------------------------------------------------------------

inline void write_csv(const BeatDataset& dataset, const std::string& path) {
    csv::Writer out(path);
    std::vector<std::string> header;
    header.reserve(kBeatLength + 3);
    for (std::size_t i = 0; i < kBeatLength; ++i) header.push_back("s" + std::to_string(i));
    header.emplace_back("class");
    header.emplace_back("record");
    header.emplace_back("channel");
    out.raw_row(header);
    std::vector<std::string> fields(kBeatLength + 3);
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        const double* row = dataset.row(r);
        for (std::size_t i = 0; i < kBeatLength; ++i) fields[i] = csv::format(row[i]);
        fields[kBeatLength] = std::to_string(dataset.label(r));
        fields[kBeatLength + 1] = std::to_string(dataset.record(r));
        fields[kBeatLength + 2] = std::to_string(dataset.channel(r));
        out.raw_row(fields);
    }
    out.close();
}

inline BeatDataset read_csv(const std::string& path) {
    csv::Reader in(path);
    std::vector<std::string_view> fields;
    if (!in.next(fields)) throw SchemaError("beats csv: missing header");
    if (fields.size() != kBeatLength + 3)
        throw SchemaError("beats csv: expected " + std::to_string(kBeatLength + 3) +
                          " columns, got " + std::to_string(fields.size()));
    if (fields[0] != "s0" || fields[kBeatLength] != "class")
        throw SchemaError("beats csv: unexpected header");
    BeatDataset out;
    double row[kBeatLength];
    while (in.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue; // trailing newline
        if (fields.size() != kBeatLength + 3)
            throw SchemaError("beats csv: row with " + std::to_string(fields.size()) + " columns");
        for (std::size_t i = 0; i < kBeatLength; ++i) row[i] = csv::parse_double(fields[i]);
        out.push_row(row, static_cast<int>(csv::parse_int(fields[kBeatLength])),
                     static_cast<int>(csv::parse_int(fields[kBeatLength + 1])),
                     static_cast<int>(csv::parse_int(fields[kBeatLength + 2])));
    }
    return out;
}

} // namespace ecgi
