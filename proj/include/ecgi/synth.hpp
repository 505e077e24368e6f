#pragma once

#include "ecgi/error.hpp"
#include "ecgi/rng.hpp"
#include "ecgi/wfdb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

// Synthetic MIT-style corpus. Real recordings cannot be redistributed with
// the repository, so the tests and the demo pipeline run on fabricated
// records written in the genuine binary formats: format-212 signals plus MIT
// annotation streams. Class morphologies follow textbook descriptions (wide
// notched QRS for bundle branch blocks, pacing spikes for paced beats, ...)
// so that classifiers and explainers have realistic structure to find.
namespace ecgi::synth {

// ---------------------------------------------------------------------------
// Encoders (inverse of the wfdb parsers; also used by round-trip tests)
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> encode_format212(const std::vector<std::int16_t>& ch0,
                                                  const std::vector<std::int16_t>& ch1) {
    if (ch0.size() != ch1.size()) throw LengthMismatch("format 212: channel lengths differ");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(ch0.size() * 3);
    for (std::size_t i = 0; i < ch0.size(); ++i) {
        const unsigned a = static_cast<unsigned>(ch0[i]) & 0xFFF;
        const unsigned b = static_cast<unsigned>(ch1[i]) & 0xFFF;
        bytes.push_back(static_cast<std::uint8_t>(a & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>(((a >> 8) & 0x0F) | ((b >> 8) << 4)));
        bytes.push_back(static_cast<std::uint8_t>(b & 0xFF));
    }
    return bytes;
}

inline std::vector<std::uint8_t> encode_annotations(const std::vector<wfdb::AnnotationEvent>& events) {
    std::vector<std::uint8_t> bytes;
    std::int64_t prev = 0;
    auto put_word = [&](unsigned w) {
        bytes.push_back(static_cast<std::uint8_t>(w & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((w >> 8) & 0xFF));
    };
    for (const auto& ev : events) {
        std::int64_t delta = ev.sample_index - prev;
        if (delta < 0) throw InvariantViolation("annotation times must be non-decreasing");
        if (delta > 0x3FF) {
            // SKIP pseudo-annotation carries the long interval, high word first.
            const auto skip = static_cast<std::uint32_t>(delta);
            put_word(static_cast<unsigned>(wfdb::kSkip) << 10);
            put_word((skip >> 16) & 0xFFFF);
            put_word(skip & 0xFFFF);
            delta = 0;
        }
        put_word((static_cast<unsigned>(ev.type_code) << 10) | static_cast<unsigned>(delta));
        prev = ev.sample_index;
    }
    put_word(0);
    return bytes;
}

inline void write_record_files(const std::filesystem::path& dir, const std::string& name,
                               const std::vector<std::int16_t>& ch0,
                               const std::vector<std::int16_t>& ch1,
                               const std::vector<wfdb::AnnotationEvent>& events,
                               double fs = 360.0, int gain = 200, int baseline = 1024) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream hea(dir / (name + ".hea"));
        if (!hea) throw IoError("cannot write header for " + name);
        hea << name << " 2 " << fs << " " << ch0.size() << "\n";
        const int init0 = ch0.empty() ? 0 : ch0.front();
        const int init1 = ch1.empty() ? 0 : ch1.front();
        hea << name << ".dat 212 " << gain << " 11 " << baseline << " " << init0 << " 0 0 MLII\n";
        hea << name << ".dat 212 " << gain << " 11 " << baseline << " " << init1 << " 0 0 V1\n";
    }
    {
        const auto bytes = encode_format212(ch0, ch1);
        std::ofstream dat(dir / (name + ".dat"), std::ios::binary);
        if (!dat) throw IoError("cannot write signal for " + name);
        dat.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    {
        const auto bytes = encode_annotations(events);
        std::ofstream atr(dir / (name + ".atr"), std::ios::binary);
        if (!atr) throw IoError("cannot write annotations for " + name);
        atr.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
}

// ---------------------------------------------------------------------------
// Morphology model
// ---------------------------------------------------------------------------

struct Bump {
    double center; // samples relative to the R peak
    double width;  // gaussian sigma in samples
    double amp;    // mV
};

// Per-patient rendering parameters drawn once per record.
struct Patient {
    double amp_scale = 1.0;
    double width_scale = 1.0;
    double ch1_qrs = 0.6;  // channel-1 QRS projection (sign may flip)
    double ch1_pt = 0.45;  // channel-1 P/T projection
    double wander_amp = 0.06;
    double wander_freq = 0.32; // Hz
    double noise_mv = 0.03;
};

// Beat templates per class id (Table-style labels N L R V A F f /).
// The discriminative structure sits mostly inside the QRS region; P and T
// waves differ where the underlying rhythm demands it.
inline std::vector<Bump> beat_template(int class_id) {
    switch (class_id) {
        case 1: // N: textbook P-QRS-T
            return {{-55, 8, 0.15}, {-10, 3, -0.10}, {0, 4, 1.20}, {10, 3, -0.25}, {55, 18, 0.30}};
        case 2: // L: broad notched QRS, no Q, mildly discordant T
            return {{-55, 8, 0.14}, {-4, 9, 0.85}, {12, 6, 0.60}, {58, 18, -0.12}};
        case 3: // R: rSR' pattern with a deep early S
            return {{-55, 8, 0.14}, {-14, 3, -0.30}, {-4, 4, 0.90}, {12, 6, 0.70}, {55, 18, 0.24}};
        case 4: // V: no P, wide bizarre QRS, deep inverted T
            return {{-5, 14, 1.40}, {18, 10, -0.50}, {62, 20, -0.45}};
        case 5: // A: early P riding on the preceding T, otherwise N-like
            return {{-72, 7, 0.24}, {-10, 3, -0.08}, {0, 4, 1.10}, {10, 3, -0.22}, {55, 18, 0.28}};
        case 6: // F: fusion of V and N, intermediate width
            return {{-55, 8, 0.08}, {-2, 8, 1.10}, {14, 6, -0.30}, {58, 19, -0.18}};
        case 7: // f: pacing spike then near-normal QRS
            return {{-28, 1.5, -0.70}, {0, 7, 1.00}, {12, 5, -0.20}, {55, 18, 0.26}};
        case 8: // /: pacing spike then wide paced QRS with discordant T
            return {{-30, 1.5, 0.90}, {2, 11, 1.10}, {22, 8, -0.35}, {62, 20, -0.40}};
        default:
            throw OutOfRange("beat_template: class id " + std::to_string(class_id));
    }
}

inline int class_to_code(int class_id) {
    // class order N L R V A F f /  ->  MIT codes NORMAL LBBB RBBB PVC APC FUSION PFUS PACE
    static constexpr int codes[9] = {0, 1, 2, 3, 5, 8, 6, 38, 12};
    if (class_id < 1 || class_id > 8) throw OutOfRange("class id " + std::to_string(class_id));
    return codes[class_id];
}

// ---------------------------------------------------------------------------
// Record generation
// ---------------------------------------------------------------------------

struct RecordPlan {
    std::string name;
    std::int64_t n_samples = 0; // 0: sized to fit the beats
    std::map<int, int> class_counts;
    std::vector<std::int64_t> early_annotations; // extraction boundary cases
};

inline void generate_record(const std::filesystem::path& dir, const RecordPlan& plan, Rng& rng) {
    Patient pt;
    pt.amp_scale = rng.uniform(0.85, 1.15);
    pt.width_scale = rng.uniform(0.92, 1.08);
    pt.ch1_qrs = rng.uniform(0.45, 0.75) * (rng.uniform() < 0.4 ? -1.0 : 1.0);
    pt.ch1_pt = rng.uniform(0.3, 0.6);
    pt.wander_amp = rng.uniform(0.03, 0.09);
    pt.wander_freq = rng.uniform(0.15, 0.45);
    pt.noise_mv = rng.uniform(0.02, 0.04);

    int total_beats = 0;
    for (const auto& [cls, count] : plan.class_counts) total_beats += count;

    // Shuffled beat order, so classes interleave like a real rhythm strip.
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(total_beats));
    for (const auto& [cls, count] : plan.class_counts)
        for (int i = 0; i < count; ++i) order.push_back(cls);
    rng.shuffle(order);

    std::int64_t n_samples = plan.n_samples;
    const double base_rr = n_samples > 0
                               ? static_cast<double>(n_samples - 300) / std::max(1, total_beats)
                               : rng.uniform(262.0, 295.0);
    if (n_samples == 0)
        n_samples = static_cast<std::int64_t>(base_rr * total_beats) + 300;

    std::vector<double> mv0(static_cast<std::size_t>(n_samples), 0.0);
    std::vector<double> mv1(static_cast<std::size_t>(n_samples), 0.0);

    // Baseline wander plus white noise.
    const double w = 2.0 * 3.14159265358979323846 * pt.wander_freq / 360.0;
    const double phase = rng.uniform(0.0, 6.28);
    for (std::int64_t t = 0; t < n_samples; ++t) {
        const double wander = pt.wander_amp * std::sin(w * static_cast<double>(t) + phase);
        mv0[static_cast<std::size_t>(t)] = wander + pt.noise_mv * rng.normal();
        mv1[static_cast<std::size_t>(t)] = 0.7 * wander + pt.noise_mv * rng.normal();
    }

    std::vector<wfdb::AnnotationEvent> events;
    for (std::int64_t early : plan.early_annotations)
        events.push_back({early, class_to_code(1), 'N'});
    // Rhythm mark near the start, as annotators leave in real files.
    events.push_back({18, 28, '+'});

    double pos = 160.0;
    for (int idx = 0; idx < total_beats; ++idx) {
        const int cls = order[static_cast<std::size_t>(idx)];
        const auto r_peak = static_cast<std::int64_t>(pos);
        if (r_peak >= n_samples - 160) break;
        const double beat_amp = pt.amp_scale * rng.uniform(0.94, 1.06);
        const double beat_width = pt.width_scale * rng.uniform(0.96, 1.04);
        for (const auto& bump : beat_template(cls)) {
            const double sigma = bump.width * beat_width;
            const double c = static_cast<double>(r_peak) + bump.center * beat_width;
            const auto lo = static_cast<std::int64_t>(std::floor(c - 4 * sigma));
            const auto hi = static_cast<std::int64_t>(std::ceil(c + 4 * sigma));
            const bool is_qrs = std::abs(bump.center) < 40.0;
            const double proj = is_qrs ? pt.ch1_qrs : pt.ch1_pt;
            for (std::int64_t t = std::max<std::int64_t>(0, lo);
                 t <= std::min<std::int64_t>(n_samples - 1, hi); ++t) {
                const double d = (static_cast<double>(t) - c) / sigma;
                const double v = beat_amp * bump.amp * std::exp(-0.5 * d * d);
                mv0[static_cast<std::size_t>(t)] += v;
                mv1[static_cast<std::size_t>(t)] += proj * v;
            }
        }
        events.push_back({r_peak, class_to_code(cls), wfdb::symbol_for_code(class_to_code(cls))});
        pos += base_rr + rng.uniform(-8.0, 8.0);
    }

    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b) { return a.sample_index < b.sample_index; });

    auto digitize = [&](const std::vector<double>& mv) {
        std::vector<std::int16_t> adc(mv.size());
        for (std::size_t i = 0; i < mv.size(); ++i) {
            const double v = 1024.0 + mv[i] * 200.0;
            adc[i] = static_cast<std::int16_t>(std::clamp(v, 0.0, 2047.0));
        }
        return adc;
    };
    write_record_files(dir, plan.name, digitize(mv0), digitize(mv1), events);
}

// ---------------------------------------------------------------------------
// Corpus plan: 48 records with the MIT-BIH numbering. LBBB / RBBB / paced
// beats are concentrated in dedicated records, mirroring how the conditions
// appear patient by patient; the leave-out records 104/113/119/208/210
// deliberately carry no L, R or A beats.
// ---------------------------------------------------------------------------

inline std::vector<RecordPlan> corpus_plan() {
    // {record, N, L, R, V, A, F, f, /}
    static constexpr struct {
        const char* name;
        int counts[8];
    } rows[] = {
        {"100", {2239, 0, 0, 1, 33, 0, 0, 0}},
        {"101", {560, 0, 0, 0, 3, 0, 0, 0}},
        {"102", {99, 0, 0, 4, 0, 0, 56, 1028}},
        {"103", {620, 0, 0, 0, 2, 0, 0, 0}},
        {"104", {163, 0, 0, 2, 0, 0, 166, 1024}},
        {"105", {772, 0, 0, 41, 0, 0, 0, 0}},
        {"106", {460, 0, 0, 460, 0, 0, 0, 0}},
        {"107", {0, 0, 0, 59, 0, 0, 0, 757}},
        {"108", {530, 0, 0, 17, 4, 2, 0, 0}},
        {"109", {0, 1308, 0, 38, 0, 2, 0, 0}},
        {"111", {0, 1121, 0, 1, 0, 0, 0, 0}},
        {"112", {759, 0, 0, 0, 2, 0, 0, 0}},
        {"113", {539, 0, 0, 0, 0, 0, 0, 0}},
        {"114", {549, 0, 0, 43, 10, 4, 0, 0}},
        {"115", {585, 0, 0, 0, 0, 0, 0, 0}},
        {"116", {712, 0, 0, 109, 1, 0, 0, 0}},
        {"117", {459, 0, 0, 0, 1, 0, 0, 0}},
        {"118", {0, 0, 1079, 16, 96, 0, 0, 0}},
        {"119", {471, 0, 0, 444, 0, 0, 0, 0}},
        {"121", {558, 0, 0, 1, 1, 0, 0, 0}},
        {"122", {738, 0, 0, 0, 0, 0, 0, 0}},
        {"123", {453, 0, 0, 3, 0, 0, 0, 0}},
        {"124", {0, 0, 483, 47, 2, 5, 0, 0}},
        {"200", {519, 0, 0, 413, 30, 1, 0, 0}},
        {"201", {485, 0, 0, 99, 50, 1, 0, 0}},
        {"202", {614, 0, 0, 19, 36, 1, 0, 0}},
        {"203", {740, 0, 0, 266, 0, 1, 0, 0}},
        {"205", {786, 0, 0, 36, 3, 5, 0, 0}},
        {"207", {0, 764, 43, 53, 53, 0, 0, 0}},
        {"208", {455, 0, 0, 372, 0, 378, 0, 0}},
        {"209", {605, 0, 0, 1, 383, 0, 0, 0}},
        {"210", {480, 0, 0, 289, 0, 30, 0, 0}},
        {"212", {275, 0, 678, 0, 0, 0, 0, 0}},
        {"213", {540, 0, 0, 146, 25, 120, 0, 0}},
        {"214", {0, 1130, 0, 116, 0, 1, 0, 0}},
        {"215", {672, 0, 0, 82, 1, 1, 0, 0}},
        {"217", {122, 0, 0, 81, 0, 0, 240, 1002}},
        {"219", {425, 0, 0, 32, 4, 1, 0, 0}},
        {"220", {410, 0, 0, 0, 94, 0, 0, 0}},
        {"221", {515, 0, 0, 198, 0, 0, 0, 0}},
        {"222", {420, 0, 0, 0, 308, 0, 0, 0}},
        {"223", {604, 0, 0, 237, 72, 7, 0, 0}},
        {"228", {425, 0, 0, 181, 3, 0, 0, 0}},
        {"230", {560, 0, 0, 1, 0, 0, 0, 0}},
        {"231", {157, 0, 620, 1, 1, 1, 0, 0}},
        {"232", {0, 0, 596, 0, 382, 0, 0, 0}},
        {"233", {615, 0, 0, 440, 7, 5, 0, 0}},
        {"234", {675, 0, 0, 2, 0, 0, 0, 0}},
    };
    std::vector<RecordPlan> plans;
    for (const auto& row : rows) {
        RecordPlan plan;
        plan.name = row.name;
        for (int c = 0; c < 8; ++c)
            if (row.counts[c] > 0) plan.class_counts[c + 1] = row.counts[c];
        if (plan.name == "100") plan.n_samples = 650000;
        if (plan.name == "101") plan.early_annotations = {60}; // window underflow case
        plans.push_back(std::move(plan));
    }
    return plans;
}

inline void generate_corpus(const std::filesystem::path& dir, std::uint64_t seed) {
    Rng master(seed);
    const auto plans = corpus_plan();
    for (std::size_t i = 0; i < plans.size(); ++i) {
        Rng rng = master.spawn(i);
        generate_record(dir, plans[i], rng);
    }
}

} // namespace ecgi::synth
