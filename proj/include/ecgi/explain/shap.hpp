#pragma once

#include "ecgi/error.hpp"
#include "ecgi/model/classifier.hpp"
#include "ecgi/rng.hpp"
#include "ecgi/segment.hpp"

#include <array>
#include <cmath>
#include <set>
#include <vector>

namespace ecgi::explain {

struct ShapValues {
    std::array<double, kNumSegments> phi{};
    double base_value = 0;       // model output on the all-masked beat
    double explained_output = 0; // model output at x
    int explained_class = 0;
};

namespace shap_detail {

inline double binomial(std::size_t n, std::size_t k) {
    double r = 1;
    for (std::size_t i = 0; i < k; ++i)
        r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return r;
}

// Shapley kernel weight for a coalition of size s out of m players.
inline double kernel_weight(std::size_t m, std::size_t s) {
    return static_cast<double>(m - 1) /
           (binomial(m, s) * static_cast<double>(s) * static_cast<double>(m - s));
}

// Gaussian elimination with partial pivoting; throws on a degenerate system.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            throw SingularSystem("kernel_shap: degenerate coalition sample");
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

} // namespace shap_detail

// KernelSHAP over the 11 segment features. A masked segment's 20 samples are
// replaced by the background values for those positions. The weighted least
// squares is solved with the efficiency constraint substituted in, so
// base + sum(phi) equals the explained output exactly even for sampled
// coalitions. With n_coalitions >= 2^11 every coalition is enumerated and the
// result equals the exact Shapley values.
inline ShapValues kernel_shap(const model::ClassifierModel& model, const double* beat,
                              const std::array<double, kBeatLength>& background,
                              std::size_t n_coalitions, std::uint64_t seed) {
    constexpr std::size_t m = kNumSegments;
    if (!model.trained()) throw UntrainedModel("kernel_shap: model was never fitted");
    if (n_coalitions < 2 * m + 2)
        throw OutOfRange("kernel_shap: need at least " + std::to_string(2 * m + 2) +
                         " coalitions");

    // evaluate f on a masked beat
    Mat<double> probe(1, kBeatLength);
    int explained_class = -1;
    auto evaluate = [&](unsigned mask) {
        for (std::size_t k = 0; k < m; ++k) {
            const bool present = mask & (1u << k);
            for (std::size_t j = k * kSegmentWidth; j < (k + 1) * kSegmentWidth; ++j)
                probe(0, j) = present ? beat[j] : background[j];
        }
        const auto proba = model.predict_proba(probe);
        if (explained_class < 0) throw Error("kernel_shap: class not fixed yet");
        return proba(0, static_cast<std::size_t>(explained_class));
    };

    {
        std::copy(beat, beat + kBeatLength, probe.row(0));
        const auto proba = model.predict_proba(probe);
        explained_class = 1;
        for (int c = 2; c < static_cast<int>(nn::kClasses); ++c)
            if (proba(0, static_cast<std::size_t>(c)) >
                proba(0, static_cast<std::size_t>(explained_class)))
                explained_class = c;
    }

    constexpr unsigned full_mask = (1u << m) - 1;
    const double f_full = evaluate(full_mask);
    const double f_empty = evaluate(0);
    const double delta = f_full - f_empty;

    // coalition selection: full size levels in kernel-weight order, then a
    // seeded sample without replacement from the first level that overflows
    std::vector<unsigned> coalitions;
    if (n_coalitions >= (1u << m) - 2) {
        for (unsigned mask = 1; mask < full_mask; ++mask) coalitions.push_back(mask);
    } else {
        std::size_t budget = n_coalitions - 2;
        Rng rng(seed);
        std::set<unsigned> chosen;
        for (std::size_t s = 1; s <= m / 2 && budget > 0; ++s) {
            std::vector<unsigned> level;
            for (unsigned mask = 1; mask < full_mask; ++mask) {
                const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
                if (bits == s || bits == m - s) level.push_back(mask);
            }
            if (level.size() <= budget) {
                for (unsigned mask : level) chosen.insert(mask);
                budget -= level.size();
            } else {
                rng.shuffle(level);
                for (std::size_t i = 0; i < budget; ++i) chosen.insert(level[i]);
                budget = 0;
            }
        }
        coalitions.assign(chosen.begin(), chosen.end());
    }

    // weighted least squares with phi_last eliminated by the efficiency
    // constraint: phi_last = delta - sum(others)
    constexpr std::size_t vars = m - 1;
    std::vector<std::vector<double>> ata(vars, std::vector<double>(vars, 0.0));
    std::vector<double> atb(vars, 0.0);
    for (unsigned mask : coalitions) {
        const auto s = static_cast<std::size_t>(__builtin_popcount(mask));
        const double w = shap_detail::kernel_weight(m, s);
        const double z_last = (mask >> (m - 1)) & 1u ? 1.0 : 0.0;
        double row[vars];
        for (std::size_t i = 0; i < vars; ++i)
            row[i] = ((mask >> i) & 1u ? 1.0 : 0.0) - z_last;
        const double y = evaluate(mask) - f_empty - z_last * delta;
        for (std::size_t i = 0; i < vars; ++i) {
            if (row[i] == 0.0) continue;
            atb[i] += w * row[i] * y;
            for (std::size_t j = 0; j < vars; ++j) ata[i][j] += w * row[i] * row[j];
        }
    }

    const auto head = shap_detail::solve(std::move(ata), std::move(atb));
    ShapValues out;
    out.base_value = f_empty;
    out.explained_output = f_full;
    out.explained_class = explained_class;
    double sum = 0;
    for (std::size_t i = 0; i < vars; ++i) {
        out.phi[i] = head[i];
        sum += head[i];
    }
    out.phi[m - 1] = delta - sum;
    return out;
}

// Background beat: per-position mean over a dataset (a single synthetic row).
inline std::array<double, kBeatLength> background_mean(const BeatDataset& dataset) {
    if (dataset.empty()) throw EmptySubset("background_mean: empty dataset");
    std::array<double, kBeatLength> bg{};
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double* row = dataset.row(i);
        for (std::size_t j = 0; j < kBeatLength; ++j) bg[j] += row[j];
    }
    for (auto& v : bg) v /= static_cast<double>(dataset.size());
    return bg;
}

} // namespace ecgi::explain
