#pragma once

#include "ecgi/error.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace ecgi::stats {

inline constexpr int kMetricClasses = 8;

// Confusion matrix over classes 1..8 plus the derived per-class and
// aggregate scores. Zero-support classes score 0 and raise the flag.
struct MetricsReport {
    std::array<std::array<std::size_t, kMetricClasses>, kMetricClasses> confusion{}; // [true][pred]
    std::array<double, kMetricClasses> precision{};
    std::array<double, kMetricClasses> recall{};
    std::array<double, kMetricClasses> f1{};
    std::array<std::size_t, kMetricClasses> support{};
    double accuracy = 0;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
    bool divide_by_zero = false;

    std::size_t total() const {
        std::size_t t = 0;
        for (std::size_t s : support) t += s;
        return t;
    }
};

inline MetricsReport metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw LengthMismatch("metrics: unequal lengths");
    MetricsReport rep;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 1 || t > kMetricClasses || p < 1 || p > kMetricClasses)
            throw OutOfRange("metrics: labels must be in 1..8");
        ++rep.confusion[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(p - 1)];
    }

    std::size_t correct = 0;
    for (int c = 0; c < kMetricClasses; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        std::size_t tp = rep.confusion[cu][cu];
        std::size_t actual = 0, predicted = 0;
        for (int k = 0; k < kMetricClasses; ++k) {
            actual += rep.confusion[cu][static_cast<std::size_t>(k)];
            predicted += rep.confusion[static_cast<std::size_t>(k)][cu];
        }
        correct += tp;
        rep.support[cu] = actual;
        if (predicted == 0 || actual == 0) rep.divide_by_zero = true;
        rep.precision[cu] = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        rep.recall[cu] = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        const double pr = rep.precision[cu] + rep.recall[cu];
        rep.f1[cu] = pr > 0 ? 2.0 * rep.precision[cu] * rep.recall[cu] / pr : 0.0;
    }

    const auto total = static_cast<double>(y_true.size());
    rep.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
    for (int c = 0; c < kMetricClasses; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const double w = static_cast<double>(rep.support[cu]) / total;
        rep.macro_precision += rep.precision[cu] / kMetricClasses;
        rep.macro_recall += rep.recall[cu] / kMetricClasses;
        rep.macro_f1 += rep.f1[cu] / kMetricClasses;
        rep.weighted_precision += w * rep.precision[cu];
        rep.weighted_recall += w * rep.recall[cu];
        rep.weighted_f1 += w * rep.f1[cu];
    }
    return rep;
}

} // namespace ecgi::stats
