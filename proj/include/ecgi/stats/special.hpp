#pragma once

#include "ecgi/error.hpp"

#include <cmath>

namespace ecgi::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / 1.4142135623730950488); }

// Quantile via bisection on the cdf: ~1 ulp accurate, no coefficient tables.
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw OutOfRange("normal_quantile: p outside (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Regularized upper incomplete gamma Q(a, x): series for small x, continued
// fraction otherwise.
inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw OutOfRange("gamma_q: invalid arguments");
    if (x == 0.0) return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double term = 1.0 / a;
        double sum = term;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-17) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-17) break;
    }
    return h * std::exp(log_prefix);
}

inline double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

} // namespace ecgi::stats
