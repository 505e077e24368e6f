#pragma once

#include "ecgi/error.hpp"
#include "ecgi/stats/special.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace ecgi::stats {

struct StatTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string method;
    std::size_t n = 0;
};

// ---------------------------------------------------------------------------
// Shared rank helpers
// ---------------------------------------------------------------------------

namespace detail {

// Midranks (1-based, ties averaged) and the tie-group sizes.
inline std::pair<std::vector<double>, std::vector<std::size_t>> midranks(
    const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::vector<std::size_t> tie_sizes;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        tie_sizes.push_back(j - i + 1);
        i = j + 1;
    }
    return {std::move(ranks), std::move(tie_sizes)};
}

} // namespace detail

// ---------------------------------------------------------------------------
// 95% interval: mean +/- 1.96 sigma over the supplied values (population
// sigma). This is a spread interval, which is why reported bounds can leave
// [0, 1]; both ends are returned unclamped.
// ---------------------------------------------------------------------------
inline std::pair<double, double> confidence_interval_95(const std::vector<double>& values) {
    if (values.size() < 2) throw TooFewValues("confidence_interval_95: need at least 2 values");
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    const double half = 1.96 * std::sqrt(var);
    return {mean - half, mean + half};
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk W, Royston's AS R94 approximation (3 <= n <= 5000).
// ---------------------------------------------------------------------------
inline StatTestResult shapiro_wilk(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw TooFewValues("shapiro_wilk: need n >= 3");
    if (n > 5000) throw OutOfRange("shapiro_wilk: approximation holds for n <= 5000");
    std::sort(x.begin(), x.end());
    if (x.front() == x.back()) throw ConstantInput("shapiro_wilk: constant sample");

    // Blom scores and their normalization.
    std::vector<double> m(n);
    double ssq_m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) /
                               (static_cast<double>(n) + 0.25));
        ssq_m += m[i] * m[i];
    }

    std::vector<double> a(n);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[1] = 0.0;
        a[2] = std::sqrt(0.5);
    } else {
        const double u = 1.0 / std::sqrt(static_cast<double>(n));
        const double rsqrt_ssq = 1.0 / std::sqrt(ssq_m);
        const double cn = m[n - 1] * rsqrt_ssq;
        const double an = cn + u * (0.221157 + u * (-0.147981 + u * (-2.071190 +
                          u * (4.434685 + u * -2.706056))));
        double phi;
        std::size_t tail = 1;
        if (n > 5) {
            tail = 2;
            const double cn1 = m[n - 2] * rsqrt_ssq;
            const double an1 = cn1 + u * (0.042981 + u * (-0.293762 + u * (-1.752461 +
                               u * (5.682633 + u * -3.582633))));
            phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                  (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
        } else {
            phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            a[n - 1] = an;
            a[0] = -an;
        }
        const double scale = 1.0 / std::sqrt(phi);
        for (std::size_t i = tail; i < n - tail; ++i) a[i] = m[i] * scale;
    }

    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double numer = 0, denom = 0;
    for (std::size_t i = 0; i < n; ++i) {
        numer += a[i] * x[i];
        denom += (x[i] - mean) * (x[i] - mean);
    }
    const double W = numer * numer / denom;

    double p;
    const auto nd = static_cast<double>(n);
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274403; // 6/pi
        constexpr double stqr = 1.04719755119659775; // asin(sqrt(3/4))
        p = pi6 * (std::asin(std::sqrt(W)) - stqr);
        p = std::clamp(p, 0.0, 1.0);
    } else if (n <= 11) {
        const double gamma = -2.273 + 0.459 * nd;
        const double y = -std::log(gamma - std::log1p(-W));
        const double mu = 0.5440 + nd * (-0.39978 + nd * (0.025054 + nd * -6.714e-4));
        const double sigma = std::exp(1.3822 + nd * (-0.77857 + nd * (0.062767 + nd * -0.0020322)));
        p = normal_sf((y - mu) / sigma);
    } else {
        const double ln = std::log(nd);
        const double y = std::log1p(-W);
        const double mu = -1.5861 + ln * (-0.31082 + ln * (-0.083751 + ln * 0.0038915));
        const double sigma = std::exp(-0.4803 + ln * (-0.082676 + ln * 0.0030302));
        p = normal_sf((y - mu) / sigma);
    }
    return {W, p, "shapiro-wilk", n};
}

// ---------------------------------------------------------------------------
// Kruskal-Wallis H with tie correction; p from the chi-square tail.
// ---------------------------------------------------------------------------
inline StatTestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw TooFewGroups("kruskal_wallis: need at least 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw TooFewValues("kruskal_wallis: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const auto n = static_cast<double>(pooled.size());
    auto [ranks, tie_sizes] = detail::midranks(pooled);

    double h = 0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        offset += g.size();
        h += rank_sum * rank_sum / static_cast<double>(g.size());
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    double tie_term = 0;
    for (std::size_t t : tie_sizes) {
        const auto td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (correction == 0.0) // every value identical
        return {0.0, 1.0, "kruskal-wallis", pooled.size()};
    h /= correction;

    const double p = chi2_sf(h, static_cast<double>(groups.size() - 1));
    return {h, p, "kruskal-wallis", pooled.size()};
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank, two-sided. Zero differences are discarded. Exact
// distribution (dynamic program over the doubled midranks) for n <= 25,
// normal approximation with tie correction beyond.
// ---------------------------------------------------------------------------
inline StatTestResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    if (a.size() != b.size()) throw LengthMismatch("wilcoxon: unequal lengths");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
    if (diffs.empty()) throw AllZeroDifferences("wilcoxon: all differences are zero");

    const std::size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::abs(diffs[i]);
    auto [ranks, tie_sizes] = detail::midranks(abs_diffs);

    double t_plus = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0) t_plus += ranks[i];
    const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    const double t_minus = total - t_plus;
    const double w = std::min(t_plus, t_minus);

    double p;
    if (n <= 25) {
        // Doubled ranks are integers even with midrank ties; count subset sums.
        std::vector<int> r2(n);
        int grid = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = static_cast<int>(std::llround(2.0 * ranks[i]));
            grid += r2[i];
        }
        std::vector<double> count(static_cast<std::size_t>(grid) + 1, 0.0);
        count[0] = 1.0;
        for (int r : r2)
            for (int s = grid; s >= r; --s) count[static_cast<std::size_t>(s)] +=
                count[static_cast<std::size_t>(s - r)];
        const double denom = std::ldexp(1.0, static_cast<int>(n)); // 2^n
        const int t2 = static_cast<int>(std::llround(2.0 * t_plus));
        double below = 0, above = 0;
        for (int s = 0; s <= grid; ++s) {
            if (s <= t2) below += count[static_cast<std::size_t>(s)];
            if (s >= t2) above += count[static_cast<std::size_t>(s)];
        }
        p = std::min(1.0, 2.0 * std::min(below, above) / denom);
        return {w, p, "wilcoxon-exact", n};
    }

    const auto nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    double tie_term = 0;
    for (std::size_t t : tie_sizes) {
        const auto td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (w - mean) / std::sqrt(var);
    p = std::min(1.0, 2.0 * normal_cdf(z)); // w <= mean by construction
    return {w, p, "wilcoxon-normal", n};
}

// ---------------------------------------------------------------------------
// Kendall tau-b. S = P - Q is computed with a merge-sort inversion count
// (Knight's algorithm); p is exact by permutation enumeration for n <= 8 and
// a tie-corrected normal approximation otherwise.
// ---------------------------------------------------------------------------

namespace detail {

// Inversions of y once sorted by (x, y): exactly the discordant pair count.
inline double sorted_inversions(std::vector<double>& y, std::vector<double>& scratch,
                                std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = (lo + hi) / 2;
    double inv = sorted_inversions(y, scratch, lo, mid) + sorted_inversions(y, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (y[j] < y[i]) {
            inv += static_cast<double>(mid - i);
            scratch[k++] = y[j++];
        } else {
            scratch[k++] = y[i++];
        }
    }
    while (i < mid) scratch[k++] = y[i++];
    while (j < hi) scratch[k++] = y[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              y.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

struct TauParts {
    double s = 0;      // P - Q
    double n1 = 0;     // tie pairs in x
    double n2 = 0;     // tie pairs in y
    double denominator = 0;
};

inline TauParts tau_parts(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    auto pairs_of = [](double t) { return t * (t - 1.0) / 2.0; };
    TauParts parts;
    double n3 = 0; // joint ties
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double joint = 1;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) {
            ++j;
            if (y[order[j]] == y[order[j - 1]])
                ++joint;
            else {
                n3 += pairs_of(joint);
                joint = 1;
            }
        }
        n3 += pairs_of(joint);
        parts.n1 += pairs_of(static_cast<double>(j - i + 1));
        i = j + 1;
    }
    {
        std::vector<double> ys = y;
        std::sort(ys.begin(), ys.end());
        std::size_t k = 0;
        while (k < n) {
            std::size_t j = k;
            while (j + 1 < n && ys[j + 1] == ys[k]) ++j;
            parts.n2 += pairs_of(static_cast<double>(j - k + 1));
            k = j + 1;
        }
    }

    std::vector<double> y_sorted(n), scratch(n);
    for (std::size_t k = 0; k < n; ++k) y_sorted[k] = y[order[k]];
    const double discordant = sorted_inversions(y_sorted, scratch, 0, n);

    const double n0 = pairs_of(static_cast<double>(n));
    const double tied_any = parts.n1 + parts.n2 - n3;
    const double concordant = n0 - tied_any - discordant;
    parts.s = concordant - discordant;
    parts.denominator = std::sqrt((n0 - parts.n1) * (n0 - parts.n2));
    return parts;
}

} // namespace detail

inline StatTestResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch("kendall_tau: unequal lengths");
    const std::size_t n = x.size();
    if (n < 2) throw TooFewValues("kendall_tau: need n >= 2");

    const auto parts = detail::tau_parts(x, y);
    if (parts.denominator == 0.0) throw ConstantInput("kendall_tau: a ranking is constant");
    const double tau = parts.s / parts.denominator;

    double p;
    if (n <= 8) {
        std::vector<double> perm = y;
        std::sort(perm.begin(), perm.end());
        std::size_t extreme = 0, count = 0;
        do {
            ++count;
            const auto pp = detail::tau_parts(x, perm);
            if (pp.denominator > 0 && std::abs(pp.s / pp.denominator) >= std::abs(tau) - 1e-12)
                ++extreme;
        } while (std::next_permutation(perm.begin(), perm.end()));
        p = static_cast<double>(extreme) / static_cast<double>(count);
        return {tau, p, "kendall-exact", n};
    }

    // tie-corrected variance of S
    const auto nd = static_cast<double>(n);
    double vt = 0, vu = 0, t2 = 0, u2 = 0, t3 = 0, u3 = 0;
    {
        auto accumulate_ties = [](const std::vector<double>& v, double& vtie, double& s2, double& s3) {
            std::vector<double> sorted = v;
            std::sort(sorted.begin(), sorted.end());
            std::size_t i = 0;
            while (i < sorted.size()) {
                std::size_t j = i;
                while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
                const auto t = static_cast<double>(j - i + 1);
                vtie += t * (t - 1.0) * (2.0 * t + 5.0);
                s2 += t * (t - 1.0);
                s3 += t * (t - 1.0) * (t - 2.0);
                i = j + 1;
            }
        };
        accumulate_ties(x, vt, t2, t3);
        accumulate_ties(y, vu, u2, u3);
    }
    const double v0 = nd * (nd - 1.0) * (2.0 * nd + 5.0);
    double var = (v0 - vt - vu) / 18.0;
    var += t2 * u2 / (2.0 * nd * (nd - 1.0));
    var += t3 * u3 / (9.0 * nd * (nd - 1.0) * (nd - 2.0));
    const double z = parts.s / std::sqrt(var);
    p = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    return {tau, p, "kendall-normal", n};
}

// Pairwise tau/p over a family of equal-length vectors.
struct KendallMatrix {
    std::vector<std::vector<double>> tau;
    std::vector<std::vector<double>> p;
};

inline KendallMatrix kendall_matrix(const std::vector<std::vector<double>>& vectors) {
    if (vectors.size() < 2) throw TooFewGroups("kendall_matrix: need at least 2 vectors");
    const std::size_t m = vectors.size();
    KendallMatrix out;
    out.tau.assign(m, std::vector<double>(m, 1.0));
    out.p.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto r = kendall_tau(vectors[i], vectors[j]);
            out.tau[i][j] = out.tau[j][i] = r.statistic;
            out.p[i][j] = out.p[j][i] = r.p_value;
        }
    }
    return out;
}

} // namespace ecgi::stats
