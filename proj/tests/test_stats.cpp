#include "ecgi/rng.hpp"
#include "ecgi/stats/metrics.hpp"
#include "ecgi/stats/special.hpp"
#include "ecgi/stats/tests.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace ecgi;
using namespace ecgi::stats;

namespace {

// Independent oracle: two-sided exact Wilcoxon p by enumerating all 2^n sign
// assignments over the observed midranks.
double wilcoxon_sign_enumeration_p(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::abs(diffs[i]);

    std::vector<double> ranks(n);
    {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = 0.5 * double(i + 1 + j + 1);
            i = j + 1;
        }
    }
    double observed = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0) observed += ranks[i];

    std::size_t below = 0, above = 0;
    const std::size_t total = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < total; ++mask) {
        double t_plus = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t{1} << i)) t_plus += ranks[i];
        if (t_plus <= observed + 1e-12) ++below;
        if (t_plus >= observed - 1e-12) ++above;
    }
    return std::min(1.0, 2.0 * double(std::min(below, above)) / double(total));
}

// Independent oracle: tau-b by direct pair counting.
double kendall_pair_count_tau(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double conc = 0, disc = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0 && dy == 0) continue;
            if (dx == 0)
                ++tx;
            else if (dy == 0)
                ++ty;
            else if (dx * dy > 0)
                ++conc;
            else
                ++disc;
        }
    const double n0 = double(n) * double(n - 1) / 2.0;
    double n1 = 0, n2 = 0;
    auto tie_pairs = [&](const std::vector<double>& v) {
        double total = 0;
        std::vector<double> s = v;
        std::sort(s.begin(), s.end());
        std::size_t i = 0;
        while (i < s.size()) {
            std::size_t j = i;
            while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
            const double t = double(j - i + 1);
            total += t * (t - 1) / 2;
            i = j + 1;
        }
        return total;
    };
    n1 = tie_pairs(x);
    n2 = tie_pairs(y);
    return (conc - disc) / std::sqrt((n0 - n1) * (n0 - n2));
}

} // namespace

TEST_CASE("special functions match reference values") {
    // chi-square survival function
    CHECK(chi2_sf(27.0 / 7.0, 1) == doctest::Approx(0.04953461343562649).epsilon(1e-12));
    CHECK(chi2_sf(3.5, 2) == doctest::Approx(0.1737739434504451).epsilon(1e-12));
    CHECK(chi2_sf(10.0, 5) == doctest::Approx(0.07523524614651217).epsilon(1e-12));
    CHECK(chi2_sf(25.0, 3) == doctest::Approx(1.5440498291101365e-05).epsilon(1e-10));
    CHECK(chi2_sf(0.001, 1) == doctest::Approx(0.9747728793699604).epsilon(1e-12));
    CHECK(chi2_sf(80.0, 7) == doctest::Approx(1.377501829742618e-14).epsilon(1e-8));

    // normal tail
    CHECK(normal_sf(0.5) == doctest::Approx(0.3085375387259869).epsilon(1e-14));
    CHECK(normal_sf(1.96) == doctest::Approx(0.024997895148220435).epsilon(1e-13));
    CHECK(normal_sf(-2.3) == doctest::Approx(0.9892758899783242).epsilon(1e-14));
    CHECK(normal_sf(4.0) == doctest::Approx(3.167124183311986e-05).epsilon(1e-12));

    // quantile inverts the cdf
    for (double p : {1e-6, 0.01, 0.31, 0.5, 0.77, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("confidence_interval_95 is a symmetric spread around the mean") {
    auto [lo, hi] = confidence_interval_95({0.9, 0.9, 0.9});
    CHECK(lo == doctest::Approx(0.9));
    CHECK(hi == doctest::Approx(0.9));

    auto [lo2, hi2] = confidence_interval_95({0.5, 0.7, 0.9, 1.1});
    CHECK((lo2 + hi2) / 2 == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(hi2 > 1.0); // spread intervals may leave [0, 1]

    CHECK_THROWS_AS(confidence_interval_95({0.5}), TooFewValues);
}

TEST_CASE("shapiro_wilk reproduces reference fixtures") {
    // classic 11-point sample
    auto r = shapiro_wilk({148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236});
    CHECK(r.statistic == doctest::Approx(0.7888146948631716).epsilon(1e-3));
    CHECK(r.p_value == doctest::Approx(0.006703814061898823).epsilon(2e-2));

    auto r20 = shapiro_wilk({13.381051, 9.068125, 10.06564, 10.815033, 8.422154, 10.004131,
                             9.998219, 6.490551, 12.035316, 11.200997, 8.749142, 9.656903,
                             11.010599, 9.477287, 9.514502, 7.093517, 11.109161, 10.247762,
                             10.54892, 6.946951});
    CHECK(r20.statistic == doctest::Approx(0.9682290509446567).epsilon(1e-3));
    CHECK(r20.p_value == doctest::Approx(0.7171243367767771).epsilon(1e-2));

    auto r12 = shapiro_wilk({0.550798, 0.708148, 0.290905, 0.510828, 0.892947, 0.896293,
                             0.125585, 0.207243, 0.051467, 0.44081, 0.029876, 0.456833});
    CHECK(r12.statistic == doctest::Approx(0.9371703613705509).epsilon(1e-3));
    CHECK(r12.p_value == doctest::Approx(0.46230764029413185).epsilon(1e-2));

    auto r30 = shapiro_wilk({0.19878,  0.019667, 0.622164, 1.290744, 0.545078, 0.664418,
                             0.012863, 0.668204, 2.843984, 1.902435, 1.309202, 0.115115,
                             2.243413, 1.94599,  0.180427, 1.00058,  0.020696, 0.124133,
                             0.380335, 0.171871, 1.422874, 1.705263, 0.422547, 0.383898,
                             0.118402, 0.087688, 1.247319, 0.91515,  0.057283, 0.653537});
    CHECK(r30.statistic == doctest::Approx(0.8726168876607211).epsilon(1e-3));
    CHECK(r30.p_value == doctest::Approx(0.0019166569084430591).epsilon(5e-2));

    auto r5 = shapiro_wilk({0.441227, -0.33087, 2.430771, -0.252092, 0.10961});
    CHECK(r5.statistic == doctest::Approx(0.7807717467735712).epsilon(1e-3));
    CHECK(r5.p_value == doctest::Approx(0.055967155951022786).epsilon(5e-2));

    auto r3 = shapiro_wilk({1.0, 2.5, 2.9});
    CHECK(r3.statistic == doctest::Approx(0.899501661129568).epsilon(1e-3));
    CHECK(r3.p_value == doctest::Approx(0.383917196063138).epsilon(2e-2));

    CHECK_THROWS_AS(shapiro_wilk({1.0, 2.0}), TooFewValues);
    CHECK_THROWS_AS(shapiro_wilk({3.0, 3.0, 3.0, 3.0}), ConstantInput);
}

TEST_CASE("kruskal_wallis: hand example, identical groups, fixtures") {
    auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}});
    CHECK(r.statistic == doctest::Approx(27.0 / 7.0).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(0.049534613435626915).epsilon(1e-9));

    auto same = kruskal_wallis({{2, 2, 2}, {2, 2}});
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    auto r3 = kruskal_wallis({{1.1, 2.3, 3.1, 0.7}, {4.2, 1.9, 2.2}, {0.4, 0.5, 5.5, 3.3, 2.0}});
    CHECK(r3.statistic == doctest::Approx(0.4256410256410277).epsilon(1e-10));
    CHECK(r3.p_value == doctest::Approx(0.8083012039005574).epsilon(1e-10));

    auto ties = kruskal_wallis({{1, 2, 2, 3}, {2, 3, 3, 4}, {1, 1, 2, 5}});
    CHECK(ties.statistic == doctest::Approx(2.2266791044776175).epsilon(1e-10));
    CHECK(ties.p_value == doctest::Approx(0.32846021738603914).epsilon(1e-10));

    CHECK_THROWS_AS(kruskal_wallis({{1.0, 2.0}}), TooFewGroups);
}

TEST_CASE("wilcoxon_signed_rank: spec example, fixtures, antisymmetry") {
    // six strictly positive differences: W = 0, exact p = 2/64
    std::vector<double> six = {1, 2, 3, 4, 5, 6}, zeros(6, 0.0);
    auto r = wilcoxon_signed_rank(six, zeros);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(2.0 / 64.0).epsilon(1e-12));

    // tie-free pairs, where sign enumeration and the tabulated distribution agree
    std::vector<double> a = {125.0, 115.0, 130.5, 140.0, 141.0, 115.5, 140.2, 125.3, 140.8, 135.1};
    std::vector<double> b = {110.0, 122.0, 125.0, 120.0, 140.0, 124.0, 123.0, 137.0, 135.0, 145.0};
    auto paired = wilcoxon_signed_rank(a, b);
    CHECK(paired.statistic == doctest::Approx(22.0));
    CHECK(paired.p_value == doctest::Approx(0.625).epsilon(1e-10));

    auto swapped = wilcoxon_signed_rank(b, a);
    CHECK(swapped.p_value == doctest::Approx(paired.p_value).epsilon(1e-12));

    CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), AllZeroDifferences);
}

TEST_CASE("wilcoxon exact p matches full sign enumeration for n <= 12") {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 3 + rng.index(10);
        std::vector<double> a(n), b(n, 0.0);
        for (auto& v : a) {
            v = std::round(rng.uniform(-5, 5));
            if (v == 0) v = 1;
        }
        const double expected = wilcoxon_sign_enumeration_p(a);
        const auto got = wilcoxon_signed_rank(a, b);
        CHECK(got.p_value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon normal approximation matches the reference beyond n=25") {
    std::vector<double> a = {0.001, -0.29, -1.116, -0.013, -0.378, -0.481, -1.517, -0.491,
                             -0.241, -0.648, 0.636, 1.74, 0.297, 0.708, 1.823, 0.431,
                             1.543, -0.901, -0.137, 1.298, 0.675, 0.032, 0.918, 0.381,
                             0.516, -0.355, 0.209, 0.328, -0.498, -2.092};
    std::vector<double> b = {0.218, 2.465, -3.488, -0.626, -0.305, 0.088, -0.087, 0.851,
                             1.363, 1.041, 0.28, 1.984, 0.097, 1.444, 1.747, -0.192,
                             3.76, -0.751, -0.476, 2.423, -0.236, -0.171, 0.516, -1.293,
                             -1.84, -0.113, -0.147, -0.034, 0.571, -2.691};
    auto r = wilcoxon_signed_rank(a, b);
    CHECK(r.statistic == doctest::Approx(215.0));
    CHECK(r.p_value == doctest::Approx(0.718880444456163).epsilon(1e-10));
}

TEST_CASE("kendall_tau: extremes, fixtures, monotone invariance") {
    std::vector<double> asc = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> desc(asc.rbegin(), asc.rend());
    CHECK(kendall_tau(asc, asc).statistic == doctest::Approx(1.0));
    CHECK(kendall_tau(asc, desc).statistic == doctest::Approx(-1.0));

    // tau is invariant under monotone transforms of either input
    std::vector<double> x = {0.3, 1.5, -2, 0.9, 4.1, -0.7, 2.2, 3.3, 1.1, -1.4};
    std::vector<double> y = {1.2, 0.5, 0.8, -0.1, 2.2, 1.9, -3, 0.4, 2.5, 1.0};
    std::vector<double> fx(x.size()), gy(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        fx[i] = std::exp(x[i]);
        gy[i] = 2 * y[i] + 7;
    }
    CHECK(kendall_tau(fx, gy).statistic == doctest::Approx(kendall_tau(x, y).statistic));

    // scipy fixtures
    auto ties5 = kendall_tau({12, 2, 1, 12, 2}, {1, 4, 7, 1, 0});
    CHECK(ties5.statistic == doctest::Approx(-0.4714045207910316).epsilon(1e-12));

    auto ties12 = kendall_tau({1, 2, 2, 3, 3, 3, 4, 5, 5, 6, 7, 7},
                              {2, 1, 3, 3, 2, 4, 6, 5, 7, 6, 6, 8});
    CHECK(ties12.statistic == doctest::Approx(0.7438270555206971).epsilon(1e-12));
    CHECK(ties12.p_value == doctest::Approx(0.0014947159508454618).epsilon(1e-9));

    CHECK_THROWS_AS(kendall_tau({1.0}, {2.0}), TooFewValues);
    CHECK_THROWS_AS(kendall_tau({1, 1, 1}, {1, 2, 3}), ConstantInput);
}

TEST_CASE("kendall exact p equals the permutation definition on length 7") {
    auto r = kendall_tau({1, 2, 3, 4, 5, 6, 7}, {1, 3, 6, 2, 7, 5, 4});
    CHECK(r.statistic == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.3813492063492063).epsilon(1e-12));
}

TEST_CASE("kendall tau matches the pair-count oracle on random cases") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.index(7);
        std::vector<double> x(n), y(n);
        for (auto& v : x) v = std::round(rng.uniform(0, 5));
        for (auto& v : y) v = std::round(rng.uniform(0, 5));
        // Skip degenerate constant rankings.
        if (std::equal(x.begin() + 1, x.end(), x.begin()) ||
            std::equal(y.begin() + 1, y.end(), y.begin())) {
            continue;
        }
        const double expected = kendall_pair_count_tau(x, y);
        CHECK(kendall_tau(x, y).statistic == doctest::Approx(expected).epsilon(1e-12));
    }

    // and on longer inputs, exercising the merge-sort path
    auto n40_x = std::vector<double>(40);
    auto n40_y = std::vector<double>(40);
    Rng rng2(5);
    for (auto& v : n40_x) v = rng2.normal();
    for (auto& v : n40_y) v = rng2.normal();
    CHECK(kendall_tau(n40_x, n40_y).statistic ==
          doctest::Approx(kendall_pair_count_tau(n40_x, n40_y)).epsilon(1e-12));
}

TEST_CASE("kendall_matrix is symmetric with unit diagonal") {
    std::vector<std::vector<double>> vecs = {
        {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11},
        {2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 11},
        {11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1},
    };
    auto m = kendall_matrix(vecs);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(m.tau[i][i] == 1.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(m.tau[i][j] == m.tau[j][i]);
            CHECK(m.p[i][j] == m.p[j][i]);
        }
    }
    CHECK(m.tau[0][2] == doctest::Approx(-1.0));
}

TEST_CASE("metrics: perfect, constant, and hand-counted confusions") {
    std::vector<int> truth = {1, 2, 3, 4, 5, 6, 7, 8, 1, 2};
    auto perfect = metrics(truth, truth);
    CHECK(perfect.accuracy == 1.0);
    for (int c = 0; c < 8; ++c) CHECK(perfect.f1[c] == 1.0);

    // all predictions one class against balanced truth
    std::vector<int> balanced, ones;
    for (int c = 1; c <= 8; ++c)
        for (int i = 0; i < 5; ++i) {
            balanced.push_back(c);
            ones.push_back(1);
        }
    auto constant = metrics(balanced, ones);
    CHECK(constant.accuracy == doctest::Approx(1.0 / 8.0));
    CHECK(constant.macro_recall == doctest::Approx(1.0 / 8.0));
    CHECK(constant.divide_by_zero); // classes 2..8 were never predicted

    // 3-class toy confusion, counted by hand:
    //   true 1: predicted 1,1,2 ; true 2: predicted 2,3 ; true 3: predicted 3
    std::vector<int> t = {1, 1, 1, 2, 2, 3};
    std::vector<int> p = {1, 1, 2, 2, 3, 3};
    auto rep = metrics(t, p);
    CHECK(rep.confusion[0][0] == 2);
    CHECK(rep.confusion[0][1] == 1);
    CHECK(rep.confusion[1][1] == 1);
    CHECK(rep.confusion[1][2] == 1);
    CHECK(rep.confusion[2][2] == 1);
    CHECK(rep.accuracy == doctest::Approx(4.0 / 6.0));
    CHECK(rep.precision[0] == doctest::Approx(1.0));
    CHECK(rep.recall[0] == doctest::Approx(2.0 / 3.0));
    CHECK(rep.precision[1] == doctest::Approx(0.5));
    CHECK(rep.precision[2] == doctest::Approx(0.5));
    CHECK(rep.f1[0] == doctest::Approx(0.8));

    // weighted f1 lies between min and max per-class f1 over supported classes
    double lo = 1e9, hi = -1e9;
    for (int c = 0; c < 3; ++c) {
        lo = std::min(lo, rep.f1[c]);
        hi = std::max(hi, rep.f1[c]);
    }
    // rescale: weighted average only over classes with support
    CHECK(rep.weighted_f1 >= lo * (6.0 / 6.0) - 1e-12);
    CHECK(rep.weighted_f1 <= hi + 1e-12);

    CHECK_THROWS_AS(metrics({1, 2}, {1}), LengthMismatch);
}
