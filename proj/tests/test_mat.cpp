#include "ecgi/mat.hpp"
#include "ecgi/rng.hpp"

#include <doctest.h>

#include <cstring>

using namespace ecgi;

namespace {

template <typename T>
Mat<T> random_mat(std::size_t r, std::size_t c, Rng& rng) {
    Mat<T> m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-1, 1));
    return m;
}

template <typename T>
Mat<T> naive_matmul(const Mat<T>& A, const Mat<T>& B, Trans ta, Trans tb) {
    const std::size_t M = ta == Trans::N ? A.rows() : A.cols();
    const std::size_t K = ta == Trans::N ? A.cols() : A.rows();
    const std::size_t N = tb == Trans::N ? B.cols() : B.rows();
    Mat<T> C(M, N);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) {
            T s = 0;
            for (std::size_t k = 0; k < K; ++k) {
                const T a = ta == Trans::N ? A(m, k) : A(k, m);
                const T b = tb == Trans::N ? B(k, n) : B(n, k);
                s += a * b;
            }
            C(m, n) = s;
        }
    return C;
}

} // namespace

TEST_CASE("matmul matches the naive triple loop over shapes and transposes") {
    Rng rng(42);
    const std::size_t shapes[][3] = {{1, 1, 1},   {7, 5, 3},    {8, 32, 16}, {33, 9, 129},
                                     {64, 64, 64}, {100, 3, 50}, {17, 130, 40}};
    for (auto [M, N, K] : shapes) {
        for (Trans ta : {Trans::N, Trans::T}) {
            for (Trans tb : {Trans::N, Trans::T}) {
                Mat<double> A = random_mat<double>(ta == Trans::N ? M : K, ta == Trans::N ? K : M, rng);
                Mat<double> B = random_mat<double>(tb == Trans::N ? K : N, tb == Trans::N ? N : K, rng);
                Mat<double> C;
                matmul(A, B, C, ta, tb);
                Mat<double> R = naive_matmul(A, B, ta, tb);
                double worst = 0;
                for (std::size_t i = 0; i < C.size(); ++i)
                    worst = std::max(worst, std::abs(C.data()[i] - R.data()[i]));
                CAPTURE(M);
                CAPTURE(N);
                CAPTURE(K);
                CHECK(worst < 1e-12);
            }
        }
    }
}

TEST_CASE("matmul accumulate adds onto the existing values") {
    Rng rng(7);
    Mat<float> A = random_mat<float>(20, 30, rng);
    Mat<float> B = random_mat<float>(30, 40, rng);
    Mat<float> C;
    matmul(A, B, C);
    Mat<float> twice = C;
    matmul(A, B, twice, Trans::N, Trans::N, /*accumulate=*/true);
    for (std::size_t i = 0; i < C.size(); ++i)
        CHECK(twice.data()[i] == doctest::Approx(2.0f * C.data()[i]).epsilon(1e-5));
}

TEST_CASE("gemm results are bit-identical for any thread count") {
    Rng rng(3);
    Mat<float> A = random_mat<float>(301, 517, rng);
    Mat<float> B = random_mat<float>(517, 129, rng);
    Mat<float> C1, C2;
    set_threads(1);
    matmul(A, B, C1);
    set_threads(2);
    matmul(A, B, C2);
    set_threads(2);
    CHECK(std::memcmp(C1.data(), C2.data(), C1.size() * sizeof(float)) == 0);
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) hits[i].fetch_add(1);
    });
    for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("rng streams are deterministic and spawn is consumption-independent") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng parent(9);
    Rng child_early = parent.spawn(4);
    parent.uniform();
    parent.normal();
    Rng child_late = parent.spawn(4);
    CHECK(child_early.next_u64() == child_late.next_u64());
}

TEST_CASE("rng uniform and normal have sane moments") {
    Rng rng(11);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));

    std::vector<int> buckets(10, 0);
    for (int i = 0; i < n; ++i) ++buckets[static_cast<std::size_t>(rng.uniform() * 10)];
    for (int c : buckets) CHECK(std::abs(c - n / 10) < 800);
}
