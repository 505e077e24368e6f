#pragma once

#include <algorithm>
#include <atomic>
#include <cassert>
#include <condition_variable>
#include <cstddef>
#include <cstring>
#include <functional>
#include <mutex>
#include <new>
#include <thread>
#include <vector>

namespace ecgi {

// ---------------------------------------------------------------------------
// Thread pool.
//
// One persistent pool per process; gemm and the fold runners share it. Work is
// split into static contiguous chunks, and every accumulation order is fixed
// per output element, so results are bit-identical for any thread count.
// ---------------------------------------------------------------------------
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    void set_threads(int n) {
        std::lock_guard<std::mutex> guard(api_mutex_);
        stop_workers();
        n_threads_ = std::max(1, n);
        start_workers();
    }

    int threads() const { return n_threads_; }

    // Runs fn(chunk) for chunk in [0, n_chunks). Serial when nested or single.
    void run(int n_chunks, const std::function<void(int)>& fn) {
        if (n_chunks <= 0) return;
        if (in_worker_ || n_threads_ == 1 || n_chunks == 1) {
            for (int c = 0; c < n_chunks; ++c) fn(c);
            return;
        }
        std::lock_guard<std::mutex> guard(api_mutex_);
        auto job = std::make_shared<Job>();
        job->fn = &fn;
        job->n_chunks = n_chunks;
        job->pending.store(n_chunks, std::memory_order_relaxed);
        {
            std::lock_guard<std::mutex> lk(mutex_);
            job_ = job;
            ++generation_;
        }
        cv_.notify_all();
        in_worker_ = true; // nested parallel sections on this thread run serially
        execute(*job);
        in_worker_ = false;
        std::unique_lock<std::mutex> lk(mutex_);
        done_cv_.wait(lk, [&] { return job->pending.load(std::memory_order_acquire) == 0; });
        job_.reset();
    }

    ~ThreadPool() { stop_workers(); }

private:
    ThreadPool() {
        n_threads_ = static_cast<int>(std::thread::hardware_concurrency());
        if (n_threads_ < 1) n_threads_ = 1;
        start_workers();
    }

    struct Job {
        const std::function<void(int)>* fn = nullptr;
        std::atomic<int> next{0};
        std::atomic<int> pending{0};
        int n_chunks = 0;
    };

    void start_workers() {
        stopping_ = false;
        const int workers = n_threads_ - 1;
        for (int i = 0; i < workers; ++i) {
            workers_.emplace_back([this] {
                in_worker_ = true;
                std::uint64_t seen = 0;
                for (;;) {
                    // brief spin keeps the wake latency off the fast path when
                    // parallel sections arrive back to back
                    for (int spin = 0; spin < 20000; ++spin) {
                        if (generation_relaxed() != seen || stopping_) break;
#if defined(__x86_64__) || defined(__i386__)
                        __builtin_ia32_pause();
#endif
                    }
                    std::shared_ptr<Job> job;
                    {
                        std::unique_lock<std::mutex> lk(mutex_);
                        cv_.wait(lk, [&] { return stopping_ || generation_ != seen; });
                        if (stopping_) return;
                        seen = generation_;
                        job = job_;
                    }
                    if (job) execute(*job);
                }
            });
        }
    }

    std::uint64_t generation_relaxed() const {
        return __atomic_load_n(&generation_, __ATOMIC_RELAXED);
    }

    void stop_workers() {
        {
            std::lock_guard<std::mutex> lk(mutex_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
        workers_.clear();
    }

    void execute(Job& job) {
        for (;;) {
            const int c = job.next.fetch_add(1, std::memory_order_relaxed);
            if (c >= job.n_chunks) break;
            (*job.fn)(c);
            if (job.pending.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lk(mutex_);
                done_cv_.notify_all();
            }
        }
    }

    std::vector<std::thread> workers_;
    std::mutex api_mutex_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::shared_ptr<Job> job_;
    int n_threads_ = 1;
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
    static thread_local bool in_worker_;
};

inline thread_local bool ThreadPool::in_worker_ = false;

inline void set_threads(int n) { ThreadPool::instance().set_threads(n); }
inline int thread_count() { return ThreadPool::instance().threads(); }

// fn(lo, hi) over a static partition of [0, n).
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
    auto& pool = ThreadPool::instance();
    const int chunks = std::min<std::size_t>(pool.threads(), n);
    if (chunks <= 1) {
        if (n > 0) fn(std::size_t{0}, n);
        return;
    }
    const std::size_t per = (n + chunks - 1) / chunks;
    std::function<void(int)> task = [&](int c) {
        const std::size_t lo = per * static_cast<std::size_t>(c);
        const std::size_t hi = std::min(n, lo + per);
        if (lo < hi) fn(lo, hi);
    };
    pool.run(chunks, task);
}

// ---------------------------------------------------------------------------
// Row-major dense matrix with 64-byte aligned storage.
// ---------------------------------------------------------------------------
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols) { resize(rows, cols); }

    Mat(const Mat& other) { assign(other); }
    Mat& operator=(const Mat& other) {
        if (this != &other) assign(other);
        return *this;
    }
    Mat(Mat&& other) noexcept { swap(other); }
    Mat& operator=(Mat&& other) noexcept {
        swap(other);
        return *this;
    }
    ~Mat() { release(); }

    // Shape-preserving calls keep the contents; any shape change zero-fills.
    void resize(std::size_t rows, std::size_t cols) {
        if (rows == rows_ && cols == cols_) return;
        if (rows * cols != rows_ * cols_) {
            release();
            data_ = static_cast<T*>(::operator new[](rows * cols * sizeof(T), std::align_val_t(64)));
        }
        rows_ = rows;
        cols_ = cols;
        fill(T(0));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    bool empty() const { return size() == 0; }

    T* data() { return data_; }
    const T* data() const { return data_; }
    T* row(std::size_t r) { return data_ + r * cols_; }
    const T* row(std::size_t r) const { return data_ + r * cols_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    void fill(T v) { std::fill(data_, data_ + size(), v); }

    void swap(Mat& other) noexcept {
        std::swap(data_, other.data_);
        std::swap(rows_, other.rows_);
        std::swap(cols_, other.cols_);
    }

private:
    void assign(const Mat& other) {
        resize(other.rows_, other.cols_);
        std::copy(other.data_, other.data_ + other.size(), data_);
    }

    void release() {
        if (data_) ::operator delete[](data_, std::align_val_t(64));
        data_ = nullptr;
        rows_ = cols_ = 0;
    }

    T* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

// ---------------------------------------------------------------------------
// GEMM: C = op(A)*op(B) [+ C].
//
// Packed panels with an MR x NR register-tiled kernel (GCC/Clang vector
// extensions; 64-byte vectors lower to AVX-512 or paired AVX2 ops). The
// k-accumulation order per output element never depends on the thread count.
// ---------------------------------------------------------------------------
enum class Trans { N, T };

namespace gemm_detail {

template <typename T>
struct Arch {
    using Vec __attribute__((vector_size(64))) = T;
    static constexpr std::size_t W = 64 / sizeof(T); // lanes per vector
    static constexpr std::size_t MR = 8;
    static constexpr std::size_t NR = 2 * W;
    static constexpr std::size_t KC = 256;
    static constexpr std::size_t MC = 96;
    static constexpr std::size_t NC = 2048;
};

template <typename T>
using VecT = typename Arch<T>::Vec;

template <typename T>
inline VecT<T> load_u(const T* p) {
    VecT<T> v;
    __builtin_memcpy(&v, p, sizeof(v));
    return v;
}

template <typename T>
inline void store_u(T* p, VecT<T> v) {
    __builtin_memcpy(p, &v, sizeof(v));
}

template <typename T>
inline VecT<T> splat(T x) {
    return VecT<T>{} + x; // scalar broadcasts across lanes
}

// A panel: for each MR-row strip, column-major [k][mr], zero-padded rows.
template <typename T>
void pack_a(Trans ta, const T* A, std::size_t lda, std::size_t m0, std::size_t mc,
            std::size_t k0, std::size_t kc, T* buf) {
    constexpr std::size_t MR = Arch<T>::MR;
    for (std::size_t ir = 0; ir < mc; ir += MR) {
        const std::size_t mr = std::min(MR, mc - ir);
        for (std::size_t k = 0; k < kc; ++k) {
            T* dst = buf + ir * kc + k * MR;
            if (ta == Trans::N) {
                const std::size_t col = k0 + k;
                for (std::size_t m = 0; m < mr; ++m) dst[m] = A[(m0 + ir + m) * lda + col];
            } else {
                const T* src = A + (k0 + k) * lda + (m0 + ir);
                for (std::size_t m = 0; m < mr; ++m) dst[m] = src[m];
            }
            for (std::size_t m = mr; m < MR; ++m) dst[m] = T(0);
        }
    }
}

// B panel: for each NR-column strip, row-major [k][nr], zero-padded columns.
template <typename T>
void pack_b(Trans tb, const T* B, std::size_t ldb, std::size_t k0, std::size_t kc,
            std::size_t n0, std::size_t nc, T* buf) {
    constexpr std::size_t NR = Arch<T>::NR;
    for (std::size_t jr = 0; jr < nc; jr += NR) {
        const std::size_t nr = std::min(NR, nc - jr);
        for (std::size_t k = 0; k < kc; ++k) {
            T* dst = buf + jr * kc + k * NR;
            if (tb == Trans::N) {
                const T* src = B + (k0 + k) * ldb + (n0 + jr);
                for (std::size_t n = 0; n < nr; ++n) dst[n] = src[n];
            } else {
                const std::size_t row0 = n0 + jr;
                for (std::size_t n = 0; n < nr; ++n) dst[n] = B[(row0 + n) * ldb + (k0 + k)];
            }
            for (std::size_t n = nr; n < NR; ++n) dst[n] = T(0);
        }
    }
}

template <typename T, int NV>
void store_tile(VecT<T> acc[][NV], T* C, std::size_t ldc, std::size_t mr, std::size_t nr,
                bool accumulate) {
    constexpr std::size_t W = Arch<T>::W;
    if (nr == NV * W) {
        for (std::size_t m = 0; m < mr; ++m) {
            T* c = C + m * ldc;
            for (int v = 0; v < NV; ++v) {
                if (accumulate)
                    store_u(c + v * W, load_u(c + v * W) + acc[m][v]);
                else
                    store_u(c + v * W, acc[m][v]);
            }
        }
    } else {
        for (std::size_t m = 0; m < mr; ++m) {
            T* c = C + m * ldc;
            for (std::size_t n = 0; n < nr; ++n) {
                const T v = acc[m][n / W][n % W];
                c[n] = accumulate ? c[n] + v : v;
            }
        }
    }
}

template <typename T>
void kernel(std::size_t kc, const T* ap, const T* bp, T* C, std::size_t ldc,
            std::size_t mr, std::size_t nr, bool accumulate) {
    using V = VecT<T>;
    constexpr std::size_t MR = Arch<T>::MR;
    constexpr std::size_t W = Arch<T>::W;
    constexpr std::size_t NR = Arch<T>::NR;

    V acc[MR][2];
    for (std::size_t m = 0; m < MR; ++m) acc[m][0] = acc[m][1] = splat(T(0));

    const T* a = ap;
    const T* b = bp;
    for (std::size_t k = 0; k < kc; ++k) {
        __builtin_prefetch(b + 16 * NR);
        const V b0 = load_u(b);
        const V b1 = load_u(b + W);
#pragma GCC unroll 8
        for (std::size_t m = 0; m < MR; ++m) {
            const V av = splat(a[m]);
            acc[m][0] += av * b0;
            acc[m][1] += av * b1;
        }
        a += MR;
        b += NR;
    }
    store_tile<T, 2>(acc, C, ldc, mr, nr, accumulate);
}

// Skinny-N kernel reading A in place (no packing). NV vectors of columns.
template <typename T, bool TA, int NV>
void kernel_direct(std::size_t K, const T* A, std::size_t lda, const T* bp, T* C,
                   std::size_t ldc, std::size_t mr, std::size_t nr, bool accumulate) {
    using V = VecT<T>;
    constexpr std::size_t MR = Arch<T>::MR;
    constexpr std::size_t W = Arch<T>::W;

    V acc[MR][NV];
    for (std::size_t m = 0; m < MR; ++m)
        for (int v = 0; v < NV; ++v) acc[m][v] = splat(T(0));

    const T* b = bp;
    if (mr == MR) {
        for (std::size_t k = 0; k < K; ++k) {
            V bv[NV];
            for (int v = 0; v < NV; ++v) bv[v] = load_u(b + v * W);
#pragma GCC unroll 8
            for (std::size_t m = 0; m < MR; ++m) {
                const V av = splat(TA ? A[k * lda + m] : A[m * lda + k]);
                for (int v = 0; v < NV; ++v) acc[m][v] += av * bv[v];
            }
            b += NV * W;
        }
    } else {
        for (std::size_t k = 0; k < K; ++k) {
            V bv[NV];
            for (int v = 0; v < NV; ++v) bv[v] = load_u(b + v * W);
            for (std::size_t m = 0; m < mr; ++m) {
                const V av = splat(TA ? A[k * lda + m] : A[m * lda + k]);
                for (int v = 0; v < NV; ++v) acc[m][v] += av * bv[v];
            }
            b += NV * W;
        }
    }
    store_tile<T, NV>(acc, C, ldc, mr, nr, accumulate);
}

template <typename T>
struct Scratch {
    std::vector<T> a, b;
};

template <typename T>
Scratch<T>& scratch() {
    static thread_local Scratch<T> s;
    return s;
}

// One thread's share: rows [m_lo, m_ge) of the current (kc x nc) B panel.
template <typename T>
void run_block(Trans ta, const T* A, std::size_t lda, const T* bp, T* C, std::size_t ldc,
               std::size_t m_lo, std::size_t m_hi, std::size_t k0, std::size_t kc,
               std::size_t n0, std::size_t nc, bool accumulate) {
    constexpr std::size_t MR = Arch<T>::MR;
    constexpr std::size_t NR = Arch<T>::NR;
    constexpr std::size_t MC = Arch<T>::MC;

    auto& s = scratch<T>();
    s.a.resize(MC * kc + MR);

    for (std::size_t ic = m_lo; ic < m_hi; ic += MC) {
        const std::size_t mc = std::min(MC, m_hi - ic);
        pack_a(ta, A, lda, ic, mc, k0, kc, s.a.data());
        for (std::size_t jr = 0; jr < nc; jr += NR) {
            const std::size_t nr = std::min(NR, nc - jr);
            for (std::size_t ir = 0; ir < mc; ir += MR) {
                const std::size_t mr = std::min(MR, mc - ir);
                kernel(kc, s.a.data() + ir * kc, bp + jr * kc,
                       C + (ic + ir) * ldc + (n0 + jr), ldc, mr, nr, accumulate);
            }
        }
    }
}

} // namespace gemm_detail

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t M, std::size_t N, std::size_t K,
          const T* A, std::size_t lda, const T* B, std::size_t ldb,
          T* C, std::size_t ldc, bool accumulate = false) {
    using namespace gemm_detail;
    constexpr std::size_t KC = Arch<T>::KC;
    constexpr std::size_t NC = Arch<T>::NC;

    if (M == 0 || N == 0) return;
    if (K == 0) {
        if (!accumulate)
            for (std::size_t m = 0; m < M; ++m) std::fill(C + m * ldc, C + m * ldc + N, T(0));
        return;
    }

    // The calling thread owns the packed B panel; pool workers only read it,
    // so concurrent gemms from different threads never contend.
    static thread_local std::vector<T> bpanel;

    // Skinny output: keep the accumulators live over the whole K and read A
    // in place, packing only the narrow B panel once. Worth it only when A is
    // walked row-wise; the transposed walk strides by lda every k and loses
    // to the packed path.
    if (N <= Arch<T>::NR && ta == Trans::N) {
        constexpr double kParallelFlops = 24e6;
        const int nv = N <= Arch<T>::W ? 1 : 2;
        const std::size_t npad = static_cast<std::size_t>(nv) * Arch<T>::W;
        bpanel.resize(npad * K);
        T* bp = bpanel.data();
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t n = 0; n < N; ++n)
                bp[k * npad + n] = tb == Trans::N ? B[k * ldb + n] : B[n * ldb + k];
            for (std::size_t n = N; n < npad; ++n) bp[k * npad + n] = T(0);
        }
        const std::size_t strips = (M + Arch<T>::MR - 1) / Arch<T>::MR;
        auto body = [&, bp](std::size_t lo, std::size_t hi) {
            for (std::size_t s = lo; s < hi; ++s) {
                const std::size_t i0 = s * Arch<T>::MR;
                const std::size_t mr = std::min(Arch<T>::MR, M - i0);
                const T* a = ta == Trans::N ? A + i0 * lda : A + i0;
                T* c = C + i0 * ldc;
                if (nv == 1)
                    kernel_direct<T, false, 1>(K, a, lda, bp, c, ldc, mr, N, accumulate);
                else
                    kernel_direct<T, false, 2>(K, a, lda, bp, c, ldc, mr, N, accumulate);
            }
        };
        if (2.0 * static_cast<double>(M) * static_cast<double>(N) * static_cast<double>(K) >=
            kParallelFlops)
            parallel_for(strips, body);
        else if (strips > 0)
            body(0, strips);
        return;
    }

    constexpr double kParallelFlops = 24e6;
    for (std::size_t n0 = 0; n0 < N; n0 += NC) {
        const std::size_t nc = std::min(NC, N - n0);
        for (std::size_t k0 = 0; k0 < K; k0 += KC) {
            const std::size_t kc = std::min(KC, K - k0);
            const std::size_t nc_padded = (nc + Arch<T>::NR - 1) / Arch<T>::NR * Arch<T>::NR;
            bpanel.resize(nc_padded * kc);
            T* bp = bpanel.data(); // hoisted: thread_local resolves per thread
            pack_b(tb, B, ldb, k0, kc, n0, nc, bp);
            const bool acc = accumulate || k0 > 0;
            auto body = [&, bp](std::size_t lo, std::size_t hi) {
                run_block(ta, A, lda, bp, C, ldc, lo * Arch<T>::MR,
                          std::min(M, hi * Arch<T>::MR), k0, kc, n0, nc, acc);
            };
            const std::size_t strips = (M + Arch<T>::MR - 1) / Arch<T>::MR;
            if (2.0 * static_cast<double>(M) * static_cast<double>(nc) * static_cast<double>(kc) >=
                kParallelFlops)
                parallel_for(strips, body);
            else
                body(0, strips);
        }
    }
}

// Pre-packed B operand for gemms that reuse one matrix many times (the
// recurrent weights of an LSTM step loop). Packing happens once; the
// prepacked multiply then runs the kernels directly on the calling thread.
template <typename T>
struct PrepackedB {
    std::vector<T> panel;
    std::vector<std::size_t> offsets; // one per k-block
    std::size_t K = 0, N = 0, n_padded = 0;
};

template <typename T>
PrepackedB<T> prepack_b(Trans tb, const T* B, std::size_t ldb, std::size_t K, std::size_t N) {
    using namespace gemm_detail;
    PrepackedB<T> out;
    out.K = K;
    out.N = N;
    out.n_padded = (N + Arch<T>::NR - 1) / Arch<T>::NR * Arch<T>::NR;
    for (std::size_t k0 = 0; k0 < K; k0 += Arch<T>::KC) {
        const std::size_t kc = std::min(Arch<T>::KC, K - k0);
        out.offsets.push_back(out.panel.size());
        out.panel.resize(out.panel.size() + out.n_padded * kc);
        pack_b(tb, B, ldb, k0, kc, 0, N, out.panel.data() + out.offsets.back());
    }
    return out;
}

template <typename T>
void gemm_prepacked(std::size_t M, const T* A, std::size_t lda, const PrepackedB<T>& B, T* C,
                    std::size_t ldc, bool accumulate) {
    using namespace gemm_detail;
    std::size_t block = 0;
    for (std::size_t k0 = 0; k0 < B.K; k0 += Arch<T>::KC, ++block) {
        const std::size_t kc = std::min(Arch<T>::KC, B.K - k0);
        run_block(Trans::N, A, lda, B.panel.data() + B.offsets[block], C, ldc, 0, M, k0, kc, 0,
                  B.N, accumulate || k0 > 0);
    }
}

// C = op(A)*op(B) [+ C] with shape checks.
template <typename T>
void matmul(const Mat<T>& A, const Mat<T>& B, Mat<T>& C, Trans ta = Trans::N,
            Trans tb = Trans::N, bool accumulate = false) {
    const std::size_t M = ta == Trans::N ? A.rows() : A.cols();
    const std::size_t K = ta == Trans::N ? A.cols() : A.rows();
    const std::size_t Kb = tb == Trans::N ? B.rows() : B.cols();
    const std::size_t N = tb == Trans::N ? B.cols() : B.rows();
    assert(K == Kb);
    (void)Kb;
    if (!accumulate) {
        C.resize(M, N);
    } else {
        assert(C.rows() == M && C.cols() == N);
    }
    gemm(ta, tb, M, N, K, A.data(), A.cols(), B.data(), B.cols(), C.data(), C.cols(), accumulate);
}

} // namespace ecgi
