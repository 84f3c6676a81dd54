#include "trajlab/nn/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <atomic>
#include <thread>
#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define TRAJLAB_AVX2_KERNELS 1
#endif

namespace trajlab::nn {

namespace {

// Register-blocked microkernel: MR x NR tile of C accumulated over kk steps.
// The k loop is outermost so each C element sees its products in ascending-k
// order; blocking therefore never changes the result bitwise, and the AVX2
// path below computes exactly the same correctly-rounded fma sequence as the
// generic one.
constexpr int MR = 4;
constexpr int NR = 16;
constexpr int KB = 256; // keeps the B slab cache resident for large k

// Tail path with runtime tile bounds; also the full-tile fallback when AVX2
// is unavailable and the double-precision path for tests.
template <typename T, bool TRANS_A>
void micro_generic(const T* __restrict a, int lda, const T* __restrict b, int ldb,
                   T* __restrict c, int ldc, int kk, int mr, int nr, bool acc) {
    T t[MR][NR];
    for (int r = 0; r < mr; ++r)
        for (int j = 0; j < nr; ++j)
            t[r][j] = acc ? c[static_cast<int64_t>(r) * ldc + j] : T(0);

    for (int p = 0; p < kk; ++p) {
        const T* brow = b + static_cast<int64_t>(p) * ldb;
        for (int r = 0; r < mr; ++r) {
            const T av = TRANS_A ? a[static_cast<int64_t>(p) * lda + r]
                                 : a[static_cast<int64_t>(r) * lda + p];
            for (int j = 0; j < nr; ++j)
                t[r][j] = std::fma(av, brow[j], t[r][j]);
        }
    }

    for (int r = 0; r < mr; ++r)
        for (int j = 0; j < nr; ++j)
            c[static_cast<int64_t>(r) * ldc + j] = t[r][j];
}

#ifdef TRAJLAB_AVX2_KERNELS

// Full 4x16 float tile: 8 ymm accumulators, two B loads and four broadcasts
// per k step.
template <bool TRANS_A>
void micro_f32(const float* __restrict a, int lda, const float* __restrict b,
               int ldb, float* __restrict c, int ldc, int kk, bool acc) {
    __m256 t00, t01, t10, t11, t20, t21, t30, t31;
    if (acc) {
        t00 = _mm256_loadu_ps(c + 0 * static_cast<int64_t>(ldc));
        t01 = _mm256_loadu_ps(c + 0 * static_cast<int64_t>(ldc) + 8);
        t10 = _mm256_loadu_ps(c + 1 * static_cast<int64_t>(ldc));
        t11 = _mm256_loadu_ps(c + 1 * static_cast<int64_t>(ldc) + 8);
        t20 = _mm256_loadu_ps(c + 2 * static_cast<int64_t>(ldc));
        t21 = _mm256_loadu_ps(c + 2 * static_cast<int64_t>(ldc) + 8);
        t30 = _mm256_loadu_ps(c + 3 * static_cast<int64_t>(ldc));
        t31 = _mm256_loadu_ps(c + 3 * static_cast<int64_t>(ldc) + 8);
    } else {
        t00 = t01 = t10 = t11 = t20 = t21 = t30 = t31 = _mm256_setzero_ps();
    }

    for (int p = 0; p < kk; ++p) {
        const float* brow = b + static_cast<int64_t>(p) * ldb;
        const __m256 b0 = _mm256_loadu_ps(brow);
        const __m256 b1 = _mm256_loadu_ps(brow + 8);
        const float* ap = TRANS_A ? a + static_cast<int64_t>(p) * lda : a + p;
        const int64_t astride = TRANS_A ? 1 : lda;
        const __m256 a0 = _mm256_broadcast_ss(ap);
        const __m256 a1 = _mm256_broadcast_ss(ap + astride);
        const __m256 a2 = _mm256_broadcast_ss(ap + 2 * astride);
        const __m256 a3 = _mm256_broadcast_ss(ap + 3 * astride);
        t00 = _mm256_fmadd_ps(a0, b0, t00);
        t01 = _mm256_fmadd_ps(a0, b1, t01);
        t10 = _mm256_fmadd_ps(a1, b0, t10);
        t11 = _mm256_fmadd_ps(a1, b1, t11);
        t20 = _mm256_fmadd_ps(a2, b0, t20);
        t21 = _mm256_fmadd_ps(a2, b1, t21);
        t30 = _mm256_fmadd_ps(a3, b0, t30);
        t31 = _mm256_fmadd_ps(a3, b1, t31);
    }

    _mm256_storeu_ps(c + 0 * static_cast<int64_t>(ldc), t00);
    _mm256_storeu_ps(c + 0 * static_cast<int64_t>(ldc) + 8, t01);
    _mm256_storeu_ps(c + 1 * static_cast<int64_t>(ldc), t10);
    _mm256_storeu_ps(c + 1 * static_cast<int64_t>(ldc) + 8, t11);
    _mm256_storeu_ps(c + 2 * static_cast<int64_t>(ldc), t20);
    _mm256_storeu_ps(c + 2 * static_cast<int64_t>(ldc) + 8, t21);
    _mm256_storeu_ps(c + 3 * static_cast<int64_t>(ldc), t30);
    _mm256_storeu_ps(c + 3 * static_cast<int64_t>(ldc) + 8, t31);
}

#endif // TRAJLAB_AVX2_KERNELS

template <typename T, bool TRANS_A>
void micro_full(const T* a, int lda, const T* b, int ldb, T* c, int ldc, int kk,
                bool acc) {
#ifdef TRAJLAB_AVX2_KERNELS
    if constexpr (std::is_same_v<T, float>) {
        micro_f32<TRANS_A>(a, lda, b, ldb, c, ldc, kk, acc);
        return;
    }
#endif
    micro_generic<T, TRANS_A>(a, lda, b, ldb, c, ldc, kk, MR, NR, acc);
}

std::atomic<int> g_gemm_threads{1};

// One worker's share: C rows [m_begin, m_end). The k0 loop lives inside the
// worker, so every C element still accumulates its products in ascending-k
// order regardless of how rows are split.
template <typename T, bool TRANS_A>
void gemm_rows(const T* a, const T* b, T* c, int m_begin, int m_end, int m, int k,
               int n, bool accumulate) {
    const int lda = TRANS_A ? m : k;

    for (int k0 = 0; k0 < k; k0 += KB) {
        const int kk = std::min(KB, k - k0);
        const bool acc = accumulate || k0 > 0;
        const T* bp = b + static_cast<int64_t>(k0) * n;

        for (int i0 = m_begin; i0 < m_end; i0 += MR) {
            const int mr = std::min(MR, m_end - i0);
            const T* ap = TRANS_A ? a + static_cast<int64_t>(k0) * lda + i0
                                  : a + static_cast<int64_t>(i0) * lda + k0;
            for (int j0 = 0; j0 < n; j0 += NR) {
                const int nr = std::min(NR, n - j0);
                T* cp = c + static_cast<int64_t>(i0) * n + j0;
                if (mr == MR && nr == NR)
                    micro_full<T, TRANS_A>(ap, lda, bp + j0, n, cp, n, kk, acc);
                else
                    micro_generic<T, TRANS_A>(ap, lda, bp + j0, n, cp, n, kk, mr, nr,
                                              acc);
            }
        }
    }
}

template <typename T, bool TRANS_A>
void gemm_blocked(const T* a, const T* b, T* c, int m, int k, int n,
                  bool accumulate) {
    const int threads = g_gemm_threads.load(std::memory_order_relaxed);
    const int64_t macs = static_cast<int64_t>(m) * k * n;
    if (threads <= 1 || m < 8 * MR || macs < (1 << 21)) {
        gemm_rows<T, TRANS_A>(a, b, c, 0, m, m, k, n, accumulate);
        return;
    }

    const int n_workers = std::min(threads, (m + MR - 1) / MR);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_workers) - 1);
    const int tiles = (m + MR - 1) / MR;
    const int tiles_per_worker = (tiles + n_workers - 1) / n_workers;
    for (int wkr = 1; wkr < n_workers; ++wkr) {
        const int begin = std::min(m, wkr * tiles_per_worker * MR);
        const int end = std::min(m, (wkr + 1) * tiles_per_worker * MR);
        if (begin >= end) break;
        pool.emplace_back(gemm_rows<T, TRANS_A>, a, b, c, begin, end, m, k, n,
                          accumulate);
    }
    gemm_rows<T, TRANS_A>(a, b, c, 0, std::min(m, tiles_per_worker * MR), m, k, n,
                          accumulate);
    for (auto& th : pool) th.join();
}

} // namespace

void set_gemm_threads(int n) { g_gemm_threads.store(std::max(1, n)); }
int gemm_threads() { return g_gemm_threads.load(); }

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    gemm_blocked<T, false>(a, b, c, m, k, n, accumulate);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    gemm_blocked<T, true>(a, b, c, m, k, n, accumulate);
}

namespace {

// im2col for the output rows [y0, y1); neighbor taps read the full input.
template <typename T>
void im2col_3x3_rows(const T* in, int h, int w, int c, int y0, int y1, T* col) {
    const int64_t row_len = 9LL * c;
    for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < w; ++x) {
            T* dst = col + (static_cast<int64_t>(y - y0) * w + x) * row_len;
            for (int ky = 0; ky < 3; ++ky) {
                const int sy = y + ky - 1;
                for (int kx = 0; kx < 3; ++kx) {
                    const int sx = x + kx - 1;
                    if (sy >= 0 && sy < h && sx >= 0 && sx < w)
                        std::memcpy(dst, in + (static_cast<int64_t>(sy) * w + sx) * c,
                                    sizeof(T) * static_cast<size_t>(c));
                    else
                        std::memset(dst, 0, sizeof(T) * static_cast<size_t>(c));
                    dst += c;
                }
            }
        }
    }
}

// Row strips keep the column buffer cache resident; splitting the pixel axis
// never touches any element's accumulation order.
int conv_strip_rows(int h, int w, int channels, size_t elem_size) {
    const size_t target_bytes = 512 << 10;
    const size_t row_bytes = static_cast<size_t>(w) * 9 * channels * elem_size;
    const int rows = static_cast<int>(std::max<size_t>(1, target_bytes / std::max<size_t>(1, row_bytes)));
    return std::min(h, rows);
}

} // namespace

size_t conv3x3_scratch_elems(int h, int w, int cin, int f, size_t elem_size) {
    const size_t fwd = static_cast<size_t>(conv_strip_rows(h, w, cin, elem_size)) *
                       w * 9 * cin;
    const size_t bwd = static_cast<size_t>(conv_strip_rows(h, w, f, elem_size)) *
                       w * 9 * f;
    return std::max(fwd, bwd);
}

template <typename T>
void im2col_3x3(const T* in, int h, int w, int c, T* col) {
    im2col_3x3_rows(in, h, w, c, 0, h, col);
}

template <typename T>
void conv3x3_forward(const T* in, int h, int w, int cin, const T* weights,
                     const T* bias, int f, T* out, T* col_scratch) {
    const int strip = conv_strip_rows(h, w, cin, sizeof(T));
    for (int y0 = 0; y0 < h; y0 += strip) {
        const int rows = std::min(strip, h - y0);
        im2col_3x3_rows(in, h, w, cin, y0, y0 + rows, col_scratch);
        gemm_nn(col_scratch, weights, out + static_cast<int64_t>(y0) * w * f,
                rows * w, 9 * cin, f, false);
    }
    const int64_t p = static_cast<int64_t>(h) * w;
    for (int64_t i = 0; i < p; ++i) {
        T* row = out + i * f;
        for (int j = 0; j < f; ++j) row[j] += bias[j];
    }
}

template <typename T>
void conv3x3_backward(const T* in, int h, int w, int cin, const T* weights, int f,
                      const T* gout, T* gin, T* gw, T* gb, T* col_scratch,
                      T* wrot_scratch) {
    const int64_t p = static_cast<int64_t>(h) * w;

    for (int64_t i = 0; i < p; ++i) {
        const T* row = gout + i * f;
        for (int j = 0; j < f; ++j) gb[j] += row[j];
    }

    // Weight gradient: strips ascend the pixel axis, so each gw element sees
    // its products in the same order as an unstripped pass.
    const int strip_in = conv_strip_rows(h, w, cin, sizeof(T));
    for (int y0 = 0; y0 < h; y0 += strip_in) {
        const int rows = std::min(strip_in, h - y0);
        im2col_3x3_rows(in, h, w, cin, y0, y0 + rows, col_scratch);
        gemm_tn(col_scratch, gout + static_cast<int64_t>(y0) * w * f, gw, 9 * cin,
                rows * w, f, true);
    }

    if (gin) {
        // Input gradient is a same-padded convolution of gout with the
        // kernel rotated 180 degrees and its channel/filter axes swapped.
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx)
                for (int fi = 0; fi < f; ++fi)
                    for (int ci = 0; ci < cin; ++ci)
                        wrot_scratch[((static_cast<int64_t>(ky) * 3 + kx) * f + fi) * cin + ci] =
                            weights[(((2LL - ky) * 3 + (2 - kx)) * cin + ci) * f + fi];
        const int strip_out = conv_strip_rows(h, w, f, sizeof(T));
        for (int y0 = 0; y0 < h; y0 += strip_out) {
            const int rows = std::min(strip_out, h - y0);
            im2col_3x3_rows(gout, h, w, f, y0, y0 + rows, col_scratch);
            gemm_nn(col_scratch, wrot_scratch, gin + static_cast<int64_t>(y0) * w * cin,
                    rows * w, 9 * f, cin, false);
        }
    }
}

template <typename T>
void maxpool2x2_forward(const T* in, int h, int w, int c, T* out, uint8_t* argmax) {
    if (h % 2 != 0 || w % 2 != 0)
        throw std::invalid_argument("maxpool2x2: dimensions must be even, got " +
                                    std::to_string(h) + "x" + std::to_string(w));
    const int oh = h / 2;
    const int ow = w / 2;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int64_t base = ((static_cast<int64_t>(oy) * 2) * w + ox * 2) * c;
            T* orow = out + (static_cast<int64_t>(oy) * ow + ox) * c;
            uint8_t* arow = argmax + (static_cast<int64_t>(oy) * ow + ox) * c;
            for (int ch = 0; ch < c; ++ch) {
                // Window scan order (0,0),(0,1),(1,0),(1,1); ties keep the
                // first via strict comparison.
                T best = in[base + ch];
                uint8_t idx = 0;
                T v = in[base + c + ch];
                if (v > best) { best = v; idx = 1; }
                v = in[base + static_cast<int64_t>(w) * c + ch];
                if (v > best) { best = v; idx = 2; }
                v = in[base + static_cast<int64_t>(w) * c + c + ch];
                if (v > best) { best = v; idx = 3; }
                orow[ch] = best;
                arow[ch] = idx;
            }
        }
    }
}

template <typename T>
void maxpool2x2_backward(const T* gout, int h, int w, int c, const uint8_t* argmax,
                         T* gin) {
    const int oh = h / 2;
    const int ow = w / 2;
    std::memset(gin, 0, sizeof(T) * static_cast<size_t>(h) * w * c);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int64_t base = ((static_cast<int64_t>(oy) * 2) * w + ox * 2) * c;
            const T* grow = gout + (static_cast<int64_t>(oy) * ow + ox) * c;
            const uint8_t* arow = argmax + (static_cast<int64_t>(oy) * ow + ox) * c;
            for (int ch = 0; ch < c; ++ch) {
                const uint8_t idx = arow[ch];
                const int64_t off = (idx >> 1) * static_cast<int64_t>(w) * c +
                                    (idx & 1) * c;
                gin[base + off + ch] += grow[ch];
            }
        }
    }
}

template <typename T>
void relu_inplace(T* x, int64_t n) {
    for (int64_t i = 0; i < n; ++i) x[i] = std::max(x[i], T(0));
}

template <typename T>
void relu_backward_inplace(const T* y, T* g, int64_t n) {
    for (int64_t i = 0; i < n; ++i)
        if (!(y[i] > T(0))) g[i] = T(0);
}

template <typename T>
void dense_forward(const T* x, const T* w, const T* b, int in_n, int out_n, T* y) {
    gemm_nn(x, w, y, 1, in_n, out_n, false);
    for (int o = 0; o < out_n; ++o) y[o] += b[o];
}

template <typename T>
void dense_backward(const T* x, const T* w, const T* gy, int in_n, int out_n,
                    T* gx, T* gw, T* gb) {
    for (int o = 0; o < out_n; ++o) gb[o] += gy[o];
    for (int i = 0; i < in_n; ++i) {
        const T xv = x[i];
        T* gwrow = gw + static_cast<int64_t>(i) * out_n;
        for (int o = 0; o < out_n; ++o)
            gwrow[o] = std::fma(xv, gy[o], gwrow[o]);
    }
    if (gx) {
        for (int i = 0; i < in_n; ++i) {
            const T* wrow = w + static_cast<int64_t>(i) * out_n;
            T s = 0;
            for (int o = 0; o < out_n; ++o) s = std::fma(wrow[o], gy[o], s);
            gx[i] = s;
        }
    }
}

template <typename T>
void sigmoid_inplace(T* x, int64_t n) {
    for (int64_t i = 0; i < n; ++i) x[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <typename T>
void adam_update_array(T* p, const T* g, T* m, T* v, int64_t n, int64_t step,
                       const AdamParams<T>& hp) {
    // Bias-correction powers by repeated multiplication: cheap relative to
    // the element loop and free of libm variance.
    T pb1 = 1, pb2 = 1;
    for (int64_t s = 0; s < step; ++s) {
        pb1 *= hp.beta1;
        pb2 *= hp.beta2;
    }
    const T bc1 = T(1) - pb1;
    const T bc2 = T(1) - pb2;
    for (int64_t i = 0; i < n; ++i) {
        m[i] = hp.beta1 * m[i] + (T(1) - hp.beta1) * g[i];
        v[i] = hp.beta2 * v[i] + (T(1) - hp.beta2) * g[i] * g[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p[i] -= hp.learning_rate * mhat / (std::sqrt(vhat) + hp.epsilon);
    }
}

#define TRAJLAB_INSTANTIATE(T)                                                      \
    template void gemm_nn<T>(const T*, const T*, T*, int, int, int, bool);          \
    template void gemm_tn<T>(const T*, const T*, T*, int, int, int, bool);          \
    template void im2col_3x3<T>(const T*, int, int, int, T*);                       \
    template void conv3x3_forward<T>(const T*, int, int, int, const T*, const T*,   \
                                     int, T*, T*);                                  \
    template void conv3x3_backward<T>(const T*, int, int, int, const T*, int,       \
                                      const T*, T*, T*, T*, T*, T*);                \
    template void maxpool2x2_forward<T>(const T*, int, int, int, T*, uint8_t*);     \
    template void maxpool2x2_backward<T>(const T*, int, int, int, const uint8_t*,   \
                                         T*);                                       \
    template void relu_inplace<T>(T*, int64_t);                                     \
    template void relu_backward_inplace<T>(const T*, T*, int64_t);                  \
    template void dense_forward<T>(const T*, const T*, const T*, int, int, T*);     \
    template void dense_backward<T>(const T*, const T*, const T*, int, int, T*, T*, \
                                    T*);                                            \
    template void sigmoid_inplace<T>(T*, int64_t);                                  \
    template void adam_update_array<T>(T*, const T*, T*, T*, int64_t, int64_t,      \
                                       const AdamParams<T>&);

TRAJLAB_INSTANTIATE(float)
TRAJLAB_INSTANTIATE(double)

#undef TRAJLAB_INSTANTIATE

} // namespace trajlab::nn
