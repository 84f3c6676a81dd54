#pragma once

#include <cmath>
#include <cstdint>

namespace trajlab::nn {

// Numeric kernels for the CNN. Everything is templated on the scalar type:
// training runs in float, gradient-check tests instantiate double.
//
// Determinism contract: every reduction runs in a fixed order, and fused
// multiply-adds are explicit (std::fma), so results are bit-identical across
// runs, optimization levels, and platforms with the same scalar type.

// C[M x N] (+)= A[M x K] * B[K x N], all row-major.
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

// C[M x N] (+)= A^T * B where A is stored [K x M] row-major (so A^T is M x K).
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

// Worker threads for large GEMMs. Threads own disjoint C row ranges and each
// element keeps its ascending-k accumulation order, so results are
// bit-identical for every thread count.
void set_gemm_threads(int n);
int gemm_threads();

// 3x3 same-padding im2col. Input H x W x C (channel-minor), output
// (H*W) x (9*C) with column index (ky*3 + kx)*C + c. Out-of-frame taps are 0.
template <typename T>
void im2col_3x3(const T* in, int h, int w, int c, T* col);

// out = col(in) * weights + bias. weights are (9*Cin) x F row-major; out is
// H x W x F. col_scratch must hold (h*w) * (9*cin) elements.
template <typename T>
void conv3x3_forward(const T* in, int h, int w, int cin, const T* weights,
                     const T* bias, int f, T* out, T* col_scratch);

// Scratch elements conv3x3_forward/backward need for an H x W layer with cin
// input channels and f filters (the kernels process row strips internally).
size_t conv3x3_scratch_elems(int h, int w, int cin, int f, size_t elem_size);

// Accumulates gw (9*Cin x F) and gb (F); writes gin (H x W x Cin) unless null.
// col_scratch must hold conv3x3_scratch_elems(...) elements (an (h*w) *
// max(9*cin, 9*f) buffer is always enough); wrot_scratch holds (9*f) * cin.
template <typename T>
void conv3x3_backward(const T* in, int h, int w, int cin, const T* weights, int f,
                      const T* gout, T* gin, T* gw, T* gb, T* col_scratch,
                      T* wrot_scratch);

// 2x2 non-overlapping max pool; halves H and W. argmax records the winning
// offset (0..3, row-major within the window; ties keep the first) for the
// backward scatter.
template <typename T>
void maxpool2x2_forward(const T* in, int h, int w, int c, T* out, uint8_t* argmax);
template <typename T>
void maxpool2x2_backward(const T* gout, int h, int w, int c, const uint8_t* argmax,
                         T* gin);

// Elementwise max(0, x); backward masks where the forward output was > 0
// (subgradient 0 at x == 0).
template <typename T>
void relu_inplace(T* x, int64_t n);
template <typename T>
void relu_backward_inplace(const T* y, T* g, int64_t n);

// y[out] = sum_i x[i] * w[i*out_n + o] + b[o]; weights are input-major so the
// output-unit loop is contiguous.
template <typename T>
void dense_forward(const T* x, const T* w, const T* b, int in_n, int out_n, T* y);
// gw += x gy^T, gb += gy; gx (optional) = W gy.
template <typename T>
void dense_backward(const T* x, const T* w, const T* gy, int in_n, int out_n,
                    T* gx, T* gw, T* gb);

template <typename T>
void sigmoid_inplace(T* x, int64_t n);

// One Adam step with bias correction over a flat parameter array.
// step is 1-based (the value after incrementing the counter).
template <typename T>
struct AdamParams {
    T learning_rate;
    T beta1;
    T beta2;
    T epsilon;
};
template <typename T>
void adam_update_array(T* p, const T* g, T* m, T* v, int64_t n, int64_t step,
                       const AdamParams<T>& hp);

} // namespace trajlab::nn
