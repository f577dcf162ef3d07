// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2/FMA variants. Functions carry a target attribute instead of the whole
// file being built with -mavx2, so nothing here leaks AVX2 encodings into
// shared inline code. Only call these after isa_supported(Isa::avx2).

#include "sedrfuse/kernels.hpp"

#if defined(SEDRFUSE_HAVE_AVX2_VARIANT)

#include <immintrin.h>

#include <algorithm>
#include <cassert>
#include <vector>

#define SEDRFUSE_AVX2 __attribute__((target("avx2,fma")))
#define SEDRFUSE_AVX2_INLINE __attribute__((target("avx2,fma"), always_inline)) inline

namespace sedrfuse::kernels::avx2 {
namespace {

template <typename T>
struct Simd;

template <>
struct Simd<float> {
  using reg = __m256;
  static constexpr std::size_t lanes = 8;
  SEDRFUSE_AVX2_INLINE static reg zero() { return _mm256_setzero_ps(); }
  SEDRFUSE_AVX2_INLINE static reg set1(float v) { return _mm256_set1_ps(v); }
  SEDRFUSE_AVX2_INLINE static reg load(const float* p) { return _mm256_loadu_ps(p); }
  SEDRFUSE_AVX2_INLINE static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  SEDRFUSE_AVX2_INLINE static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
  SEDRFUSE_AVX2_INLINE static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  SEDRFUSE_AVX2_INLINE static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  // vmaxps returns the second operand unless the first is strictly greater.
  SEDRFUSE_AVX2_INLINE static reg max(reg a, reg b) { return _mm256_max_ps(a, b); }
};

template <>
struct Simd<double> {
  using reg = __m256d;
  static constexpr std::size_t lanes = 4;
  SEDRFUSE_AVX2_INLINE static reg zero() { return _mm256_setzero_pd(); }
  SEDRFUSE_AVX2_INLINE static reg set1(double v) { return _mm256_set1_pd(v); }
  SEDRFUSE_AVX2_INLINE static reg load(const double* p) { return _mm256_loadu_pd(p); }
  SEDRFUSE_AVX2_INLINE static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  SEDRFUSE_AVX2_INLINE static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
  SEDRFUSE_AVX2_INLINE static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  SEDRFUSE_AVX2_INLINE static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  SEDRFUSE_AVX2_INLINE static reg max(reg a, reg b) { return _mm256_max_pd(a, b); }
};

constexpr int kRowBlock = 6;

// Computes an MR x (2 * lanes) tile of c from MR rows of a and a packed panel
// of b laid out as depth x (2 * lanes).
template <typename T, int MR>
SEDRFUSE_AVX2 void micro_kernel(std::size_t depth, const T* a, std::size_t lda, const T* panel,
                                T* c, std::size_t ldc, std::size_t valid_cols, bool accumulate) {
  using V = Simd<T>;
  constexpr std::size_t L = V::lanes;
  constexpr std::size_t NR = 2 * L;

  alignas(32) T tile[MR * NR];
  const bool full = valid_cols == NR;
  T* out = c;
  std::size_t out_stride = ldc;
  if (!full) {
    out = tile;
    out_stride = NR;
    for (int r = 0; r < MR; ++r) {
      for (std::size_t j = 0; j < NR; ++j) {
        tile[r * NR + j] = (accumulate && j < valid_cols) ? c[r * ldc + j] : T(0);
      }
    }
  }

  typename V::reg lo[MR];
  typename V::reg hi[MR];
#pragma GCC unroll 6
  for (int r = 0; r < MR; ++r) {
    if (accumulate || !full) {
      lo[r] = V::load(out + r * out_stride);
      hi[r] = V::load(out + r * out_stride + L);
    } else {
      lo[r] = V::zero();
      hi[r] = V::zero();
    }
  }

  for (std::size_t p = 0; p < depth; ++p) {
    const auto b0 = V::load(panel + p * NR);
    const auto b1 = V::load(panel + p * NR + L);
#pragma GCC unroll 6
    for (int r = 0; r < MR; ++r) {
      const auto av = V::set1(a[r * lda + p]);
      lo[r] = V::fmadd(av, b0, lo[r]);
      hi[r] = V::fmadd(av, b1, hi[r]);
    }
  }

#pragma GCC unroll 6
  for (int r = 0; r < MR; ++r) {
    V::store(out + r * out_stride, lo[r]);
    V::store(out + r * out_stride + L, hi[r]);
  }
  if (!full) {
    for (int r = 0; r < MR; ++r) {
      for (std::size_t j = 0; j < valid_cols; ++j) c[r * ldc + j] = tile[r * NR + j];
    }
  }
}

template <typename T>
SEDRFUSE_AVX2 void dispatch_rows(int rows, std::size_t depth, const T* a, std::size_t lda,
                                 const T* panel, T* c, std::size_t ldc, std::size_t valid_cols,
                                 bool accumulate) {
  switch (rows) {
    case 1: micro_kernel<T, 1>(depth, a, lda, panel, c, ldc, valid_cols, accumulate); break;
    case 2: micro_kernel<T, 2>(depth, a, lda, panel, c, ldc, valid_cols, accumulate); break;
    case 3: micro_kernel<T, 3>(depth, a, lda, panel, c, ldc, valid_cols, accumulate); break;
    case 4: micro_kernel<T, 4>(depth, a, lda, panel, c, ldc, valid_cols, accumulate); break;
    case 5: micro_kernel<T, 5>(depth, a, lda, panel, c, ldc, valid_cols, accumulate); break;
    default: micro_kernel<T, 6>(depth, a, lda, panel, c, ldc, valid_cols, accumulate); break;
  }
}

template <typename T>
SEDRFUSE_AVX2 void gemm_impl(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c,
                        bool accumulate) {
  assert(a.cols == b.rows && a.rows == c.rows && b.cols == c.cols);
  constexpr std::size_t NR = 2 * Simd<T>::lanes;
  const std::size_t depth = a.cols;
  std::vector<T> panel(std::max<std::size_t>(depth, 1) * NR);

  for (std::size_t j0 = 0; j0 < c.cols; j0 += NR) {
    const std::size_t valid = std::min(NR, c.cols - j0);
    for (std::size_t p = 0; p < depth; ++p) {
      const T* brow = b.data + p * b.stride + j0;
      T* dst = panel.data() + p * NR;
      std::size_t j = 0;
      for (; j < valid; ++j) dst[j] = brow[j];
      for (; j < NR; ++j) dst[j] = T(0);
    }
    for (std::size_t i0 = 0; i0 < c.rows; i0 += kRowBlock) {
      const int rows = static_cast<int>(std::min<std::size_t>(kRowBlock, c.rows - i0));
      dispatch_rows<T>(rows, depth, a.data + i0 * a.stride, a.stride, panel.data(),
                       c.data + i0 * c.stride + j0, c.stride, valid, accumulate);
    }
  }
}

template <typename T>
SEDRFUSE_AVX2 void add_impl(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  using V = Simd<T>;
  std::size_t i = 0;
  for (; i + V::lanes <= out.size(); i += V::lanes) {
    V::store(&out[i], V::add(V::load(&a[i]), V::load(&b[i])));
  }
  for (; i < out.size(); ++i) out[i] = a[i] + b[i];
}

template <typename T>
SEDRFUSE_AVX2 void mul_impl(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  using V = Simd<T>;
  std::size_t i = 0;
  for (; i + V::lanes <= out.size(); i += V::lanes) {
    V::store(&out[i], V::mul(V::load(&a[i]), V::load(&b[i])));
  }
  for (; i < out.size(); ++i) out[i] = a[i] * b[i];
}

template <typename T>
SEDRFUSE_AVX2 void maximum_impl(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  using V = Simd<T>;
  std::size_t i = 0;
  for (; i + V::lanes <= out.size(); i += V::lanes) {
    V::store(&out[i], V::max(V::load(&a[i]), V::load(&b[i])));
  }
  for (; i < out.size(); ++i) out[i] = a[i] > b[i] ? a[i] : b[i];
}

template <typename T>
SEDRFUSE_AVX2 void relu_impl(std::span<const T> x, std::span<T> out) {
  using V = Simd<T>;
  const auto z = V::zero();
  std::size_t i = 0;
  for (; i + V::lanes <= out.size(); i += V::lanes) {
    V::store(&out[i], V::max(V::load(&x[i]), z));
  }
  for (; i < out.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

// Uses a separate multiply and add so results match the scalar reference bit
// for bit.
template <typename T>
SEDRFUSE_AVX2 void axpy_impl(T alpha, std::span<const T> x, std::span<T> y) {
  using V = Simd<T>;
  const auto va = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::lanes <= y.size(); i += V::lanes) {
    V::store(&y[i], V::add(V::load(&y[i]), V::mul(va, V::load(&x[i]))));
  }
  for (; i < y.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

// Public entry points carry no target attribute: GCC would otherwise treat a
// declaration without it and a definition with it as distinct versions.
template <typename T>
void gemm(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c, bool accumulate) {
  gemm_impl<T>(a, b, c, accumulate);
}
template <typename T>
void add(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  add_impl<T>(a, b, out);
}
template <typename T>
void mul(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  mul_impl<T>(a, b, out);
}
template <typename T>
void maximum(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  maximum_impl<T>(a, b, out);
}
template <typename T>
void relu(std::span<const T> x, std::span<T> out) {
  relu_impl<T>(x, out);
}
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  axpy_impl<T>(alpha, x, y);
}

#define SEDRFUSE_INSTANTIATE(T)                                                        \
  template void gemm<T>(ConstMatrixView<T>, ConstMatrixView<T>, MatrixView<T>, bool); \
  template void add<T>(std::span<const T>, std::span<const T>, std::span<T>);         \
  template void mul<T>(std::span<const T>, std::span<const T>, std::span<T>);         \
  template void maximum<T>(std::span<const T>, std::span<const T>, std::span<T>);     \
  template void relu<T>(std::span<const T>, std::span<T>);                            \
  template void axpy<T>(T, std::span<const T>, std::span<T>);

SEDRFUSE_INSTANTIATE(float)
SEDRFUSE_INSTANTIATE(double)
#undef SEDRFUSE_INSTANTIATE

}  // namespace sedrfuse::kernels::avx2

#endif  // SEDRFUSE_HAVE_AVX2_VARIANT
