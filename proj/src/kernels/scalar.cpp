// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against.

#include "sedrfuse/kernels.hpp"

#include <cassert>

namespace sedrfuse::kernels::scalar {

template <typename T>
void gemm(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c, bool accumulate) {
  assert(a.cols == b.rows && a.rows == c.rows && b.cols == c.cols);
  for (std::size_t i = 0; i < c.rows; ++i) {
    T* crow = c.data + i * c.stride;
    if (!accumulate) {
      for (std::size_t j = 0; j < c.cols; ++j) crow[j] = T(0);
    }
    for (std::size_t p = 0; p < a.cols; ++p) {
      const T av = a(i, p);
      const T* brow = b.data + p * b.stride;
      for (std::size_t j = 0; j < c.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void add(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}

template <typename T>
void maximum(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > b[i] ? a[i] : b[i];
}

template <typename T>
void relu(std::span<const T> x, std::span<T> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
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

}  // namespace sedrfuse::kernels::scalar
