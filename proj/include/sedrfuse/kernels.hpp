// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Data-parallel inner loops used by the tensor layer. Every kernel has a
// scalar reference implementation (namespace scalar) and, on x86-64, an
// AVX2/FMA variant (namespace avx2). The public entry points dispatch to the
// variant selected at runtime; tests pin the variant with set_active_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace sedrfuse::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

/// Best variant the running CPU supports. Honors SEDRFUSE_FORCE_SCALAR=1.
Isa detect_isa();
Isa active_isa();
/// Throws std::invalid_argument when the CPU lacks the requested variant.
void set_active_isa(Isa isa);

/// Row-major matrix views with an explicit leading dimension.
template <typename T>
struct MatrixView {
  T* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t stride;
  T& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
};

template <typename T>
struct ConstMatrixView {
  const T* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t stride;
  ConstMatrixView() = default;
  ConstMatrixView(const T* d, std::size_t r, std::size_t c, std::size_t s)
      : data(d), rows(r), cols(c), stride(s) {}
  ConstMatrixView(MatrixView<T> m) : data(m.data), rows(m.rows), cols(m.cols), stride(m.stride) {}
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
};

/// c = a * b, or c += a * b when accumulate is set. Shapes must agree:
/// a is m x k, b is k x n, c is m x n. For every output element the products
/// are summed in increasing k order.
template <typename T>
void gemm(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c, bool accumulate);

template <typename T>
void add(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void mul(std::span<const T> a, std::span<const T> b, std::span<T> out);
/// out[i] = a[i] > b[i] ? a[i] : b[i]
template <typename T>
void maximum(std::span<const T> a, std::span<const T> b, std::span<T> out);
/// out[i] = x[i] > 0 ? x[i] : 0
template <typename T>
void relu(std::span<const T> x, std::span<T> out);
/// y[i] += alpha * x[i]
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);

namespace scalar {
template <typename T>
void gemm(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c, bool accumulate);
template <typename T>
void add(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void mul(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void maximum(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void relu(std::span<const T> x, std::span<T> out);
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define SEDRFUSE_HAVE_AVX2_VARIANT 1
namespace avx2 {
template <typename T>
void gemm(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c, bool accumulate);
template <typename T>
void add(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void mul(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void maximum(std::span<const T> a, std::span<const T> b, std::span<T> out);
template <typename T>
void relu(std::span<const T> x, std::span<T> out);
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y);
}  // namespace avx2
#endif

}  // namespace sedrfuse::kernels
