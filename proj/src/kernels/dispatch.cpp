// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "sedrfuse/kernels.hpp"

namespace sedrfuse::kernels {
namespace {

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{detect_isa()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(SEDRFUSE_HAVE_AVX2_VARIANT)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (const char* env = std::getenv("SEDRFUSE_FORCE_SCALAR"); env && std::string(env) == "1") {
    return Isa::scalar;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel variant '" + std::string(isa_name(isa)) +
                                "' is not supported on this CPU");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

#if defined(SEDRFUSE_HAVE_AVX2_VARIANT)
#define SEDRFUSE_DISPATCH(fn, ...)                      \
  do {                                                  \
    if (active_isa() == Isa::avx2) return avx2::fn(__VA_ARGS__); \
    return scalar::fn(__VA_ARGS__);                     \
  } while (0)
#else
#define SEDRFUSE_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

template <typename T>
void gemm(ConstMatrixView<T> a, ConstMatrixView<T> b, MatrixView<T> c, bool accumulate) {
  SEDRFUSE_DISPATCH(gemm<T>, a, b, c, accumulate);
}
template <typename T>
void add(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  SEDRFUSE_DISPATCH(add<T>, a, b, out);
}
template <typename T>
void mul(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  SEDRFUSE_DISPATCH(mul<T>, a, b, out);
}
template <typename T>
void maximum(std::span<const T> a, std::span<const T> b, std::span<T> out) {
  SEDRFUSE_DISPATCH(maximum<T>, a, b, out);
}
template <typename T>
void relu(std::span<const T> x, std::span<T> out) {
  SEDRFUSE_DISPATCH(relu<T>, x, out);
}
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  SEDRFUSE_DISPATCH(axpy<T>, alpha, x, y);
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

}  // namespace sedrfuse::kernels
