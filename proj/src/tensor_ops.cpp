// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sedrfuse/kernels.hpp"

namespace sedrfuse::ops {
namespace {

constexpr std::size_t kTaps = 9;  // 3x3

// Geometry of a padded 3x3 window sweep: an image of `channels` x h x w is
// sampled on an out_h x out_w grid with the given stride; tap (ky, kx) of grid
// point (y, x) reads pixel (s*y + ky - 1, s*x + kx - 1).
struct Sweep {
  std::size_t channels, h, w, out_h, out_w, stride;
  std::size_t col_rows() const { return channels * kTaps; }
  std::size_t col_cols() const { return out_h * out_w; }
};

// col[(c, ky, kx), (y, x)] = image[c][s*y + ky - 1][s*x + kx - 1], zero outside.
template <typename T>
void im2col(const T* image, const Sweep& g, T* col) {
  const std::size_t n = g.col_cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* row = col + ((c * 3 + ky) * 3 + kx) * n;
        for (std::size_t y = 0; y < g.out_h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(g.stride * y + ky) - 1;
          T* dst = row + y * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t x = 0; x < g.out_w; ++x) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(g.stride * x + kx) - 1;
            dst[x] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) ? T(0)
                                                                      : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds col back onto the image.
template <typename T>
void col2im(const T* col, const Sweep& g, T* image) {
  const std::size_t n = g.col_cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* row = col + ((c * 3 + ky) * 3 + kx) * n;
        for (std::size_t y = 0; y < g.out_h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(g.stride * y + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          const T* src = row + y * g.out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t x = 0; x < g.out_w; ++x) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(g.stride * x + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            dst[ix] += src[x];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> transpose(const T* src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

template <typename T>
kernels::ConstMatrixView<T> cview(const T* d, std::size_t r, std::size_t c) {
  return {d, r, c, c};
}
template <typename T>
kernels::MatrixView<T> mview(T* d, std::size_t r, std::size_t c) {
  return {d, r, c, c};
}

void check_stride(int stride, const char* what) {
  if (stride != 1 && stride != 2) {
    throw ShapeError(std::string(what) + ": stride must be 1 or 2, got " +
                     std::to_string(stride));
  }
}

template <typename T>
void check_kernel(const Tensor<T>& kernel, const Tensor<T>& bias, std::size_t in_channels,
                  bool transposed, const char* what) {
  require_rank(kernel.shape(), 4, what);
  if (kernel.dim(2) != 3 || kernel.dim(3) != 3) {
    throw ShapeError(std::string(what) + ": kernel must be 3x3, got " +
                     shape_to_string(kernel.shape()));
  }
  const std::size_t kin = transposed ? kernel.dim(0) : kernel.dim(1);
  const std::size_t kout = transposed ? kernel.dim(1) : kernel.dim(0);
  if (kin != in_channels) {
    throw ShapeError(std::string(what) + ": input has " + std::to_string(in_channels) +
                     " channels but kernel " + shape_to_string(kernel.shape()) + " expects " +
                     std::to_string(kin));
  }
  if (bias.shape() != Shape{kout}) {
    throw ShapeError(std::string(what) + ": bias shape " + shape_to_string(bias.shape()) +
                     " does not match " + std::to_string(kout) + " output channels");
  }
}

template <typename T>
void add_bias(T* out, const Tensor<T>& bias, std::size_t plane) {
  for (std::size_t c = 0; c < bias.size(); ++c) {
    const T b = bias[c];
    T* p = out + c * plane;
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

template <typename T>
void accumulate_bias_grad(const Tensor<T>& grad_out, Tensor<T>& grad_bias) {
  const std::size_t plane = grad_out.dim(1) * grad_out.dim(2);
  for (std::size_t c = 0; c < grad_out.dim(0); ++c) {
    T s = T(0);
    for (std::size_t i = 0; i < plane; ++i) s += grad_out[c * plane + i];
    grad_bias[c] += s;
  }
}

template <typename T>
void binary(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out, const char* what) {
  require_same_shape(a.shape(), b.shape(), what);
  out = Tensor<T>(a.shape());
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride) {
  check_stride(stride, "conv2d");
  require_rank(input.shape(), 3, "conv2d input");
  check_kernel(kernel, bias, input.dim(0), false, "conv2d");
  const std::size_t s = static_cast<std::size_t>(stride);
  if (input.dim(1) % s || input.dim(2) % s) {
    throw ShapeError("conv2d: spatial size " + shape_to_string(input.shape()) +
                     " not divisible by stride " + std::to_string(stride));
  }
  const Sweep g{input.dim(0), input.dim(1), input.dim(2), input.dim(1) / s, input.dim(2) / s, s};
  const std::size_t cout = kernel.dim(0);

  std::vector<T> col(g.col_rows() * g.col_cols());
  im2col(input.data().data(), g, col.data());
  Tensor<T> out(Shape{cout, g.out_h, g.out_w});
  kernels::gemm<T>(cview(kernel.data().data(), cout, g.col_rows()),
                   cview(col.data(), g.col_rows(), g.col_cols()),
                   mview(out.data().data(), cout, g.col_cols()), false);
  add_bias(out.data().data(), bias, g.col_cols());
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, int stride,
                     const Tensor<T>& grad_out, Tensor<T>* grad_input, Tensor<T>* grad_kernel,
                     Tensor<T>* grad_bias) {
  const std::size_t s = static_cast<std::size_t>(stride);
  const Sweep g{input.dim(0), input.dim(1), input.dim(2), input.dim(1) / s, input.dim(2) / s, s};
  const std::size_t cout = kernel.dim(0);
  require_same_shape(grad_out.shape(), Shape{cout, g.out_h, g.out_w}, "conv2d_backward");
  const T* gy = grad_out.data().data();

  if (grad_bias) accumulate_bias_grad(grad_out, *grad_bias);
  if (grad_kernel) {
    std::vector<T> col(g.col_rows() * g.col_cols());
    im2col(input.data().data(), g, col.data());
    const auto col_t = transpose(col.data(), g.col_rows(), g.col_cols());
    kernels::gemm<T>(cview(gy, cout, g.col_cols()),
                     cview(col_t.data(), g.col_cols(), g.col_rows()),
                     mview(grad_kernel->data().data(), cout, g.col_rows()), true);
  }
  if (grad_input) {
    const auto kernel_t = transpose(kernel.data().data(), cout, g.col_rows());
    std::vector<T> dcol(g.col_rows() * g.col_cols());
    kernels::gemm<T>(cview(kernel_t.data(), g.col_rows(), cout), cview(gy, cout, g.col_cols()),
                     mview(dcol.data(), g.col_rows(), g.col_cols()), false);
    col2im(dcol.data(), g, grad_input->data().data());
  }
}

template <typename T>
Tensor<T> deconv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                   int stride) {
  check_stride(stride, "deconv2d");
  require_rank(input.shape(), 3, "deconv2d input");
  check_kernel(kernel, bias, input.dim(0), true, "deconv2d");
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t cin = input.dim(0), cout = kernel.dim(1);
  const Sweep g{cout, input.dim(1) * s, input.dim(2) * s, input.dim(1), input.dim(2), s};

  // The kernel viewed as [Cin, Cout * 9] is the matrix of the matching conv
  // sweep over the output, so the layer is that sweep's adjoint.
  const auto taps_t = transpose(kernel.data().data(), cin, g.col_rows());
  std::vector<T> dcol(g.col_rows() * g.col_cols());
  kernels::gemm<T>(cview(taps_t.data(), g.col_rows(), cin),
                   cview(input.data().data(), cin, g.col_cols()),
                   mview(dcol.data(), g.col_rows(), g.col_cols()), false);
  Tensor<T> out(Shape{cout, g.h, g.w});
  col2im(dcol.data(), g, out.data().data());
  add_bias(out.data().data(), bias, g.h * g.w);
  return out;
}

template <typename T>
void deconv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, int stride,
                       const Tensor<T>& grad_out, Tensor<T>* grad_input,
                       Tensor<T>* grad_kernel, Tensor<T>* grad_bias) {
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t cin = input.dim(0), cout = kernel.dim(1);
  const Sweep g{cout, input.dim(1) * s, input.dim(2) * s, input.dim(1), input.dim(2), s};
  require_same_shape(grad_out.shape(), Shape{cout, g.h, g.w}, "deconv2d_backward");

  if (grad_bias) accumulate_bias_grad(grad_out, *grad_bias);
  if (!grad_input && !grad_kernel) return;

  std::vector<T> col(g.col_rows() * g.col_cols());
  im2col(grad_out.data().data(), g, col.data());
  if (grad_input) {
    kernels::gemm<T>(cview(kernel.data().data(), cin, g.col_rows()),
                     cview(col.data(), g.col_rows(), g.col_cols()),
                     mview(grad_input->data().data(), cin, g.col_cols()), true);
  }
  if (grad_kernel) {
    const auto col_t = transpose(col.data(), g.col_rows(), g.col_cols());
    kernels::gemm<T>(cview(input.data().data(), cin, g.col_cols()),
                     cview(col_t.data(), g.col_cols(), g.col_rows()),
                     mview(grad_kernel->data().data(), cin, g.col_rows()), true);
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  kernels::relu<T>(x.data(), out.data());
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x.shape(), grad_out.shape(), "relu_backward");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out;
  binary(a, b, out, "add");
  kernels::add<T>(a.data(), b.data(), out.data());
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out;
  binary(a, b, out, "sub");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out;
  binary(a, b, out, "mul");
  kernels::mul<T>(a.data(), b.data(), out.data());
  return out;
}

template <typename T>
Tensor<T> maximum(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out;
  binary(a, b, out, "maximum");
  kernels::maximum<T>(a.data(), b.data(), out.data());
  return out;
}

template <typename T>
Tensor<T> channel_softmax(const Tensor<T>& x) {
  require_rank(x.shape(), 3, "channel_softmax");
  const std::size_t channels = x.dim(0), plane = x.dim(1) * x.dim(2);
  for (T v : x.data()) {
    if (!std::isfinite(v)) throw std::domain_error("channel_softmax: non-finite input");
  }
  Tensor<T> out(x.shape());
  std::vector<T> peak(plane, x[0]);
  for (std::size_t i = 0; i < plane; ++i) peak[i] = x[i];
  for (std::size_t c = 1; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) peak[i] = std::max(peak[i], x[c * plane + i]);
  }
  std::vector<T> total(plane, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const T e = std::exp(x[c * plane + i] - peak[i]);
      out[c * plane + i] = e;
      total[i] += e;
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] /= total[i];
  }
  return out;
}

template <typename T>
Tensor<T> channel_softmax_backward(const Tensor<T>& softmax_out, const Tensor<T>& grad_out) {
  require_same_shape(softmax_out.shape(), grad_out.shape(), "channel_softmax_backward");
  const std::size_t channels = softmax_out.dim(0);
  const std::size_t plane = softmax_out.dim(1) * softmax_out.dim(2);
  std::vector<T> dot(plane, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      dot[i] += softmax_out[c * plane + i] * grad_out[c * plane + i];
    }
  }
  Tensor<T> out(softmax_out.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t k = c * plane + i;
      out[k] = softmax_out[k] * (grad_out[k] - dot[i]);
    }
  }
  return out;
}

std::vector<double> gaussian_taps(int length, double sigma) {
  if (length < 1 || length % 2 == 0 || !(sigma > 0)) {
    throw std::invalid_argument("gaussian_taps: length must be odd and sigma positive");
  }
  const int r = length / 2;
  std::vector<double> taps(static_cast<std::size_t>(length));
  double total = 0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + r)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

namespace {

// One 1-D pass of the cropped, re-normalized window along rows (horizontal)
// or columns (vertical). With `adjoint` the transposed linear map is applied.
template <typename T>
Tensor<T> window_pass(const Tensor<T>& x, std::span<const double> taps, bool horizontal,
                      bool adjoint) {
  const std::size_t channels = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t len = horizontal ? w : h;
  const std::size_t lines = horizontal ? h : w;
  const std::size_t step = horizontal ? 1 : w;
  const std::size_t line_step = horizontal ? w : 1;

  // Per output position: first tap index, last tap index, and 1 / weight sum.
  std::vector<std::ptrdiff_t> lo(len), hi(len);
  std::vector<double> inv(len);
  for (std::size_t i = 0; i < len; ++i) {
    const auto p = static_cast<std::ptrdiff_t>(i);
    lo[i] = std::max<std::ptrdiff_t>(-r, -p);
    hi[i] = std::min<std::ptrdiff_t>(r, static_cast<std::ptrdiff_t>(len) - 1 - p);
    double s = 0;
    for (std::ptrdiff_t t = lo[i]; t <= hi[i]; ++t) s += taps[static_cast<std::size_t>(t + r)];
    inv[i] = 1.0 / s;
  }

  Tensor<T> out(x.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t line = 0; line < lines; ++line) {
      const std::size_t base = c * h * w + line * line_step;
      for (std::size_t i = 0; i < len; ++i) {
        if (!adjoint) {
          double acc = 0;
          for (std::ptrdiff_t t = lo[i]; t <= hi[i]; ++t) {
            acc += taps[static_cast<std::size_t>(t + r)] *
                   static_cast<double>(x[base + (i + t) * step]);
          }
          out[base + i * step] = static_cast<T>(acc * inv[i]);
        } else {
          const double g = static_cast<double>(x[base + i * step]) * inv[i];
          for (std::ptrdiff_t t = lo[i]; t <= hi[i]; ++t) {
            out[base + (i + t) * step] +=
                static_cast<T>(taps[static_cast<std::size_t>(t + r)] * g);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> window_filter(const Tensor<T>& x, std::span<const double> taps) {
  require_rank(x.shape(), 3, "window_filter");
  return window_pass(window_pass(x, taps, true, false), taps, false, false);
}

template <typename T>
Tensor<T> window_filter_adjoint(const Tensor<T>& grad_out, std::span<const double> taps) {
  require_rank(grad_out.shape(), 3, "window_filter_adjoint");
  return window_pass(window_pass(grad_out, taps, false, true), taps, true, true);
}

#define SEDRFUSE_INSTANTIATE(T)                                                              \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);   \
  template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, int, const Tensor<T>&, \
                                   Tensor<T>*, Tensor<T>*, Tensor<T>*);                      \
  template Tensor<T> deconv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int); \
  template void deconv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, int,                \
                                     const Tensor<T>&, Tensor<T>*, Tensor<T>*, Tensor<T>*);  \
  template Tensor<T> relu<T>(const Tensor<T>&);                                              \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> maximum<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> channel_softmax<T>(const Tensor<T>&);                                   \
  template Tensor<T> channel_softmax_backward<T>(const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> window_filter<T>(const Tensor<T>&, std::span<const double>);            \
  template Tensor<T> window_filter_adjoint<T>(const Tensor<T>&, std::span<const double>);

SEDRFUSE_INSTANTIATE(float)
SEDRFUSE_INSTANTIATE(double)

}  // namespace sedrfuse::ops
