// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "sedrfuse/tensor.hpp"

// Value-level tensor primitives and their vector-Jacobian products. Feature
// maps are rank-3 [C, H, W]. The autodiff tape wraps these; inference code
// calls them directly.

namespace sedrfuse::ops {

/// 3x3 cross-correlation, zero padding of 1 on every side.
/// input [Cin, H, W], kernel [Cout, Cin, 3, 3], bias [Cout], stride 1 or 2.
/// H and W must be divisible by the stride; output is [Cout, H/s, W/s].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride);

/// Accumulates into any non-null gradient. grad_out has the forward output shape.
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, int stride,
                     const Tensor<T>& grad_out, Tensor<T>* grad_input, Tensor<T>* grad_kernel,
                     Tensor<T>* grad_bias);

/// Transposed 3x3 convolution. input [Cin, H, W], kernel [Cin, Cout, 3, 3],
/// bias [Cout]; output [Cout, s*H, s*W]. Input pixel (y, x) of channel ci adds
/// kernel[ci][co][u][v] times its value to output (s*y + u - 1, s*x + v - 1),
/// so this is the adjoint of conv2d with the same kernel tensor. Equivalently:
/// insert s-1 zeros between input pixels, pad 1 on the top/left and s on the
/// bottom/right, and cross-correlate with the spatially reversed kernel.
template <typename T>
Tensor<T> deconv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                   int stride);

template <typename T>
void deconv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, int stride,
                       const Tensor<T>& grad_out, Tensor<T>* grad_input,
                       Tensor<T>* grad_kernel, Tensor<T>* grad_bias);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

/// grad_out where x > 0, zero elsewhere.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// Element-wise a > b ? a : b.
template <typename T>
Tensor<T> maximum(const Tensor<T>& a, const Tensor<T>& b);

/// Softmax across channels at each (y, x) of a [C, H, W] tensor. The channel
/// maximum is subtracted before exponentiation. Non-finite input is rejected.
template <typename T>
Tensor<T> channel_softmax(const Tensor<T>& x);

/// VJP given the softmax output: g_in = s * (g - sum_c s_c g_c).
template <typename T>
Tensor<T> channel_softmax_backward(const Tensor<T>& softmax_out, const Tensor<T>& grad_out);

/// Normalized 1-D Gaussian taps of odd length with the given sigma.
std::vector<double> gaussian_taps(int length, double sigma);

/// Separable same-size smoothing of every channel of a [C, H, W] tensor. At
/// the borders the window is cropped to the image and re-normalized, so each
/// output is a weighted mean of in-bounds pixels.
template <typename T>
Tensor<T> window_filter(const Tensor<T>& x, std::span<const double> taps);

/// Adjoint of window_filter.
template <typename T>
Tensor<T> window_filter_adjoint(const Tensor<T>& grad_out, std::span<const double> taps);

}  // namespace sedrfuse::ops
