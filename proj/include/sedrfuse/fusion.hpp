// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sedrfuse/image.hpp"
#include "sedrfuse/network.hpp"
#include "sedrfuse/tensor.hpp"

namespace sedrfuse::fusion {

/// Activity map of one source: the channel-softmax-weighted sum of its
/// residual features, A(x, y) = sum_i softmax_i(f(x, y)) * f_i(x, y).
/// Input [C, h, w], output [1, h, w].
template <typename T>
Tensor<T> attention_map(const Tensor<T>& res_features);

template <typename T>
struct IntermediateFusion {
  Tensor<T> fused;          // [C, h, w]
  Tensor<T> attention_ir;   // [1, h, w]
  Tensor<T> attention_vis;
  Tensor<T> weight_ir;      // A_ir / (A_ir + A_vis)
  Tensor<T> weight_vis;
};

/// Where |A_ir + A_vis| < this, both weights fall back to 0.5.
inline constexpr double kWeightGuard = 1e-12;

/// Blends the two residual feature stacks per pixel with weights proportional
/// to their attention maps. Throws std::domain_error on non-finite attention.
template <typename T>
IntermediateFusion<T> fuse_intermediate(const Tensor<T>& res_ir, const Tensor<T>& res_vis);

/// Element-wise choose-max of two compensation feature stacks.
template <typename T>
Tensor<T> fuse_compensation(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct FusionOutput {
  Tensor<T> decoded;  // [1, H, W], before clamping
  IntermediateFusion<T> intermediate;
};

/// Feature-level fusion of two registered [1, H, W] sources.
template <typename T>
FusionOutput<T> fuse_tensors(const Tensor<T>& ir, const Tensor<T>& vis,
                             const NetworkWeights<T>& w);

/// Maps for inspection, each rescaled to [0, 1] on its own range.
struct FusionDebug {
  GrayImage attention_ir;
  GrayImage attention_vis;
  GrayImage weight_ir;
  GrayImage weight_vis;
};

/// Fuses an infrared/visible pair of equal size (divisible by 4); the output
/// is clamped to [0, 1]. Fills `debug` when given.
GrayImage fuse_images(const GrayImage& ir, const GrayImage& vis, const NetworkWeights<float>& w,
                      FusionDebug* debug = nullptr);

/// Min-max rescale of a [1, h, w] map for display. A flat map becomes all zeros.
template <typename T>
GrayImage normalize_for_display(const Tensor<T>& map);

}  // namespace sedrfuse::fusion
