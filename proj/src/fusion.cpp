// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sedrfuse/tensor_ops.hpp"

namespace sedrfuse::fusion {

template <typename T>
Tensor<T> attention_map(const Tensor<T>& res_features) {
  require_rank(res_features.shape(), 3, "attention_map");
  const Tensor<T> weights = ops::channel_softmax(res_features);
  const std::size_t channels = res_features.dim(0);
  const std::size_t plane = res_features.dim(1) * res_features.dim(2);
  Tensor<T> out(Shape{1, res_features.dim(1), res_features.dim(2)});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[i] += weights[c * plane + i] * res_features[c * plane + i];
    }
  }
  return out;
}

template <typename T>
IntermediateFusion<T> fuse_intermediate(const Tensor<T>& res_ir, const Tensor<T>& res_vis) {
  require_same_shape(res_ir.shape(), res_vis.shape(), "fuse_intermediate");
  IntermediateFusion<T> r;
  r.attention_ir = attention_map(res_ir);
  r.attention_vis = attention_map(res_vis);

  const std::size_t plane = r.attention_ir.size();
  r.weight_ir = Tensor<T>(r.attention_ir.shape());
  r.weight_vis = Tensor<T>(r.attention_ir.shape());
  for (std::size_t i = 0; i < plane; ++i) {
    const T a1 = r.attention_ir[i];
    const T a2 = r.attention_vis[i];
    if (!std::isfinite(a1) || !std::isfinite(a2)) {
      throw std::domain_error("fuse_intermediate: non-finite attention value");
    }
    const T total = a1 + a2;
    if (std::abs(static_cast<double>(total)) < kWeightGuard) {
      r.weight_ir[i] = T(0.5);
      r.weight_vis[i] = T(0.5);
    } else {
      r.weight_ir[i] = a1 / total;
      r.weight_vis[i] = a2 / total;
    }
  }

  r.fused = Tensor<T>(res_ir.shape());
  const std::size_t channels = res_ir.dim(0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t k = c * plane + i;
      r.fused[k] = r.weight_ir[i] * res_ir[k] + r.weight_vis[i] * res_vis[k];
    }
  }
  return r;
}

template <typename T>
Tensor<T> fuse_compensation(const Tensor<T>& a, const Tensor<T>& b) {
  return ops::maximum(a, b);
}

template <typename T>
FusionOutput<T> fuse_tensors(const Tensor<T>& ir, const Tensor<T>& vis,
                             const NetworkWeights<T>& w) {
  check_image_shape(ir.shape(), "fuse (infrared)");
  check_image_shape(vis.shape(), "fuse (visible)");
  require_same_shape(ir.shape(), vis.shape(), "fuse: source images");

  const EncodedFeatures<T> e1 = encode(ir, w);
  const EncodedFeatures<T> e2 = encode(vis, w);
  FusionOutput<T> out;
  out.intermediate = fuse_intermediate(e1.res_out, e2.res_out);
  const Tensor<T> comp1 = fuse_compensation(e1.conv1_out, e2.conv1_out);
  const Tensor<T> comp2 = fuse_compensation(e1.conv2_out, e2.conv2_out);
  out.decoded = decode(out.intermediate.fused, comp1, comp2, w);
  return out;
}

template <typename T>
GrayImage normalize_for_display(const Tensor<T>& map) {
  const auto [lo, hi] = std::minmax_element(map.data().begin(), map.data().end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  Tensor<double> scaled(map.shape());
  for (std::size_t i = 0; i < map.size(); ++i) {
    scaled[i] = range > 0 ? (static_cast<double>(map[i]) - *lo) / range : 0.0;
  }
  return GrayImage::from_tensor(scaled);
}

GrayImage fuse_images(const GrayImage& ir, const GrayImage& vis, const NetworkWeights<float>& w,
                      FusionDebug* debug) {
  if (ir.width != vis.width || ir.height != vis.height) {
    throw ShapeError("fuse: source sizes differ (" + std::to_string(ir.width) + "x" +
                     std::to_string(ir.height) + " vs " + std::to_string(vis.width) + "x" +
                     std::to_string(vis.height) + ")");
  }
  const FusionOutput<float> out = fuse_tensors(ir.to_tensor(), vis.to_tensor(), w);
  if (debug) {
    debug->attention_ir = normalize_for_display(out.intermediate.attention_ir);
    debug->attention_vis = normalize_for_display(out.intermediate.attention_vis);
    debug->weight_ir = normalize_for_display(out.intermediate.weight_ir);
    debug->weight_vis = normalize_for_display(out.intermediate.weight_vis);
  }
  return GrayImage::from_tensor(out.decoded);
}

#define SEDRFUSE_INSTANTIATE(T)                                                                 \
  template Tensor<T> attention_map<T>(const Tensor<T>&);                                        \
  template IntermediateFusion<T> fuse_intermediate<T>(const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> fuse_compensation<T>(const Tensor<T>&, const Tensor<T>&);                  \
  template FusionOutput<T> fuse_tensors<T>(const Tensor<T>&, const Tensor<T>&,                  \
                                           const NetworkWeights<T>&);                           \
  template GrayImage normalize_for_display<T>(const Tensor<T>&);

SEDRFUSE_INSTANTIATE(float)
SEDRFUSE_INSTANTIATE(double)

}  // namespace sedrfuse::fusion
