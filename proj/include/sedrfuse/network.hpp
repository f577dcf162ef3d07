// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sedrfuse/autodiff.hpp"
#include "sedrfuse/tensor.hpp"

namespace sedrfuse {

/// Architecture knobs. Channel widths are base, 2*base, 4*base for the three
/// encoder convolutions and mirrored in the decoder.
struct NetworkConfig {
  std::size_t residual_blocks = 1;
  std::size_t base_channels = 64;
  /// Training resolution. The network itself accepts any size divisible by 4.
  std::size_t input_height = 256;
  std::size_t input_width = 256;

  void validate() const;
  /// Closed-form count of learned scalars (kernels and biases).
  std::size_t parameter_count() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

template <typename T>
struct ConvParams {
  Tensor<T> kernel;
  Tensor<T> bias;
};

template <typename T>
struct ResidualParams {
  ConvParams<T> a;
  ConvParams<T> b;
};

/// All learned parameters. Encoder kernels are [Cout, Cin, 3, 3]; decoder
/// (transposed) kernels are [Cin, Cout, 3, 3].
template <typename T>
struct NetworkWeights {
  NetworkConfig config;
  ConvParams<T> conv1, conv2, conv3;
  std::vector<ResidualParams<T>> res;
  ConvParams<T> dconv_a, dconv_b, dconv_c;

  /// Layers in serialization order: conv1, conv2, conv3, res[0].a, res[0].b,
  /// ..., dconv_a, dconv_b, dconv_c.
  std::vector<ConvParams<T>*> layers();
  std::vector<const ConvParams<T>*> layers() const;
  std::size_t parameter_count() const;

  template <typename U>
  NetworkWeights<U> cast() const;
};

/// Human-readable layer names matching NetworkWeights::layers() order.
std::vector<std::string> layer_names(const NetworkConfig& config);

/// Zero kernels and biases with the shapes implied by config.
template <typename T>
NetworkWeights<T> zero_weights(const NetworkConfig& config);

/// He-style initialization: kernels ~ N(0, 2 / fan_in), biases zero. For a
/// transposed layer fan_in counts the taps that reach one output pixel.
template <typename T>
NetworkWeights<T> init_weights(const NetworkConfig& config, std::uint64_t seed);

/// Outputs of the encoder for one image: conv1 [b, H, W], conv2 [2b, H/2, W/2]
/// (both post-ReLU) and the residual chain output [4b, H/4, W/4].
template <typename T>
struct EncodedFeatures {
  Tensor<T> conv1_out;
  Tensor<T> conv2_out;
  Tensor<T> res_out;
};

/// Throws ShapeError unless image is [1, H, W] with H and W divisible by 4.
void check_image_shape(const Shape& image, const char* what);

template <typename T>
EncodedFeatures<T> encode(const Tensor<T>& image, const NetworkWeights<T>& w);

/// relu(x + conv(relu(conv(x, a)), b)), all stride 1.
template <typename T>
Tensor<T> residual_block(const Tensor<T>& x, const ResidualParams<T>& p);

/// Decoder with skip summation. The final layer is linear; callers clamp when
/// converting to pixels.
template <typename T>
Tensor<T> decode(const Tensor<T>& res_features, const Tensor<T>& skip1, const Tensor<T>& skip2,
                 const NetworkWeights<T>& w);

/// encode followed by decode with the image's own conv1/conv2 features as skips.
template <typename T>
Tensor<T> reconstruct(const Tensor<T>& image, const NetworkWeights<T>& w);

// Tape-recorded versions used for training and gradient checks.

template <typename T>
struct LayerVars {
  ad::Var<T> kernel;
  ad::Var<T> bias;
};

template <typename T>
struct WeightVars {
  LayerVars<T> conv1, conv2, conv3;
  std::vector<std::pair<LayerVars<T>, LayerVars<T>>> res;
  LayerVars<T> dconv_a, dconv_b, dconv_c;

  /// kernel, bias pairs flattened in serialization order.
  std::vector<ad::Var<T>> all() const;
};

template <typename T>
WeightVars<T> bind_weights(ad::Tape<T>& tape, const NetworkWeights<T>& w, bool requires_grad);

template <typename T>
struct EncodedVars {
  ad::Var<T> conv1_out;
  ad::Var<T> conv2_out;
  ad::Var<T> res_out;
};

template <typename T>
EncodedVars<T> encode(ad::Var<T> image, const WeightVars<T>& w);
template <typename T>
ad::Var<T> decode(ad::Var<T> res_features, ad::Var<T> skip1, ad::Var<T> skip2,
                  const WeightVars<T>& w);
template <typename T>
ad::Var<T> reconstruct(ad::Var<T> image, const WeightVars<T>& w);

}  // namespace sedrfuse
