// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "sedrfuse/tensor_ops.hpp"

namespace sedrfuse {

void NetworkConfig::validate() const {
  if (base_channels == 0) throw std::invalid_argument("base_channels must be at least 1");
  if (input_height == 0 || input_width == 0 || input_height % 4 || input_width % 4) {
    throw std::invalid_argument("input size " + std::to_string(input_height) + "x" +
                                std::to_string(input_width) + " must be positive and divisible by 4");
  }
}

std::size_t NetworkConfig::parameter_count() const {
  const std::size_t b = base_channels;
  const std::size_t encoder = (9 * 1 * b + b) + (9 * b * 2 * b + 2 * b) + (9 * 2 * b * 4 * b + 4 * b);
  const std::size_t block = 2 * (9 * 4 * b * 4 * b + 4 * b);
  const std::size_t decoder = (9 * 4 * b * 2 * b + 2 * b) + (9 * 2 * b * b + b) + (9 * b * 1 + 1);
  return encoder + residual_blocks * block + decoder;
}

std::vector<std::string> layer_names(const NetworkConfig& config) {
  std::vector<std::string> names{"conv1", "conv2", "conv3"};
  for (std::size_t j = 0; j < config.residual_blocks; ++j) {
    names.push_back("res" + std::to_string(j) + ".a");
    names.push_back("res" + std::to_string(j) + ".b");
  }
  names.insert(names.end(), {"dconv_a", "dconv_b", "dconv_c"});
  return names;
}

template <typename T>
std::vector<ConvParams<T>*> NetworkWeights<T>::layers() {
  std::vector<ConvParams<T>*> out{&conv1, &conv2, &conv3};
  for (auto& r : res) {
    out.push_back(&r.a);
    out.push_back(&r.b);
  }
  out.insert(out.end(), {&dconv_a, &dconv_b, &dconv_c});
  return out;
}

template <typename T>
std::vector<const ConvParams<T>*> NetworkWeights<T>::layers() const {
  std::vector<const ConvParams<T>*> out;
  for (auto* p : const_cast<NetworkWeights*>(this)->layers()) out.push_back(p);
  return out;
}

template <typename T>
std::size_t NetworkWeights<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* l : layers()) n += l->kernel.size() + l->bias.size();
  return n;
}

template <typename T>
template <typename U>
NetworkWeights<U> NetworkWeights<T>::cast() const {
  NetworkWeights<U> out = zero_weights<U>(config);
  auto src = layers();
  auto dst = out.layers();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->kernel = src[i]->kernel.template cast<U>();
    dst[i]->bias = src[i]->bias.template cast<U>();
  }
  return out;
}

template <typename T>
NetworkWeights<T> zero_weights(const NetworkConfig& config) {
  config.validate();
  const std::size_t b = config.base_channels;
  auto layer = [](std::size_t d0, std::size_t d1, std::size_t bias) {
    return ConvParams<T>{Tensor<T>(Shape{d0, d1, 3, 3}), Tensor<T>(Shape{bias})};
  };
  NetworkWeights<T> w;
  w.config = config;
  w.conv1 = layer(b, 1, b);
  w.conv2 = layer(2 * b, b, 2 * b);
  w.conv3 = layer(4 * b, 2 * b, 4 * b);
  for (std::size_t j = 0; j < config.residual_blocks; ++j) {
    w.res.push_back({layer(4 * b, 4 * b, 4 * b), layer(4 * b, 4 * b, 4 * b)});
  }
  w.dconv_a = layer(4 * b, 2 * b, 2 * b);
  w.dconv_b = layer(2 * b, b, b);
  w.dconv_c = layer(b, 1, 1);
  return w;
}

template <typename T>
NetworkWeights<T> init_weights(const NetworkConfig& config, std::uint64_t seed) {
  NetworkWeights<T> w = zero_weights<T>(config);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](ConvParams<T>& p, double fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (T& v : p.kernel.data()) v = static_cast<T>(dist(rng));
  };
  auto conv_fan = [](const ConvParams<T>& p) { return static_cast<double>(p.kernel.dim(1) * 9); };
  auto deconv_fan = [](const ConvParams<T>& p, double stride) {
    return static_cast<double>(p.kernel.dim(0) * 9) / (stride * stride);
  };
  fill(w.conv1, conv_fan(w.conv1));
  fill(w.conv2, conv_fan(w.conv2));
  fill(w.conv3, conv_fan(w.conv3));
  for (auto& r : w.res) {
    fill(r.a, conv_fan(r.a));
    fill(r.b, conv_fan(r.b));
  }
  fill(w.dconv_a, deconv_fan(w.dconv_a, 2));
  fill(w.dconv_b, deconv_fan(w.dconv_b, 2));
  fill(w.dconv_c, deconv_fan(w.dconv_c, 1));
  return w;
}

void check_image_shape(const Shape& image, const char* what) {
  if (image.size() != 3 || image[0] != 1) {
    throw ShapeError(std::string(what) + ": expected a [1, H, W] image, got " +
                     shape_to_string(image));
  }
  if (image[1] % 4 || image[2] % 4) {
    throw ShapeError(std::string(what) + ": image size " + std::to_string(image[1]) + "x" +
                     std::to_string(image[2]) + " is not divisible by 4");
  }
}

namespace {

void check_decoder_inputs(const Shape& res, const Shape& skip1, const Shape& skip2,
                          const NetworkConfig& config) {
  const std::size_t b = config.base_channels;
  require_rank(res, 3, "decode res_features");
  if (res[0] != 4 * b) {
    throw ShapeError("decode: residual features need " + std::to_string(4 * b) +
                     " channels, got " + shape_to_string(res));
  }
  require_same_shape(skip2, Shape{2 * b, 2 * res[1], 2 * res[2]}, "decode skip2");
  require_same_shape(skip1, Shape{b, 4 * res[1], 4 * res[2]}, "decode skip1");
}

template <typename T>
Tensor<T> conv_relu(const Tensor<T>& x, const ConvParams<T>& p, int stride) {
  return ops::relu(ops::conv2d(x, p.kernel, p.bias, stride));
}

}  // namespace

template <typename T>
Tensor<T> residual_block(const Tensor<T>& x, const ResidualParams<T>& p) {
  const Tensor<T> inner = conv_relu(x, p.a, 1);
  return ops::relu(ops::add(x, ops::conv2d(inner, p.b.kernel, p.b.bias, 1)));
}

template <typename T>
EncodedFeatures<T> encode(const Tensor<T>& image, const NetworkWeights<T>& w) {
  check_image_shape(image.shape(), "encode");
  EncodedFeatures<T> f;
  f.conv1_out = conv_relu(image, w.conv1, 1);
  f.conv2_out = conv_relu(f.conv1_out, w.conv2, 2);
  Tensor<T> x = conv_relu(f.conv2_out, w.conv3, 2);
  for (const auto& block : w.res) x = residual_block(x, block);
  f.res_out = std::move(x);
  return f;
}

template <typename T>
Tensor<T> decode(const Tensor<T>& res_features, const Tensor<T>& skip1, const Tensor<T>& skip2,
                 const NetworkWeights<T>& w) {
  check_decoder_inputs(res_features.shape(), skip1.shape(), skip2.shape(), w.config);
  const Tensor<T> d2 = ops::relu(ops::deconv2d(res_features, w.dconv_a.kernel, w.dconv_a.bias, 2));
  const Tensor<T> f2 = ops::add(skip2, d2);
  const Tensor<T> d1 = ops::relu(ops::deconv2d(f2, w.dconv_b.kernel, w.dconv_b.bias, 2));
  const Tensor<T> f1 = ops::add(skip1, d1);
  return ops::deconv2d(f1, w.dconv_c.kernel, w.dconv_c.bias, 1);
}

template <typename T>
Tensor<T> reconstruct(const Tensor<T>& image, const NetworkWeights<T>& w) {
  const EncodedFeatures<T> f = encode(image, w);
  return decode(f.res_out, f.conv1_out, f.conv2_out, w);
}

template <typename T>
std::vector<ad::Var<T>> WeightVars<T>::all() const {
  std::vector<ad::Var<T>> out;
  auto push = [&out](const LayerVars<T>& l) {
    out.push_back(l.kernel);
    out.push_back(l.bias);
  };
  push(conv1);
  push(conv2);
  push(conv3);
  for (const auto& [a, b] : res) {
    push(a);
    push(b);
  }
  push(dconv_a);
  push(dconv_b);
  push(dconv_c);
  return out;
}

template <typename T>
WeightVars<T> bind_weights(ad::Tape<T>& tape, const NetworkWeights<T>& w, bool requires_grad) {
  auto bind = [&](const ConvParams<T>& p) {
    return LayerVars<T>{tape.leaf(p.kernel, requires_grad), tape.leaf(p.bias, requires_grad)};
  };
  WeightVars<T> v;
  v.conv1 = bind(w.conv1);
  v.conv2 = bind(w.conv2);
  v.conv3 = bind(w.conv3);
  for (const auto& r : w.res) v.res.emplace_back(bind(r.a), bind(r.b));
  v.dconv_a = bind(w.dconv_a);
  v.dconv_b = bind(w.dconv_b);
  v.dconv_c = bind(w.dconv_c);
  return v;
}

template <typename T>
EncodedVars<T> encode(ad::Var<T> image, const WeightVars<T>& w) {
  check_image_shape(image.shape(), "encode");
  auto conv_relu_var = [](ad::Var<T> x, const LayerVars<T>& l, int stride) {
    return ad::relu(ad::conv2d(x, l.kernel, l.bias, stride));
  };
  EncodedVars<T> e;
  e.conv1_out = conv_relu_var(image, w.conv1, 1);
  e.conv2_out = conv_relu_var(e.conv1_out, w.conv2, 2);
  ad::Var<T> x = conv_relu_var(e.conv2_out, w.conv3, 2);
  for (const auto& [a, b] : w.res) {
    const ad::Var<T> inner = conv_relu_var(x, a, 1);
    x = ad::relu(ad::add(x, ad::conv2d(inner, b.kernel, b.bias, 1)));
  }
  e.res_out = x;
  return e;
}

template <typename T>
ad::Var<T> decode(ad::Var<T> res_features, ad::Var<T> skip1, ad::Var<T> skip2,
                  const WeightVars<T>& w) {
  const std::size_t base = w.conv1.bias.value().size();
  NetworkConfig shape_only;
  shape_only.base_channels = base;
  check_decoder_inputs(res_features.shape(), skip1.shape(), skip2.shape(), shape_only);
  const auto d2 = ad::relu(ad::deconv2d(res_features, w.dconv_a.kernel, w.dconv_a.bias, 2));
  const auto f2 = ad::add(skip2, d2);
  const auto d1 = ad::relu(ad::deconv2d(f2, w.dconv_b.kernel, w.dconv_b.bias, 2));
  const auto f1 = ad::add(skip1, d1);
  return ad::deconv2d(f1, w.dconv_c.kernel, w.dconv_c.bias, 1);
}

template <typename T>
ad::Var<T> reconstruct(ad::Var<T> image, const WeightVars<T>& w) {
  const EncodedVars<T> e = encode(image, w);
  return decode(e.res_out, e.conv1_out, e.conv2_out, w);
}

#define SEDRFUSE_INSTANTIATE(T)                                                                \
  template struct NetworkWeights<T>;                                                           \
  template struct WeightVars<T>;                                                               \
  template NetworkWeights<T> zero_weights<T>(const NetworkConfig&);                            \
  template NetworkWeights<T> init_weights<T>(const NetworkConfig&, std::uint64_t);             \
  template EncodedFeatures<T> encode<T>(const Tensor<T>&, const NetworkWeights<T>&);           \
  template Tensor<T> residual_block<T>(const Tensor<T>&, const ResidualParams<T>&);            \
  template Tensor<T> decode<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                               const NetworkWeights<T>&);                                      \
  template Tensor<T> reconstruct<T>(const Tensor<T>&, const NetworkWeights<T>&);               \
  template WeightVars<T> bind_weights<T>(ad::Tape<T>&, const NetworkWeights<T>&, bool);        \
  template EncodedVars<T> encode<T>(ad::Var<T>, const WeightVars<T>&);                         \
  template ad::Var<T> decode<T>(ad::Var<T>, ad::Var<T>, ad::Var<T>, const WeightVars<T>&);     \
  template ad::Var<T> reconstruct<T>(ad::Var<T>, const WeightVars<T>&);

SEDRFUSE_INSTANTIATE(float)
SEDRFUSE_INSTANTIATE(double)

template NetworkWeights<double> NetworkWeights<float>::cast<double>() const;
template NetworkWeights<float> NetworkWeights<double>::cast<float>() const;
template NetworkWeights<float> NetworkWeights<float>::cast<float>() const;

}  // namespace sedrfuse
