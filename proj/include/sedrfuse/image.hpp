// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sedrfuse/tensor.hpp"

namespace sedrfuse {

/// Single-channel image with row-major pixels in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), pixels(w * h, fill) {}
  GrayImage(std::size_t w, std::size_t h, std::vector<float> px);

  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

  /// [1, H, W] view of the pixels.
  template <typename T = float>
  Tensor<T> to_tensor() const {
    return Tensor<T>(Shape{1, height, width}, std::vector<T>(pixels.begin(), pixels.end()));
  }

  /// Takes a [1, H, W] tensor, clamping every value into [0, 1].
  template <typename T>
  static GrayImage from_tensor(const Tensor<T>& t) {
    require_rank(t.shape(), 3, "GrayImage::from_tensor");
    if (t.dim(0) != 1) throw ShapeError("GrayImage::from_tensor: expected one channel");
    GrayImage img(t.dim(2), t.dim(1));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double v = static_cast<double>(t[i]);
      img.pixels[i] = static_cast<float>(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v));
    }
    return img;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// floor(clamp(v, 0, 1) * 255 + 0.5)
std::uint8_t quantize_pixel(float v);

}  // namespace sedrfuse
