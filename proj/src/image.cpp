// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/image.hpp"

#include <cmath>
#include <string>

namespace sedrfuse {

GrayImage::GrayImage(std::size_t w, std::size_t h, std::vector<float> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (pixels.size() != w * h) {
    throw ShapeError("GrayImage: " + std::to_string(w) + "x" + std::to_string(h) + " needs " +
                     std::to_string(w * h) + " pixels, got " + std::to_string(pixels.size()));
  }
}

std::uint8_t quantize_pixel(float v) {
  const double c = v < 0.0f ? 0.0 : (v > 1.0f ? 1.0 : static_cast<double>(v));
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

}  // namespace sedrfuse
