// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sedrfuse/image.hpp"

namespace sedrfuse::io {

class ImageError : public std::runtime_error {
 public:
  enum class Kind { unreadable, unsupported_depth, malformed_header, unwritable };

  ImageError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads binary PGM (P5), binary PPM (P6) or, when built with PNG support,
/// PNG. Color input is reduced to luma 0.299 R + 0.587 G + 0.114 B; samples
/// are divided by the format's maximum value.
GrayImage load_image(const std::filesystem::path& path);
/// Same, from an in-memory file image. `name` only labels diagnostics.
GrayImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name);

/// Writes PNG when the extension is ".png", P5 PGM otherwise. Pixels are
/// clamped and quantized with quantize_pixel.
void save_image(const GrayImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

bool png_supported();

/// Bilinear resampling with half-pixel centers and edge clamping.
GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height);

}  // namespace sedrfuse::io
