// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#ifdef SEDRFUSE_HAVE_PNG
#include <png.h>
#endif

namespace sedrfuse::io {
namespace {

using Kind = ImageError::Kind;

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

float luma(double r, double g, double b) {
  return static_cast<float>(0.299 * r + 0.587 * g + 0.114 * b);
}

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  // Skips whitespace and '#' comments, then parses a decimal field.
  std::uint64_t number(const char* field) {
    for (;;) {
      while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
      if (pos_ < bytes_.size() && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw ImageError(Kind::malformed_header, name_ + ": missing or invalid " + field);
    }
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1u << 30)) throw ImageError(Kind::malformed_header, name_ + ": " + field + " too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ImageError(Kind::malformed_header, name_ + ": header not terminated by whitespace");
    }
    return pos_ + 1;
  }

  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

GrayImage decode_netpbm(std::span<const std::uint8_t> bytes, const std::string& name) {
  const bool color = bytes[1] == '6';
  HeaderReader header(bytes, name);
  header.skip(2);
  const std::uint64_t w = header.number("width");
  const std::uint64_t h = header.number("height");
  const std::uint64_t maxval = header.number("maxval");
  if (w == 0 || h == 0) throw ImageError(Kind::malformed_header, name + ": zero image dimension");
  if (maxval == 0 || maxval > 65535) {
    throw ImageError(Kind::malformed_header, name + ": maxval " + std::to_string(maxval) +
                                                 " outside 1..65535");
  }
  if (maxval > 255) {
    throw ImageError(Kind::unsupported_depth,
                     name + ": 16-bit samples (maxval " + std::to_string(maxval) +
                         ") are not supported; only 8-bit PGM/PPM");
  }
  const std::size_t start = header.raster_start();
  const std::size_t channels = color ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(w * h) * channels;
  if (bytes.size() - start < need) {
    throw ImageError(Kind::unreadable, name + ": truncated pixel data (" +
                                           std::to_string(bytes.size() - start) + " of " +
                                           std::to_string(need) + " bytes)");
  }
  GrayImage img(w, h);
  const double scale = static_cast<double>(maxval);
  const std::uint8_t* p = bytes.data() + start;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (color) {
      img.pixels[i] = luma(p[3 * i] / scale, p[3 * i + 1] / scale, p[3 * i + 2] / scale);
    } else {
      img.pixels[i] = static_cast<float>(p[i] / scale);
    }
  }
  return img;
}

#ifdef SEDRFUSE_HAVE_PNG
GrayImage decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
  // IHDR bit depth sits right after the signature, chunk header, width and height.
  if (bytes.size() < 33) throw ImageError(Kind::malformed_header, name + ": truncated PNG header");
  if (bytes[24] == 16) {
    throw ImageError(Kind::unsupported_depth, name + ": 16-bit PNG is not supported");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw ImageError(Kind::malformed_header, name + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> raster(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raster.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageError(Kind::unreadable, name + ": " + msg);
  }
  GrayImage img(image.width, image.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (color) {
      img.pixels[i] =
          luma(raster[3 * i] / 255.0, raster[3 * i + 1] / 255.0, raster[3 * i + 2] / 255.0);
    } else {
      img.pixels[i] = static_cast<float>(raster[i] / 255.0);
    }
  }
  return img;
}
#endif

std::vector<std::uint8_t> quantized(const GrayImage& img) {
  std::vector<std::uint8_t> out(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), out.begin(), quantize_pixel);
  return out;
}

}  // namespace

bool png_supported() {
#ifdef SEDRFUSE_HAVE_PNG
  return true;
#else
  return false;
#endif
}

GrayImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_netpbm(bytes, name);
  }
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
#ifdef SEDRFUSE_HAVE_PNG
    return decode_png(bytes, name);
#else
    throw ImageError(Kind::malformed_header, name + ": PNG support was not compiled in");
#endif
  }
  throw ImageError(Kind::malformed_header,
                   name + ": unrecognized format (expected P5/P6 netpbm or PNG)");
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError(Kind::unreadable, path.string() + ": cannot open for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw ImageError(Kind::unreadable, path.string() + ": read failed");
  return decode_image(bytes, path.string());
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto raster = quantized(img);
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") {
#ifdef SEDRFUSE_HAVE_PNG
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_GRAY;
    const auto raster = quantized(img);
    if (!png_image_write_to_file(&image, path.c_str(), 0, raster.data(), 0, nullptr)) {
      throw ImageError(Kind::unwritable, path.string() + ": " + image.message);
    }
    return;
#else
    throw ImageError(Kind::unwritable, path.string() + ": PNG support was not compiled in");
#endif
  }
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ImageError(Kind::unwritable, path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError(Kind::unwritable, path.string() + ": write failed");
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height) {
  if (img.width == 0 || img.height == 0 || width == 0 || height == 0) {
    throw std::invalid_argument("resize_bilinear: empty image or target");
  }
  if (img.width == width && img.height == height) return img;
  auto source_coord = [](std::size_t dst, std::size_t src_len, std::size_t dst_len) {
    const double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_len) /
                         static_cast<double>(dst_len) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(src_len - 1));
  };
  GrayImage out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = source_coord(y, img.height, height);
    const std::size_t y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = source_coord(x, img.width, width);
      const std::size_t x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx;
      const double bottom = img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx;
      out.at(x, y) = static_cast<float>(top * (1 - fy) + bottom * fy);
    }
  }
  return out;
}

}  // namespace sedrfuse::io
