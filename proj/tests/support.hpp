// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

// Random inputs and small helpers shared by the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

#include "sedrfuse/image.hpp"
#include "sedrfuse/tensor.hpp"

namespace sedrfuse::testing {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                        double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(d(rng));
  return t;
}

inline GrayImage random_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  GrayImage img(w, h);
  for (float& v : img.pixels) v = d(rng);
  return img;
}

/// Random image whose pixels are exact multiples of 1/255.
inline GrayImage random_8bit_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(w, h);
  for (float& v : img.pixels) v = static_cast<float>(d(rng) / 255.0);
  return img;
}

/// Smooth blob-and-wave image, the kind of content the autoencoder learns quickly.
inline GrayImage smooth_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double amp = 0.1 + 0.3 * u(rng), fx = 0.3 * u(rng), fy = 0.3 * u(rng), phase = 6 * u(rng);
  const double cx = u(rng) * w, cy = u(rng) * h, s = 8 + 10 * u(rng), base = 0.3 + 0.3 * u(rng);
  GrayImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double v = base + amp * std::sin(fx * x + fy * y + phase) +
                       0.3 * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
      img.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return img;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sedrfuse-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string out;  // stdout only; stderr passes through to the test log
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

inline CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace sedrfuse::testing
