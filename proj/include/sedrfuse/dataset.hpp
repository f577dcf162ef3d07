// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sedrfuse/image.hpp"

namespace sedrfuse::io {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestEntry {
  std::string path;  // relative to the dataset directory
  std::size_t original_width = 0;
  std::size_t original_height = 0;
  std::uint32_t crc32 = 0;  // of the file bytes
  std::string status;       // "ok" or "skipped: <reason>"
};

struct Dataset {
  std::vector<GrayImage> images;       // one per "ok" entry, same order
  std::vector<ManifestEntry> entries;  // every candidate file, lexicographic

  /// CSV: path,width,height,crc32,status
  std::string manifest_csv() const;
  /// crc32 of manifest_csv(), as 8 lowercase hex digits.
  std::string manifest_hash() const;
};

/// Loads every .pgm/.ppm/.png file directly inside `dir` in lexicographic
/// order, resizing each to width x height. Undecodable files are skipped and
/// reported through `warn`. Throws DatasetError if no image survives.
Dataset ingest_dataset(const std::filesystem::path& dir, std::size_t width = 256,
                       std::size_t height = 256,
                       const std::function<void(const std::string&)>& warn = {});

std::uint32_t crc32(const void* data, std::size_t size);

}  // namespace sedrfuse::io
