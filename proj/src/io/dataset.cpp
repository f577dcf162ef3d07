// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <zlib.h>

#include "sedrfuse/image_io.hpp"

namespace sedrfuse::io {

std::uint32_t crc32(const void* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (size > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string Dataset::manifest_csv() const {
  std::ostringstream os;
  os << "path,width,height,crc32,status\n";
  for (const auto& e : entries) {
    char crc[9];
    std::snprintf(crc, sizeof crc, "%08x", e.crc32);
    os << e.path << ',' << e.original_width << ',' << e.original_height << ',' << crc << ','
       << e.status << '\n';
  }
  return os.str();
}

std::string Dataset::manifest_hash() const {
  const std::string text = manifest_csv();
  char out[9];
  std::snprintf(out, sizeof out, "%08x", crc32(text.data(), text.size()));
  return out;
}

Dataset ingest_dataset(const std::filesystem::path& dir, std::size_t width, std::size_t height,
                       const std::function<void(const std::string&)>& warn) {
  namespace fs = std::filesystem;
  if (width == 0 || height == 0) throw DatasetError("ingest_dataset: target size must be positive");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DatasetError(dir.string() + ": not a directory");

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".png") {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());

  Dataset ds;
  for (const std::string& name : names) {
    ManifestEntry e;
    e.path = name;
    std::ifstream in(dir / name, std::ios::binary);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    e.crc32 = crc32(bytes.data(), bytes.size());
    try {
      if (!in && !in.eof()) throw ImageError(ImageError::Kind::unreadable, name + ": read failed");
      const GrayImage img = decode_image(bytes, name);
      e.original_width = img.width;
      e.original_height = img.height;
      e.status = "ok";
      ds.images.push_back(resize_bilinear(img, width, height));
    } catch (const ImageError& err) {
      e.status = std::string("skipped: ") + err.what();
      std::replace(e.status.begin(), e.status.end(), ',', ';');
      if (warn) warn("warning: skipping " + (dir / name).string() + ": " + err.what());
    }
    ds.entries.push_back(std::move(e));
  }
  if (ds.images.empty()) {
    throw DatasetError(dir.string() + ": no readable images (" + std::to_string(names.size()) +
                       " candidate files)");
  }
  return ds;
}

}  // namespace sedrfuse::io
