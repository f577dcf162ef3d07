// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sedrfuse/network.hpp"

namespace sedrfuse::io {

// Layout (little-endian):
//   "SEDRCKPT"  8 bytes
//   u32 version
//   u32 residual_blocks, u32 base_channels, u32 input_height, u32 input_width
//   u64 parameter count
//   f32 blobs, layer by layer in NetworkWeights::layers() order, kernel then bias.
//     Encoder kernels are [Cout, Cin, 3, 3], transposed-layer kernels
//     [Cin, Cout, 3, 3], both row-major.
//   u32 CRC-32 of every preceding byte
inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'D', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, truncated, bad_magic, version_mismatch, checksum, bad_config };

  CheckpointError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> serialize_checkpoint(const NetworkWeights<float>& w);
/// Validates magic, then version (before any parameter is touched), then the
/// checksum, then the configuration and parameter count.
NetworkWeights<float> deserialize_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a sibling temporary file and renames it over `path`.
void save_checkpoint(const NetworkWeights<float>& w, const std::filesystem::path& path);
NetworkWeights<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace sedrfuse::io
