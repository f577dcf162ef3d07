// Copyright 2026 The sedrfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "sedrfuse/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sedrfuse/dataset.hpp"

namespace sedrfuse::io {
namespace {

using Kind = CheckpointError::Kind;

constexpr std::size_t kHeaderSize = 8 + 4 + 4 * 4 + 8;

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  static_assert(std::is_unsigned_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename U>
U get(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

std::uint32_t narrow(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw CheckpointError(Kind::bad_config, std::string(what) + " too large");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const NetworkWeights<float>& w) {
  const NetworkConfig& c = w.config;
  c.validate();
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, narrow(c.residual_blocks, "residual_blocks"));
  put<std::uint32_t>(out, narrow(c.base_channels, "base_channels"));
  put<std::uint32_t>(out, narrow(c.input_height, "input_height"));
  put<std::uint32_t>(out, narrow(c.input_width, "input_width"));
  put<std::uint64_t>(out, w.parameter_count());
  out.reserve(out.size() + 4 * w.parameter_count() + 4);
  for (const auto* layer : w.layers()) {
    for (const Tensor<float>* t : {&layer->kernel, &layer->bias}) {
      for (float v : t->data()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  put<std::uint32_t>(out, crc32(out.data(), out.size()));
  return out;
}

NetworkWeights<float> deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 4) {
    throw CheckpointError(Kind::truncated, "checkpoint truncated: " + std::to_string(bytes.size()) +
                                               " bytes");
  }
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw CheckpointError(Kind::bad_magic, "not a sedrfuse checkpoint (bad magic)");
  }
  const std::uint32_t version = get<std::uint32_t>(bytes.data() + 8);
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::version_mismatch,
                          "checkpoint format version " + std::to_string(version) +
                              ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < kHeaderSize + 4) {
    throw CheckpointError(Kind::truncated, "checkpoint truncated inside header");
  }
  const std::uint64_t declared = get<std::uint64_t>(bytes.data() + 28);
  if (declared < bytes.size() && bytes.size() < kHeaderSize + 4 * declared + 4) {
    throw CheckpointError(Kind::truncated, "checkpoint truncated: " + std::to_string(bytes.size()) +
                                               " bytes, header declares " +
                                               std::to_string(declared) + " parameters");
  }
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t stored = get<std::uint32_t>(bytes.data() + body);
  if (crc32(bytes.data(), body) != stored) {
    throw CheckpointError(Kind::checksum, "checkpoint checksum mismatch (corrupt or truncated file)");
  }

  NetworkConfig c;
  c.residual_blocks = get<std::uint32_t>(bytes.data() + 12);
  c.base_channels = get<std::uint32_t>(bytes.data() + 16);
  c.input_height = get<std::uint32_t>(bytes.data() + 20);
  c.input_width = get<std::uint32_t>(bytes.data() + 24);
  if (c.base_channels > 4096 || c.residual_blocks > 4096) {
    throw CheckpointError(Kind::bad_config, "checkpoint config out of range: base_channels " +
                                                std::to_string(c.base_channels) +
                                                ", residual_blocks " +
                                                std::to_string(c.residual_blocks));
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::bad_config, std::string("checkpoint config invalid: ") + e.what());
  }
  const std::uint64_t count = get<std::uint64_t>(bytes.data() + 28);
  if (count != c.parameter_count()) {
    throw CheckpointError(Kind::bad_config, "checkpoint declares " + std::to_string(count) +
                                                " parameters, config implies " +
                                                std::to_string(c.parameter_count()));
  }
  if (body - kHeaderSize != 4 * count) {
    throw CheckpointError(Kind::truncated, "checkpoint payload is " +
                                               std::to_string(body - kHeaderSize) +
                                               " bytes, expected " + std::to_string(4 * count));
  }

  NetworkWeights<float> w = zero_weights<float>(c);
  const std::uint8_t* p = bytes.data() + kHeaderSize;
  for (auto* layer : w.layers()) {
    for (Tensor<float>* t : {&layer->kernel, &layer->bias}) {
      for (float& v : t->data()) {
        v = std::bit_cast<float>(get<std::uint32_t>(p));
        p += 4;
      }
    }
  }
  return w;
}

void save_checkpoint(const NetworkWeights<float>& w, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(w);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Kind::io, tmp.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError(Kind::io, tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(Kind::io, path.string() + ": " + ec.message());
}

NetworkWeights<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, path.string() + ": cannot open for reading");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace sedrfuse::io
