// Copyright 2026 The road Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "road/road_adapter.hpp"

namespace road {

/// Little-endian binary container for the RoAd adapters of several layers:
///
///   "RDAD" | version u32 (=1) | variant u8 | d2 u32 | layer_count u32
///   per layer: name_len u32 | name bytes | theta f32[n] | alpha f32[n]
///   crc32 u32 over every preceding byte
///
/// n = angle_count(variant, d2). All layers share variant and d2.
struct NamedAdapter {
  std::string name;
  RoadAdapter adapter;
};

inline constexpr std::uint32_t kAdapterFileVersion = 1;

std::vector<std::uint8_t> encode_adapters(std::span<const NamedAdapter> layers);

/// Throws CorruptFileError naming the first failing field: magic, version, crc,
/// variant, d2, layer_count, name_len, name, theta, alpha or length.
std::vector<NamedAdapter> decode_adapters(std::span<const std::uint8_t> bytes);

void save_adapters(const std::filesystem::path& path, std::span<const NamedAdapter> layers);
std::vector<NamedAdapter> load_adapters(const std::filesystem::path& path);

/// Single-layer convenience wrappers; the layer is named "layer0".
void save_adapter(const std::filesystem::path& path, const RoadAdapter& a);
RoadAdapter load_adapter(const std::filesystem::path& path);

/// The adapter after a round trip through real32 storage.
RoadAdapter quantize_f32(const RoadAdapter& a);

}  // namespace road
