// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Binary feature containers:
//   bytes 0-3  magic "SCNF"
//   byte  4    version (1)
//   bytes 5-8  rows, u32 little-endian
//   bytes 9-12 cols, u32 little-endian
//   then rows * cols float32 little-endian values, row-major.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scan/matrix.hpp"

namespace scan {

inline constexpr char kFeatureMagic[4] = {'S', 'C', 'N', 'F'};
inline constexpr std::uint8_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderSize = 13;

/// Encodes `m` (values narrowed to float32).
std::string encode_feature_container(const num::Matrix& m);
/// Throws LoadError: "not a feature container" for a bad magic, and
/// descriptive errors for unknown versions, oversized dimensions or a
/// truncated payload.
num::Matrix decode_feature_container(std::string_view bytes, std::string_view source = "<memory>");

num::Matrix read_feature_container(const std::string& path);
void write_feature_container(const std::string& path, const num::Matrix& m);

}  // namespace scan
