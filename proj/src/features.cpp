// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/features.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "scan/errors.hpp"

namespace scan {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_feature_container(const num::Matrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("feature container dimensions exceed u32");
  }
  std::string out(kFeatureMagic, 4);
  out.push_back(static_cast<char>(kFeatureVersion));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(out.size() + 4 * m.size());
  for (double v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

num::Matrix decode_feature_container(std::string_view bytes, std::string_view source) {
  const std::string src(source);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw LoadError(src + ": not a feature container");
  }
  if (bytes.size() < kFeatureHeaderSize) throw LoadError(src + ": truncated feature container header");
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kFeatureVersion) {
    throw LoadError(src + ": unsupported feature container version " + std::to_string(version));
  }
  const std::uint64_t rows = get_u32(bytes, 5);
  const std::uint64_t cols = get_u32(bytes, 9);
  // rows * cols fits in 64 bits since both are < 2^32; the byte count may not fit size_t on 32-bit hosts.
  const std::uint64_t count = rows * cols;
  if (count > (std::numeric_limits<std::size_t>::max() - kFeatureHeaderSize) / 4) {
    throw LoadError(src + ": feature container dimensions overflow (" + std::to_string(rows) + "x" +
                    std::to_string(cols) + ")");
  }
  const std::size_t expected = kFeatureHeaderSize + static_cast<std::size_t>(count) * 4;
  if (bytes.size() < expected) {
    throw LoadError(src + ": truncated feature payload (" + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(expected) + ")");
  }
  if (bytes.size() > expected) throw LoadError(src + ": trailing bytes after feature payload");
  std::vector<double> data(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes, kFeatureHeaderSize + 4 * i));
    if (!std::isfinite(f)) throw LoadError(src + ": non-finite feature value at index " + std::to_string(i));
    data[i] = f;
  }
  return num::Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data));
}

num::Matrix read_feature_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open feature container '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return decode_feature_container(bytes, path);
}

void write_feature_container(const std::string& path, const num::Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write feature container '" + path + "'");
  const std::string bytes = encode_feature_container(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError("failed writing feature container '" + path + "'");
}

}  // namespace scan
