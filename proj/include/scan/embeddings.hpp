// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scan/deptree.hpp"
#include "scan/matrix.hpp"

namespace scan {

/// Token -> vector table in the GloVe text layout ("token v1 v2 ... vd").
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  /// Throws ParseError on ragged rows or non-numeric values.
  static EmbeddingTable parse(std::string_view text);
  static EmbeddingTable load(const std::string& path);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  /// Exact match first, then the lower-cased form.
  bool contains(std::string_view token) const;
  /// Throws LoadError naming the token when it is missing.
  std::span<const double> lookup(std::string_view token) const;
  /// One row per tree token, in token order.
  num::Matrix embed(const DependencyTree& tree) const;

  /// Adds or replaces a row; throws ShapeError on a width mismatch.
  void set(const std::string& token, std::span<const double> values);
  std::string to_text() const;

 private:
  const std::size_t* find(std::string_view token) const;

  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace scan
