// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scan/errors.hpp"

namespace scan {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

EmbeddingTable EmbeddingTable::parse(std::string_view text) {
  EmbeddingTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<double> row;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(' ') == std::string_view::npos) continue;

    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0) throw ParseError("expected 'token v1 ... vd'", line_no);
    const std::string token(line.substr(0, sp));
    row.clear();
    std::string_view rest = line.substr(sp + 1);
    while (!rest.empty()) {
      const std::size_t next = rest.find(' ');
      const std::string_view field = rest.substr(0, next);
      if (!field.empty()) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
          throw ParseError("non-numeric embedding value '" + std::string(field) + "'", line_no);
        }
        row.push_back(v);
      }
      if (next == std::string_view::npos) break;
      rest.remove_prefix(next + 1);
    }
    if (row.empty()) throw ParseError("token '" + token + "' has no values", line_no);
    if (table.dim_ == 0) table.dim_ = row.size();
    if (row.size() != table.dim_) {
      throw ParseError("token '" + token + "' has " + std::to_string(row.size()) + " values, expected " +
                           std::to_string(table.dim_),
                       line_no);
    }
    table.set(token, row);
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open embedding table '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw e.within(path);
  }
}

const std::size_t* EmbeddingTable::find(std::string_view token) const {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return &it->second;
  if (auto it = index_.find(lower(token)); it != index_.end()) return &it->second;
  return nullptr;
}

bool EmbeddingTable::contains(std::string_view token) const { return find(token) != nullptr; }

std::span<const double> EmbeddingTable::lookup(std::string_view token) const {
  const std::size_t* i = find(token);
  if (!i) throw LoadError("token '" + std::string(token) + "' is not in the embedding table");
  return {values_.data() + *i * dim_, dim_};
}

num::Matrix EmbeddingTable::embed(const DependencyTree& tree) const {
  num::Matrix out(tree.size(), dim_);
  for (const Token& t : tree.tokens()) {
    const auto v = lookup(t.form);
    std::copy(v.begin(), v.end(), out.row(t.index - 1).begin());
  }
  return out;
}

void EmbeddingTable::set(const std::string& token, std::span<const double> values) {
  if (dim_ == 0) dim_ = values.size();
  if (values.size() != dim_) throw ShapeError("embedding for '" + token + "' has the wrong width");
  if (auto it = index_.find(token); it != index_.end()) {
    std::copy(values.begin(), values.end(), values_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return;
  }
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  values_.insert(values_.end(), values.begin(), values.end());
}

std::string EmbeddingTable::to_text() const {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    for (std::size_t c = 0; c < dim_; ++c) {
      std::snprintf(buf, sizeof buf, " %.9g", values_[i * dim_ + c]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace scan
