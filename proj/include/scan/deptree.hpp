// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scan {

using TokenIndex = std::size_t;

/// One word of a parsed question. `index` is 1-based; `head` 0 attaches to
/// the virtual root.
struct Token {
  TokenIndex index = 0;
  std::string form;
  TokenIndex head = 0;
  std::optional<std::string> deprel;

  bool operator==(const Token&) const = default;
};

enum class ViolationKind { kNoRoot, kMultipleRoots, kCycle, kDanglingHead, kSelfHead, kBadIndex };

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// An immutable dependency tree. Trees built through `from_tokens` (and
/// everything parse_conllu returns) satisfy validate(); `unchecked` exists
/// so that broken trees can be represented and diagnosed.
class DependencyTree {
 public:
  DependencyTree() = default;

  /// Throws ParseError listing the violations when the tokens do not form a tree.
  static DependencyTree from_tokens(std::vector<Token> tokens);
  static DependencyTree unchecked(std::vector<Token> tokens);

  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  /// Index of the first token with head 0, or 0 if there is none.
  TokenIndex root() const noexcept { return root_; }
  /// Token with 1-based index `i`; throws IndexError when out of range.
  const Token& token(TokenIndex i) const;
  std::vector<std::string> forms() const;

  bool operator==(const DependencyTree& other) const { return tokens_ == other.tokens_; }

 private:
  explicit DependencyTree(std::vector<Token> tokens);

  std::vector<Token> tokens_;
  TokenIndex root_ = 0;
};

struct ConlluOptions {
  /// Remove tokens whose relation is "punct"; their dependents are
  /// reattached to the removed token's head.
  bool drop_punct = false;
};

/// Parses every sentence of a CoNLL-U document. Comment lines are ignored,
/// multiword ranges and empty nodes are skipped with a message appended to
/// `warnings` (when given). Throws ParseError naming the offending line.
std::vector<DependencyTree> parse_conllu(std::string_view text, const ConlluOptions& options = {},
                                         std::vector<std::string>* warnings = nullptr);

/// Reads and parses a CoNLL-U file; throws LoadError when it cannot be read.
std::vector<DependencyTree> read_conllu_file(const std::string& path, const ConlluOptions& options = {},
                                             std::vector<std::string>* warnings = nullptr);

/// Writes a tree as one CoNLL-U sentence (terminated by a blank line).
std::string to_conllu(const DependencyTree& tree);

/// Dependents of `node` in ascending surface order. Throws IndexError for
/// node 0 (the virtual root marker) or past the last token.
std::vector<TokenIndex> children(const DependencyTree& tree, TokenIndex node);

/// Every invariant violation of `tree`; empty means the tree is valid.
std::vector<Violation> validate(const DependencyTree& tree);

/// Drops "punct" tokens, reattaching their dependents, and renumbers.
DependencyTree drop_punctuation(const DependencyTree& tree);

}  // namespace scan
