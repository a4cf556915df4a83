// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/deptree.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "scan/errors.hpp"

namespace scan {

namespace {

std::string join_violations(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<std::size_t> parse_uint(std::string_view s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

struct PendingSentence {
  std::vector<Token> tokens;
  std::size_t first_line = 0;
};

}  // namespace

DependencyTree::DependencyTree(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  for (const Token& t : tokens_) {
    if (t.head == 0) {
      root_ = t.index;
      break;
    }
  }
}

DependencyTree DependencyTree::from_tokens(std::vector<Token> tokens) {
  DependencyTree tree(std::move(tokens));
  if (auto vs = validate(tree); !vs.empty()) throw ParseError(join_violations(vs));
  return tree;
}

DependencyTree DependencyTree::unchecked(std::vector<Token> tokens) { return DependencyTree(std::move(tokens)); }

const Token& DependencyTree::token(TokenIndex i) const {
  if (i == 0 || i > tokens_.size()) {
    throw IndexError("token index " + std::to_string(i) + " out of range 1.." + std::to_string(tokens_.size()));
  }
  return tokens_[i - 1];
}

std::vector<std::string> DependencyTree::forms() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const Token& t : tokens_) out.push_back(t.form);
  return out;
}

std::vector<TokenIndex> children(const DependencyTree& tree, TokenIndex node) {
  if (node == 0 || node > tree.size()) {
    throw IndexError("children: node " + std::to_string(node) + " is not a token (valid range 1.." +
                     std::to_string(tree.size()) + ")");
  }
  std::vector<TokenIndex> out;
  for (const Token& t : tree.tokens()) {
    if (t.head == node) out.push_back(t.index);
  }
  return out;
}

std::vector<Violation> validate(const DependencyTree& tree) {
  std::vector<Violation> out;
  const auto& toks = tree.tokens();
  const std::size_t n = toks.size();
  if (n == 0) {
    out.push_back({ViolationKind::kNoRoot, "empty tree has no root"});
    return out;
  }
  std::vector<bool> usable(n + 1, true);
  std::size_t roots = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Token& t = toks[k];
    if (t.index != k + 1) {
      out.push_back({ViolationKind::kBadIndex, "token at position " + std::to_string(k + 1) + " has index " +
                                                   std::to_string(t.index)});
      usable[k + 1] = false;
      continue;
    }
    if (t.head == t.index) {
      out.push_back({ViolationKind::kSelfHead, "token " + std::to_string(t.index) + " is its own head"});
      usable[k + 1] = false;
    } else if (t.head > n) {
      out.push_back({ViolationKind::kDanglingHead, "dangling head " + std::to_string(t.head) + " on token " +
                                                       std::to_string(t.index)});
      usable[k + 1] = false;
    }
    if (t.head == 0) ++roots;
  }
  if (roots == 0) out.push_back({ViolationKind::kNoRoot, "no token attaches to the root"});
  if (roots > 1) out.push_back({ViolationKind::kMultipleRoots, "multiple roots (" + std::to_string(roots) + ")"});

  // Heads form a functional graph; walk each unvisited token and report
  // every cycle exactly once.
  enum : char { kNew, kOnPath, kDone };
  std::vector<char> state(n + 1, kNew);
  for (std::size_t start = 1; start <= n; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (cur != 0 && usable[cur] && state[cur] == kNew) {
      state[cur] = kOnPath;
      path.push_back(cur);
      cur = toks[cur - 1].head;
    }
    if (cur != 0 && usable[cur] && state[cur] == kOnPath) {
      auto it = std::find(path.begin(), path.end(), cur);
      std::vector<std::size_t> cycle(it, path.end());
      std::sort(cycle.begin(), cycle.end());
      std::string msg = "cycle through tokens {";
      for (std::size_t i = 0; i < cycle.size(); ++i) msg += (i ? "," : "") + std::to_string(cycle[i]);
      msg += "}";
      out.push_back({ViolationKind::kCycle, msg});
    }
    for (std::size_t p : path) state[p] = kDone;
  }
  return out;
}

DependencyTree drop_punctuation(const DependencyTree& tree) {
  const auto& toks = tree.tokens();
  auto is_punct = [&](TokenIndex i) {
    const Token& t = toks[i - 1];
    return t.head != 0 && t.deprel && *t.deprel == "punct";
  };
  std::vector<TokenIndex> renumber(toks.size() + 1, 0);
  TokenIndex next = 1;
  for (const Token& t : toks) {
    if (!is_punct(t.index)) renumber[t.index] = next++;
  }
  if (next == toks.size() + 1) return tree;
  std::vector<Token> kept;
  for (const Token& t : toks) {
    if (is_punct(t.index)) continue;
    TokenIndex h = t.head;
    while (h != 0 && is_punct(h)) h = toks[h - 1].head;
    Token nt = t;
    nt.index = renumber[t.index];
    nt.head = h == 0 ? 0 : renumber[h];
    kept.push_back(std::move(nt));
  }
  return DependencyTree::from_tokens(std::move(kept));
}

std::vector<DependencyTree> parse_conllu(std::string_view text, const ConlluOptions& options,
                                         std::vector<std::string>* warnings) {
  std::vector<DependencyTree> trees;
  PendingSentence pending;

  auto flush = [&] {
    if (pending.tokens.empty()) return;
    for (std::size_t k = 0; k < pending.tokens.size(); ++k) {
      if (pending.tokens[k].index != k + 1) {
        throw ParseError("token indices must run 1.." + std::to_string(pending.tokens.size()) +
                             " without gaps (found " + std::to_string(pending.tokens[k].index) + ")",
                         pending.first_line);
      }
    }
    DependencyTree tree = DependencyTree::unchecked(std::move(pending.tokens));
    if (auto vs = validate(tree); !vs.empty()) {
      throw ParseError("sentence starting here is not a tree: " + join_violations(vs), pending.first_line);
    }
    trees.push_back(options.drop_punct ? drop_punctuation(tree) : std::move(tree));
    pending = {};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      flush();
      if (eol == text.size()) break;
      continue;
    }
    if (line.front() == '#') continue;

    const auto cols = split_tabs(line);
    if (cols.size() != 10) {
      throw ParseError("expected 10 tab-separated columns, found " + std::to_string(cols.size()), line_no);
    }
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      if (warnings) {
        warnings->push_back("line " + std::to_string(line_no) + ": skipped " +
                            (id.find('-') != std::string_view::npos ? "multiword token " : "empty node ") +
                            std::string(id));
      }
      continue;
    }
    const auto index = parse_uint(id);
    if (!index || *index == 0) throw ParseError("invalid token index '" + std::string(id) + "'", line_no);
    const auto head = parse_uint(cols[6]);
    if (!head) throw ParseError("non-integer head '" + std::string(cols[6]) + "'", line_no);
    for (const Token& t : pending.tokens) {
      if (t.index == *index) throw ParseError("duplicate token index " + std::to_string(*index), line_no);
    }
    if (pending.tokens.empty()) pending.first_line = line_no;
    Token tok;
    tok.index = *index;
    tok.form = std::string(cols[1]);
    tok.head = *head;
    if (cols[7] != "_" && !cols[7].empty()) tok.deprel = std::string(cols[7]);
    pending.tokens.push_back(std::move(tok));
    if (eol == text.size()) break;
  }
  flush();
  return trees;
}

std::vector<DependencyTree> read_conllu_file(const std::string& path, const ConlluOptions& options,
                                             std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open CoNLL-U file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_conllu(ss.str(), options, warnings);
  } catch (const ParseError& e) {
    throw e.within(path);
  }
}

std::string to_conllu(const DependencyTree& tree) {
  std::string out;
  for (const Token& t : tree.tokens()) {
    out += std::to_string(t.index);
    out += '\t';
    out += t.form;
    out += "\t_\t_\t_\t_\t";
    out += std::to_string(t.head);
    out += '\t';
    out += t.deprel.value_or("_");
    out += "\t_\t_\n";
  }
  out += '\n';
  return out;
}

}  // namespace scan
