// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "scan/deptree.hpp"
#include "scan/errors.hpp"
#include "scan/rng.hpp"

using namespace scan;

namespace {

std::string row(int i, const std::string& form, int head, const std::string& rel = "dep") {
  return std::to_string(i) + "\t" + form + "\t_\t_\t_\t_\t" + std::to_string(head) + "\t" + rel + "\t_\t_\n";
}

Token tok(std::size_t i, std::size_t head) { return Token{i, "w" + std::to_string(i), head, std::nullopt}; }

bool has_kind(const std::vector<Violation>& vs, ViolationKind k) {
  for (const auto& v : vs) {
    if (v.kind == k) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("single token sentence has root 1 and no children") {
  const auto trees = parse_conllu(row(1, "hello", 0, "root"));
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].root() == 1);
  CHECK(children(trees[0], 1).empty());
}

TEST_CASE("girl fixture children") {
  const auto t = fixtures::girl_tree();
  CHECK(t.size() == 5);
  CHECK(t.root() == 1);
  CHECK(children(t, 1) == std::vector<TokenIndex>{2, 4});
  CHECK(children(t, 2) == std::vector<TokenIndex>{3});
  CHECK(children(t, 4) == std::vector<TokenIndex>{5});
  CHECK(children(t, 3).empty());
  CHECK(children(t, 5).empty());
  CHECK(validate(t).empty());
}

TEST_CASE("children rejects the virtual root and out of range nodes") {
  const auto t = fixtures::girl_tree();
  CHECK_THROWS_AS(children(t, 0), IndexError);
  CHECK_THROWS_AS(children(t, 6), IndexError);
}

TEST_CASE("two roots is a parse error mentioning multiple roots") {
  const std::string text = row(1, "a", 0) + row(2, "b", 0) + "\n";
  try {
    parse_conllu(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("multiple roots") != std::string::npos);
  }
}

TEST_CASE("malformed lines are parse errors naming the line") {
  SUBCASE("wrong column count") {
    const std::string text = "# c\n" + row(1, "a", 0) + "2\tb\t_\n";
    try {
      parse_conllu(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("non-integer head") {
    const std::string text = "1\ta\t_\t_\t_\t_\tx\troot\t_\t_\n";
    try {
      parse_conllu(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("duplicate index") {
    const std::string text = row(1, "a", 0) + row(1, "b", 1);
    try {
      parse_conllu(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("multiword ranges and empty nodes are skipped with warnings") {
  const std::string text = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n" + row(1, "do", 0, "root") + row(2, "n't", 1) +
                           "2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n";
  std::vector<std::string> warnings;
  const auto trees = parse_conllu(text, {}, &warnings);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].size() == 2);
  CHECK(warnings.size() == 2);
}

TEST_CASE("comments ignored and sentences split on blank lines") {
  const std::string text = "# sent_id = 1\n" + row(1, "a", 0) + "\n\n# sent_id = 2\n" + row(1, "b", 2) +
                           row(2, "c", 0) + "\n";
  const auto trees = parse_conllu(text);
  REQUIRE(trees.size() == 2);
  CHECK(trees[1].root() == 2);
  CHECK(trees[1].forms() == std::vector<std::string>{"b", "c"});
}

TEST_CASE("validate reports a two-cycle naming its tokens") {
  const auto t = DependencyTree::unchecked({tok(1, 0), tok(2, 3), tok(3, 2)});
  const auto vs = validate(t);
  REQUIRE(has_kind(vs, ViolationKind::kCycle));
  for (const auto& v : vs) {
    if (v.kind == ViolationKind::kCycle) CHECK(v.message.find("cycle through tokens {2,3}") != std::string::npos);
  }
}

TEST_CASE("validate reports dangling heads") {
  const auto t = DependencyTree::unchecked({tok(1, 0), tok(2, 7)});
  const auto vs = validate(t);
  CHECK(has_kind(vs, ViolationKind::kDanglingHead));
  bool named = false;
  for (const auto& v : vs) named = named || v.message.find("dangling head") != std::string::npos;
  CHECK(named);
}

TEST_CASE("validate reports missing roots and self heads") {
  CHECK(has_kind(validate(DependencyTree::unchecked({tok(1, 1)})), ViolationKind::kSelfHead));
  CHECK(has_kind(validate(DependencyTree::unchecked({tok(1, 2), tok(2, 1)})), ViolationKind::kNoRoot));
  CHECK(has_kind(validate(DependencyTree::unchecked({tok(1, 0), tok(2, 0)})), ViolationKind::kMultipleRoots));
}

TEST_CASE("from_tokens throws on invalid structure") {
  CHECK_THROWS_AS(DependencyTree::from_tokens({tok(1, 0), tok(2, 3), tok(3, 2)}), ParseError);
}

TEST_CASE("property: round trip, children partition, validate accepts parsed trees") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    const auto tree = oracle::random_tree(n, rng);
    const auto text = to_conllu(tree);
    const auto again = parse_conllu(text);
    REQUIRE(again.size() == 1);
    CHECK(again[0] == tree);
    CHECK(validate(again[0]).empty());

    std::set<TokenIndex> seen;
    std::size_t total = 0;
    for (TokenIndex v = 1; v <= n; ++v) {
      for (TokenIndex c : children(tree, v)) {
        CHECK(seen.insert(c).second);
        ++total;
      }
    }
    CHECK(total == n - 1);
    CHECK(seen.count(tree.root()) == 0);
  }
}

TEST_CASE("duplicate surface forms remain distinct nodes") {
  const auto trees = parse_conllu(row(1, "the", 2) + row(2, "dog", 0, "root") + row(3, "the", 2));
  REQUIRE(trees.size() == 1);
  CHECK(children(trees[0], 2) == std::vector<TokenIndex>{1, 3});
}

TEST_CASE("punctuation kept by default and dropped on request") {
  const std::string text = row(1, "what", 0, "root") + row(2, "colour", 1, "dep") + row(3, "?", 1, "punct");
  CHECK(parse_conllu(text)[0].size() == 3);
  ConlluOptions opts;
  opts.drop_punct = true;
  const auto dropped = parse_conllu(text, opts);
  CHECK(dropped[0].size() == 2);
  CHECK(validate(dropped[0]).empty());
}
