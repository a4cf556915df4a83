// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "scan/errors.hpp"
#include "scan/hypergraph.hpp"
#include "scan/rng.hpp"

using namespace scan;

namespace {

std::set<std::set<std::size_t>> as_sets(const std::vector<NodeSet>& edges) {
  std::set<std::set<std::size_t>> out;
  for (const auto& e : edges) out.insert(std::set<std::size_t>(e.begin(), e.end()));
  return out;
}

bool connected_in_tree(const DependencyTree& t, const NodeSet& e) {
  // A node set is a connected subgraph iff exactly one member has its head outside the set.
  std::size_t tops = 0;
  for (auto v : e) {
    const auto h = t.token(v).head;
    if (h == 0 || !std::binary_search(e.begin(), e.end(), h)) ++tops;
  }
  return tops == 1;
}

}  // namespace

TEST_CASE("get_subtree on the girl fixture") {
  const auto t = fixtures::girl_tree();
  CHECK(get_subtree(t, 2) == NodeSet{2, 3});
  CHECK(get_subtree(t, 3) == NodeSet{3});
  CHECK(get_subtree(t, 1) == NodeSet{1, 2, 3, 4, 5});
  CHECK_THROWS_AS(get_subtree(t, 0), IndexError);
  CHECK_THROWS_AS(get_subtree(t, 9), IndexError);
}

TEST_CASE("girl fixture yields the seven listed edges in canonical order") {
  const auto g = build_hypergraph(fixtures::girl_tree());
  const std::vector<NodeSet> expected{{3}, {5}, {2, 3}, {4, 5}, {1, 2, 3}, {1, 4, 5}, {1, 2, 3, 4, 5}};
  CHECK(g.n_nodes() == 5);
  CHECK(g.edges() == expected);
  CHECK(g.edge_degrees() == std::vector<std::size_t>{1, 1, 2, 2, 3, 3, 5});
  CHECK(g.node_degrees() == std::vector<std::size_t>{3, 3, 4, 3, 4});
}

TEST_CASE("single token graph") {
  const auto t = DependencyTree::from_tokens({Token{1, "x", 0, std::nullopt}});
  const auto g = build_hypergraph(t);
  CHECK(g.n_edges() == 1);
  CHECK(g.incidence()(0, 0) == 1.0);
  CHECK(g.edge_degrees() == std::vector<std::size_t>{1});
  CHECK(g.node_degrees() == std::vector<std::size_t>{1});
}

TEST_CASE("star with k leaves has 2k+1 edges") {
  for (std::size_t k = 1; k <= 6; ++k) {
    std::vector<Token> toks{Token{1, "r", 0, std::nullopt}};
    for (std::size_t i = 2; i <= k + 1; ++i) toks.push_back(Token{i, "l", 1, std::nullopt});
    const auto g = build_hypergraph(DependencyTree::from_tokens(toks));
    // k = 1 collapses the pair edge into the full subtree.
    CHECK(g.n_edges() == (k == 1 ? 2 : 2 * k + 1));
  }
}

TEST_CASE("single-child branch deduplicates its pair and full edge") {
  const auto t = DependencyTree::from_tokens({Token{1, "a", 0, std::nullopt}, Token{2, "b", 1, std::nullopt}});
  const auto g = build_hypergraph(t);
  CHECK(g.edges() == std::vector<NodeSet>{{2}, {1, 2}});
}

TEST_CASE("identity hypergraph is one singleton per word") {
  const auto g = identity_hypergraph(4);
  CHECK(g.n_edges() == 4);
  CHECK(num::max_abs_diff(g.incidence(), num::Matrix::identity(4)) == 0.0);
}

TEST_CASE("property: subtree_gen matches the brute-force oracle and H is consistent") {
  Rng rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto tree = oracle::random_tree(1 + rng.below(12), rng);
    const auto edges = subtree_gen(tree);
    REQUIRE(as_sets(edges) == oracle::subtree_sets(tree));
    CHECK(as_sets(edges).size() == edges.size());

    const auto g = build_hypergraph(tree);
    const auto& h = g.incidence();
    for (std::size_t e = 0; e < g.n_edges(); ++e) {
      CHECK(connected_in_tree(tree, g.edges()[e]));
      double col = 0;
      for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        const bool member = std::binary_search(g.edges()[e].begin(), g.edges()[e].end(), i + 1);
        CHECK(h(i, e) == (member ? 1.0 : 0.0));
        col += h(i, e);
      }
      CHECK(col == static_cast<double>(g.edge_degrees()[e]));
      if (e > 0) CHECK(canonical_less(g.edges()[e - 1], g.edges()[e]));
    }
    for (std::size_t i = 0; i < g.n_nodes(); ++i) {
      double r = 0;
      for (std::size_t e = 0; e < g.n_edges(); ++e) r += h(i, e);
      CHECK(r == static_cast<double>(g.node_degrees()[i]));
      CHECK(g.node_degrees()[i] >= 1);
    }
  }
}

TEST_CASE("mean operators average members") {
  const auto g = build_hypergraph(fixtures::girl_tree());
  Rng rng(3);
  const auto q = oracle::random_matrix(5, 3, rng);
  const auto x = num::matmul(g.edge_mean_operator(), q);
  std::vector<std::vector<std::size_t>> sets(g.edges().begin(), g.edges().end());
  CHECK(num::max_abs_diff(x, oracle::set_means(sets, q)) <= 1e-12);
  const auto back = num::matmul(g.node_mean_operator(), x);
  CHECK(back.rows() == 5);
}

TEST_CASE("json export lists nodes, edges and dense incidence") {
  const auto t = fixtures::girl_tree();
  const auto json = hypergraph_to_json(build_hypergraph(t), &t);
  CHECK(json.find("\"n_nodes\"") != std::string::npos);
  CHECK(json.find("\"edges\"") != std::string::npos);
  CHECK(json.find("\"H\"") != std::string::npos);
  const auto csv = hypergraph_to_csv(build_hypergraph(t), &t);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
