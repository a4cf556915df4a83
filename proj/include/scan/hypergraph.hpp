// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Syntactic hypergraphs: words are nodes, dependency subtrees are hyperedges.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scan/deptree.hpp"
#include "scan/matrix.hpp"

namespace scan {

/// Sorted, duplicate-free set of 1-based token indices.
using NodeSet = std::vector<TokenIndex>;

/// `node` together with all of its descendants.
NodeSet get_subtree(const DependencyTree& tree, TokenIndex node);

/// Subtree enumeration over a validated tree:
///   - {v} for every leaf v,
///   - {v} + subtree(c) for every branch node v and each child c,
///   - subtree(v) for every branch node v.
/// Duplicates are removed and the result is in canonical order (by size,
/// then lexicographically by token index).
std::vector<NodeSet> subtree_gen(const DependencyTree& tree);

/// Orders node sets by (size, lexicographic indices).
bool canonical_less(const NodeSet& a, const NodeSet& b);

class SyntacticHypergraph {
 public:
  /// Throws ShapeError for empty edges, out-of-range nodes, duplicate edges,
  /// or nodes that no edge covers.
  SyntacticHypergraph(std::size_t n_nodes, std::vector<NodeSet> edges);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<NodeSet>& edges() const noexcept { return edges_; }

  /// N_v x N_e 0/1 incidence; row r is token r + 1.
  const num::Matrix& incidence() const noexcept { return incidence_; }
  const std::vector<std::size_t>& edge_degrees() const noexcept { return edge_degrees_; }
  const std::vector<std::size_t>& node_degrees() const noexcept { return node_degrees_; }

  /// D_e^-1 H^T (N_e x N_v): row e averages the member nodes of edge e.
  num::Matrix edge_mean_operator() const;
  /// D_v^-1 H (N_v x N_e): row i averages the edges incident to node i.
  num::Matrix node_mean_operator() const;

 private:
  std::size_t n_nodes_;
  std::vector<NodeSet> edges_;
  num::Matrix incidence_;
  std::vector<std::size_t> edge_degrees_;
  std::vector<std::size_t> node_degrees_;
};

SyntacticHypergraph build_hypergraph(const DependencyTree& tree);

/// One singleton edge per word; the word-level ablation uses this in place
/// of the syntactic hypergraph.
SyntacticHypergraph identity_hypergraph(std::size_t n_nodes);

/// {"n_nodes", "edges": [[token indices]], "H": [[0/1 rows]]}, plus
/// "tokens" when a tree is supplied.
std::string hypergraph_to_json(const SyntacticHypergraph& graph, const DependencyTree* tree = nullptr);
/// Incidence as CSV: header "node,e0,e1,...", one row per token.
std::string hypergraph_to_csv(const SyntacticHypergraph& graph, const DependencyTree* tree = nullptr);

}  // namespace scan
