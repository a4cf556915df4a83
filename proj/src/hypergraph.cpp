// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/hypergraph.hpp"

#include <algorithm>
#include "json.hpp"
#include <set>

#include "scan/errors.hpp"

namespace scan {

namespace {

void collect_subtree(const DependencyTree& tree, TokenIndex c, NodeSet& out) {
  out.push_back(c);
  for (TokenIndex child : children(tree, c)) collect_subtree(tree, child, out);
}

}  // namespace

NodeSet get_subtree(const DependencyTree& tree, TokenIndex node) {
  NodeSet out;
  collect_subtree(tree, node, out);
  std::sort(out.begin(), out.end());
  return out;
}

bool canonical_less(const NodeSet& a, const NodeSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::vector<NodeSet> subtree_gen(const DependencyTree& tree) {
  std::set<NodeSet, decltype(&canonical_less)> found(&canonical_less);
  for (const Token& t : tree.tokens()) {
    const TokenIndex v = t.index;
    const auto kids = children(tree, v);
    if (kids.empty()) {
      found.insert(NodeSet{v});
      continue;
    }
    for (TokenIndex c : kids) {
      NodeSet s = get_subtree(tree, c);
      s.insert(std::upper_bound(s.begin(), s.end(), v), v);
      found.insert(std::move(s));
    }
    found.insert(get_subtree(tree, v));
  }
  return {found.begin(), found.end()};
}

SyntacticHypergraph::SyntacticHypergraph(std::size_t n_nodes, std::vector<NodeSet> edges)
    : n_nodes_(n_nodes), edges_(std::move(edges)), incidence_(n_nodes, edges_.size()),
      edge_degrees_(edges_.size(), 0), node_degrees_(n_nodes, 0) {
  std::set<NodeSet> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    NodeSet& edge = edges_[e];
    std::sort(edge.begin(), edge.end());
    if (edge.empty()) throw ShapeError("hyperedge " + std::to_string(e) + " is empty");
    if (std::adjacent_find(edge.begin(), edge.end()) != edge.end()) {
      throw ShapeError("hyperedge " + std::to_string(e) + " repeats a node");
    }
    if (!seen.insert(edge).second) throw ShapeError("duplicate hyperedge " + std::to_string(e));
    for (TokenIndex v : edge) {
      if (v == 0 || v > n_nodes) {
        throw ShapeError("hyperedge " + std::to_string(e) + " references node " + std::to_string(v));
      }
      incidence_(v - 1, e) = 1.0;
      ++node_degrees_[v - 1];
    }
    edge_degrees_[e] = edge.size();
  }
  for (std::size_t i = 0; i < n_nodes; ++i) {
    if (node_degrees_[i] == 0) throw ShapeError("node " + std::to_string(i + 1) + " belongs to no hyperedge");
  }
}

num::Matrix SyntacticHypergraph::edge_mean_operator() const {
  num::Matrix op(n_edges(), n_nodes_);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const double w = 1.0 / static_cast<double>(edge_degrees_[e]);
    for (TokenIndex v : edges_[e]) op(e, v - 1) = w;
  }
  return op;
}

num::Matrix SyntacticHypergraph::node_mean_operator() const {
  num::Matrix op(n_nodes_, n_edges());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    for (TokenIndex v : edges_[e]) op(v - 1, e) = 1.0 / static_cast<double>(node_degrees_[v - 1]);
  }
  return op;
}

SyntacticHypergraph build_hypergraph(const DependencyTree& tree) {
  return SyntacticHypergraph(tree.size(), subtree_gen(tree));
}

SyntacticHypergraph identity_hypergraph(std::size_t n_nodes) {
  std::vector<NodeSet> edges;
  edges.reserve(n_nodes);
  for (TokenIndex i = 1; i <= n_nodes; ++i) edges.push_back({i});
  return SyntacticHypergraph(n_nodes, std::move(edges));
}

std::string hypergraph_to_json(const SyntacticHypergraph& graph, const DependencyTree* tree) {
  nlohmann::ordered_json j;
  j["n_nodes"] = graph.n_nodes();
  if (tree) j["tokens"] = tree->forms();
  j["edges"] = graph.edges();
  auto rows = nlohmann::json::array();
  const auto& H = graph.incidence();
  for (std::size_t r = 0; r < H.rows(); ++r) {
    std::vector<int> row;
    for (double v : H.row(r)) row.push_back(v != 0.0 ? 1 : 0);
    rows.push_back(row);
  }
  j["H"] = rows;
  j["edge_degrees"] = graph.edge_degrees();
  j["node_degrees"] = graph.node_degrees();
  return j.dump(2) + "\n";
}

std::string hypergraph_to_csv(const SyntacticHypergraph& graph, const DependencyTree* tree) {
  std::string out = "node";
  for (std::size_t e = 0; e < graph.n_edges(); ++e) out += ",e" + std::to_string(e);
  out += '\n';
  const auto& H = graph.incidence();
  for (std::size_t r = 0; r < H.rows(); ++r) {
    out += tree ? tree->token(r + 1).form : std::to_string(r + 1);
    for (double v : H.row(r)) out += v != 0.0 ? ",1" : ",0";
    out += '\n';
  }
  return out;
}

}  // namespace scan
