#pragma once

#include <vector>

#include "hhs/cayley.hpp"
#include "hhs/graph.hpp"
#include "oracles.hpp"

namespace fixtures {

inline hhs::MetricGraph graph_of(int n, const oracle::Edges& edges) {
  std::vector<hhs::Edge> e;
  for (auto [u, v] : edges) e.emplace_back(u, v);
  return hhs::MetricGraph::from_edges(n, std::move(e));
}

inline oracle::Edges to_oracle(const hhs::MetricGraph& g) {
  oracle::Edges out;
  for (auto [u, v] : g.edges()) out.emplace_back(static_cast<int>(u), static_cast<int>(v));
  return out;
}

/// Random labelled tree on n vertices (each vertex attaches to an earlier one).
inline oracle::Edges random_tree(int n, std::uint64_t seed) {
  oracle::Edges e;
  for (int v = 1; v < n; ++v) e.emplace_back(static_cast<int>(hhs::draw(seed, 99, v) % v), v);
  return e;
}

inline hhs::GroupModel free2() { return hhs::GroupModel::free({"a", "b"}); }
inline hhs::GroupModel free_cd() { return hhs::GroupModel::free({"c", "d"}); }
inline hhs::GroupModel z2() { return hhs::GroupModel::free_abelian({"a", "b"}); }

inline std::vector<int> ints(const std::vector<hhs::Vertex>& v) { return {v.begin(), v.end()}; }

}  // namespace fixtures
