#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hhs/common.hpp"

namespace hhs {

using Edge = std::pair<Vertex, Vertex>;

/// Finite simple graph with unit edge lengths, stored as sorted adjacency
/// lists. Immutable once built.
class MetricGraph {
 public:
  MetricGraph() : offsets_{0} {}

  /// Builds a graph on vertices [0, n). Self-loops are always rejected;
  /// duplicate edges are rejected unless `dedupe` is set.
  static MetricGraph from_edges(std::size_t n, std::vector<Edge> edges,
                                std::vector<std::string> labels = {}, bool dedupe = false) {
    for (auto& [u, v] : edges) {
      if (u >= n || v >= n) throw Error(ErrorKind::InvalidArgument, "edge endpoint out of range");
      if (u == v) throw Error(ErrorKind::InvalidArgument, "self-loop at vertex " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    auto last = std::unique(edges.begin(), edges.end());
    if (last != edges.end() && !dedupe) {
      throw Error(ErrorKind::InvalidArgument, "duplicate edge " + std::to_string(last->first) + " " +
                                                  std::to_string(last->second));
    }
    edges.erase(last, edges.end());
    if (!labels.empty() && labels.size() != n) {
      throw Error(ErrorKind::InvalidArgument, "label count does not match vertex count");
    }

    MetricGraph g;
    std::vector<std::uint32_t> degree(n, 0);
    for (auto [u, v] : edges) {
      ++degree[u];
      ++degree[v];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
    g.adjacency_.resize(g.offsets_[n]);
    std::vector<std::uint32_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [u, v] : edges) {
      g.adjacency_[fill[u]++] = v;
      g.adjacency_[fill[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(g.adjacency_.begin() + g.offsets_[i], g.adjacency_.begin() + g.offsets_[i + 1]);
    }
    g.edge_count_ = edges.size();
    g.labels_ = std::move(labels);
    for (std::size_t i = 0; i < g.labels_.size(); ++i) g.label_index_.emplace(g.labels_[i], static_cast<Vertex>(i));
    g.connected_ = g.compute_connected();
    return g;
  }

  std::size_t vertex_count() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return edge_count_; }
  bool connected() const { return connected_; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  bool has_edge(Vertex u, Vertex v) const {
    auto n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
  }

  bool has_labels() const { return !labels_.empty(); }
  std::string label(Vertex v) const { return labels_.empty() ? std::to_string(v) : labels_[v]; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::optional<Vertex> find_label(const std::string& label) const {
    auto it = label_index_.find(label);
    if (it == label_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Edges as (u, v) with u < v, sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (Vertex u = 0; u < vertex_count(); ++u) {
      for (Vertex v : neighbors(u)) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  bool operator==(const MetricGraph& o) const {
    return offsets_ == o.offsets_ && adjacency_ == o.adjacency_ && labels_ == o.labels_;
  }

 private:
  bool compute_connected() const {
    std::size_t n = vertex_count();
    if (n == 0) return true;
    std::vector<char> seen(n, 0);
    std::vector<Vertex> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      Vertex u = stack.back();
      stack.pop_back();
      for (Vertex w : neighbors(u)) {
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n;
  }

  std::vector<std::uint32_t> offsets_;
  std::vector<Vertex> adjacency_;
  std::size_t edge_count_ = 0;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Vertex> label_index_;
  bool connected_ = true;
};

/// Breadth-first distances from a set of sources; kUnreached where no path.
inline std::vector<std::uint32_t> bfs(const MetricGraph& g, std::span<const Vertex> sources,
                                      std::uint32_t max_depth = kUnreached) {
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
  std::vector<Vertex> queue;
  queue.reserve(g.vertex_count());
  for (Vertex s : sources) {
    if (dist[s] != 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    Vertex u = queue[head];
    if (dist[u] >= max_depth) continue;
    for (Vertex w : g.neighbors(u)) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

inline std::vector<std::uint32_t> bfs(const MetricGraph& g, Vertex source) {
  return bfs(g, std::span<const Vertex>(&source, 1));
}

/// All-pairs distance table. Memory is n^2 16-bit cells; construction fails
/// with BudgetExceeded above the configured cap (HHS_MATRIX_CAP bytes).
class DistanceMatrix {
 public:
  static constexpr std::uint16_t kFar = 0xFFFF;

  DistanceMatrix() = default;

  explicit DistanceMatrix(const MetricGraph& g) : n_(g.vertex_count()) {
    std::size_t cap = std::size_t{1} << 30;
    if (const char* env = std::getenv("HHS_MATRIX_CAP")) cap = std::strtoull(env, nullptr, 10);
    if (n_ * n_ * sizeof(std::uint16_t) > cap) {
      throw Error(ErrorKind::BudgetExceeded,
                  "distance matrix for " + std::to_string(n_) + " vertices exceeds memory cap");
    }
    cells_.assign(n_ * n_, kFar);
    parallel_for(n_, [&](std::size_t s) {
      auto d = bfs(g, static_cast<Vertex>(s));
      std::uint16_t* row = cells_.data() + s * n_;
      for (std::size_t v = 0; v < n_; ++v) row[v] = d[v] == kUnreached ? kFar : static_cast<std::uint16_t>(d[v]);
    });
  }

  std::size_t size() const { return n_; }
  std::uint32_t operator()(Vertex u, Vertex v) const {
    std::uint16_t d = cells_[static_cast<std::size_t>(u) * n_ + v];
    return d == kFar ? kUnreached : d;
  }
  std::span<const std::uint16_t> row(Vertex u) const { return {cells_.data() + static_cast<std::size_t>(u) * n_, n_}; }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint16_t> cells_;
};

/// A vertex walk in a graph.
struct PathRecord {
  std::vector<Vertex> vertices;
  bool is_geodesic = false;
  /// Measured (lambda, c) with lambda = c, when a quasi-geodesic check ran.
  std::optional<double> quasi_geodesic_constant;

  std::size_t length() const { return vertices.empty() ? 0 : vertices.size() - 1; }

  bool valid_in(const MetricGraph& g) const {
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      if (!g.has_edge(vertices[i - 1], vertices[i])) return false;
    }
    return !vertices.empty();
  }
};

/// Lexicographically first geodesic from u to the vertex whose distance field
/// is `to_target`: each step takes the smallest-id neighbour one step closer.
inline PathRecord geodesic_along(const MetricGraph& g, Vertex u, std::span<const std::uint32_t> to_target) {
  if (to_target[u] == kUnreached) throw Error(ErrorKind::Disconnected, "no path from vertex " + std::to_string(u));
  PathRecord p;
  p.is_geodesic = true;
  p.vertices.push_back(u);
  Vertex cur = u;
  while (to_target[cur] != 0) {
    for (Vertex w : g.neighbors(cur)) {
      if (to_target[w] + 1 == to_target[cur]) {
        cur = w;
        break;
      }
    }
    p.vertices.push_back(cur);
  }
  return p;
}

inline PathRecord shortest_path(const MetricGraph& g, Vertex u, Vertex v) {
  if (u >= g.vertex_count() || v >= g.vertex_count()) throw Error(ErrorKind::InvalidArgument, "vertex out of range");
  auto d = bfs(g, v);
  if (d[u] == kUnreached) {
    throw Error(ErrorKind::Disconnected, "no path between " + g.label(u) + " and " + g.label(v));
  }
  return geodesic_along(g, u, d);
}

/// Same as shortest_path but reads distances from a precomputed matrix.
inline PathRecord shortest_path(const MetricGraph& g, const DistanceMatrix& dm, Vertex u, Vertex v) {
  if (dm(u, v) == kUnreached) throw Error(ErrorKind::Disconnected, "no path between " + g.label(u) + " and " + g.label(v));
  PathRecord p;
  p.is_geodesic = true;
  p.vertices.push_back(u);
  Vertex cur = u;
  while (cur != v) {
    std::uint32_t here = dm(cur, v);
    for (Vertex w : g.neighbors(cur)) {
      if (dm(w, v) + 1 == here) {
        cur = w;
        break;
      }
    }
    p.vertices.push_back(cur);
  }
  return p;
}

/// Connected vertex subset of a parent graph.
struct Subgraph {
  VertexSet vertices;
  std::string label;

  bool operator==(const Subgraph&) const = default;
};

/// Induced subgraph together with the id maps to and from its parent.
struct InducedSubgraph {
  MetricGraph graph;
  std::vector<Vertex> to_parent;
  std::unordered_map<Vertex, Vertex> to_local;
};

inline InducedSubgraph induce(const MetricGraph& g, std::span<const Vertex> vertices) {
  InducedSubgraph out;
  out.to_parent.assign(vertices.begin(), vertices.end());
  for (std::size_t i = 0; i < out.to_parent.size(); ++i) out.to_local.emplace(out.to_parent[i], static_cast<Vertex>(i));
  std::vector<Edge> edges;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < out.to_parent.size(); ++i) {
    Vertex p = out.to_parent[i];
    if (g.has_labels()) labels.push_back(g.label(p));
    for (Vertex w : g.neighbors(p)) {
      auto it = out.to_local.find(w);
      if (it != out.to_local.end() && i < it->second) edges.emplace_back(static_cast<Vertex>(i), it->second);
    }
  }
  out.graph = MetricGraph::from_edges(out.to_parent.size(), std::move(edges), std::move(labels));
  return out;
}

inline bool is_connected_subset(const MetricGraph& g, std::span<const Vertex> vertices) {
  if (vertices.empty()) return false;
  return induce(g, vertices).graph.connected();
}

/// Validates and wraps a vertex set as a Subgraph (nonempty, connected).
inline Subgraph make_subgraph(const MetricGraph& g, std::vector<Vertex> vertices, std::string label = {}) {
  VertexSet set = make_set(std::move(vertices));
  if (set.empty()) throw Error(ErrorKind::InvalidArgument, "subgraph must be nonempty");
  if (set.back() >= g.vertex_count()) throw Error(ErrorKind::InvalidArgument, "subgraph vertex out of range");
  if (!is_connected_subset(g, set)) throw Error(ErrorKind::InvalidArgument, "subgraph '" + label + "' is not connected");
  return Subgraph{std::move(set), std::move(label)};
}

/// Vertices reachable from `start` inside `allowed`.
inline VertexSet component_within(const MetricGraph& g, std::span<const Vertex> allowed, Vertex start) {
  std::unordered_map<Vertex, char> in;
  for (Vertex v : allowed) in.emplace(v, 0);
  if (!in.count(start)) return {};
  std::vector<Vertex> stack{start}, out{start};
  in[start] = 1;
  while (!stack.empty()) {
    Vertex u = stack.back();
    stack.pop_back();
    for (Vertex w : g.neighbors(u)) {
      auto it = in.find(w);
      if (it != in.end() && !it->second) {
        it->second = 1;
        out.push_back(w);
        stack.push_back(w);
      }
    }
  }
  return make_set(std::move(out));
}

inline std::uint32_t diameter(const MetricGraph& g) {
  std::uint32_t best = 0;
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    for (auto d : bfs(g, v)) {
      if (d == kUnreached) throw Error(ErrorKind::Disconnected, "diameter of a disconnected graph");
      best = std::max(best, d);
    }
  }
  return best;
}

}  // namespace hhs
