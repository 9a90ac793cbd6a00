#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "hhs/graph.hpp"

namespace hhs {

/// Four-point hyperbolicity constant. `twice_delta` is stored so that the
/// half-integer values of graph metrics stay exact.
struct HyperbolicityReport {
  std::uint32_t twice_delta = 0;
  std::array<Vertex, 4> witness{0, 0, 0, 0};
  std::uint64_t quadruples = 0;
  bool exhaustive = true;
  std::uint64_t seed = 0;

  double delta() const { return twice_delta / 2.0; }
};

/// 2*delta of a single quadruple: largest pair-sum minus the middle one.
inline std::uint32_t four_point_excess(const DistanceMatrix& d, Vertex x, Vertex y, Vertex z, Vertex w) {
  std::uint32_t s1 = d(x, y) + d(z, w);
  std::uint32_t s2 = d(x, z) + d(y, w);
  std::uint32_t s3 = d(x, w) + d(y, z);
  if (s1 < s2) std::swap(s1, s2);
  if (s1 < s3) std::swap(s1, s3);
  // s1 largest
  return s1 - std::max(s2, s3);
}

struct FourPointBudget {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 1;
};

/// Smallest delta with d(x,y)+d(z,w) <= max(d(x,z)+d(y,w), d(x,w)+d(y,z)) + 2 delta.
/// Exhaustive over all quadruples when `budget` is absent; otherwise a lower
/// bound from `budget->samples` seeded draws.
inline HyperbolicityReport four_point_delta(const MetricGraph& g, const DistanceMatrix& d,
                                            std::optional<FourPointBudget> budget = std::nullopt) {
  if (!g.connected()) throw Error(ErrorKind::Disconnected, "four-point delta needs a connected graph");
  const std::size_t n = g.vertex_count();
  HyperbolicityReport rep;
  if (n < 4) return rep;

  struct Best {
    std::uint32_t value = 0;
    std::array<Vertex, 4> quad{0, 0, 0, 0};
    bool set = false;
  };
  auto better = [](const Best& a, const Best& b) { return b.set && (!a.set || b.value > a.value); };

  if (!budget) {
    rep.exhaustive = true;
    std::vector<Best> chunk_best(worker_count());
    parallel_chunks(n, [&](std::size_t b, std::size_t e, std::size_t c) {
      Best best;
      for (Vertex x = static_cast<Vertex>(b); x < e; ++x) {
        for (Vertex y = x + 1; y < n; ++y) {
          for (Vertex z = y + 1; z < n; ++z) {
            for (Vertex w = z + 1; w < n; ++w) {
              std::uint32_t v = four_point_excess(d, x, y, z, w);
              if (!best.set || v > best.value) best = Best{v, {x, y, z, w}, true};
            }
          }
        }
      }
      chunk_best[c] = best;
    });
    Best best;
    for (const auto& b : chunk_best) {
      if (better(best, b)) best = b;
    }
    rep.twice_delta = best.value;
    rep.witness = best.quad;
    std::uint64_t nn = n;
    rep.quadruples = nn * (nn - 1) * (nn - 2) * (nn - 3) / 24;
    return rep;
  }

  rep.exhaustive = false;
  rep.seed = budget->seed;
  rep.quadruples = budget->samples;
  std::vector<Best> chunk_best(worker_count());
  parallel_chunks(budget->samples, [&](std::size_t b, std::size_t e, std::size_t c) {
    Best best;
    for (std::size_t i = b; i < e; ++i) {
      std::uint64_t r = draw(budget->seed, 4, i);
      std::array<Vertex, 4> q{};
      for (int k = 0; k < 4; ++k) {
        q[k] = static_cast<Vertex>(r % n);
        r = splitmix64(r);
      }
      std::uint32_t v = four_point_excess(d, q[0], q[1], q[2], q[3]);
      if (!best.set || v > best.value) best = Best{v, q, true};
    }
    chunk_best[c] = best;
  });
  Best best;
  for (const auto& b : chunk_best) {
    if (better(best, b)) best = b;
  }
  rep.twice_delta = best.value;
  rep.witness = best.quad;
  return rep;
}

inline HyperbolicityReport four_point_delta(const MetricGraph& g, std::optional<FourPointBudget> budget = std::nullopt) {
  if (!g.connected()) throw Error(ErrorKind::Disconnected, "four-point delta needs a connected graph");
  DistanceMatrix d(g);
  return four_point_delta(g, d, budget);
}

/// All vertices of `h` at minimal distance from x.
inline VertexSet closest_point_projection(const MetricGraph& g, std::span<const Vertex> h, Vertex x) {
  if (h.empty()) throw Error(ErrorKind::InvalidArgument, "projection onto an empty set");
  auto d = bfs(g, x);
  std::uint32_t best = kUnreached;
  for (Vertex v : h) best = std::min(best, d[v]);
  if (best == kUnreached) throw Error(ErrorKind::Disconnected, "vertex " + g.label(x) + " cannot reach the target set");
  VertexSet out;
  for (Vertex v : h) {
    if (d[v] == best) out.push_back(v);
  }
  return make_set(std::move(out));
}

/// Closest-point projections of every vertex onto `h`, computed in one
/// multi-source sweep. Row v holds the projection of v (empty if unreachable).
struct NearestField {
  std::vector<std::uint32_t> distance;
  SetTable nearest;
};

inline NearestField nearest_points(const MetricGraph& g, std::span<const Vertex> h) {
  const std::size_t n = g.vertex_count();
  std::vector<std::uint32_t> dist(n, kUnreached);
  std::vector<VertexSet> near(n);
  std::vector<Vertex> queue;
  queue.reserve(n);
  for (Vertex s : h) {
    if (dist[s] != 0) {
      dist[s] = 0;
      near[s] = {s};
      queue.push_back(s);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    Vertex u = queue[head];
    for (Vertex w : g.neighbors(u)) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[u] + 1;
        near[w] = near[u];
        queue.push_back(w);
      } else if (dist[w] == dist[u] + 1) {
        if (near[w] != near[u]) near[w] = set_union(near[w], near[u]);
      }
    }
  }
  return NearestField{std::move(dist), SetTable(near)};
}

inline std::uint32_t set_diameter(const DistanceMatrix& d, std::span<const Vertex> a) {
  std::uint32_t best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) best = std::max(best, d(a[i], a[j]));
  }
  return best;
}

inline std::uint32_t set_diameter(const MetricGraph& g, std::span<const Vertex> a) {
  std::uint32_t best = 0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    auto d = bfs(g, a[i]);
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (d[a[j]] == kUnreached) throw Error(ErrorKind::Disconnected, "set spans several components");
      best = std::max(best, d[a[j]]);
    }
  }
  return best;
}

inline std::uint32_t hausdorff_distance(const MetricGraph& g, std::span<const Vertex> a, std::span<const Vertex> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidArgument, "hausdorff distance of an empty set");
  auto da = bfs(g, a);
  auto db = bfs(g, b);
  std::uint32_t best = 0;
  for (Vertex v : b) best = std::max(best, da[v]);
  for (Vertex v : a) best = std::max(best, db[v]);
  if (best == kUnreached) throw Error(ErrorKind::Disconnected, "sets lie in different components");
  return best;
}

struct QuasiConvexityReport {
  std::uint32_t q = 0;
  /// Endpoints in h and the geodesic point realizing q.
  Vertex from = 0, to = 0, far_point = 0;
  PathRecord witness_geodesic;
  bool exhaustive = true;
  std::uint64_t sources_examined = 0;
};

/// Smallest q such that every geodesic of g joining two vertices of h stays
/// within N_q(h). One BFS per source in h; the set of vertices on geodesics
/// from the source to h is recovered by a reverse sweep of the BFS order.
inline QuasiConvexityReport quasiconvexity_constant(const MetricGraph& g, std::span<const Vertex> h,
                                                    const SampleSpec& spec = {}) {
  if (h.empty()) throw Error(ErrorKind::InvalidArgument, "quasi-convexity of an empty set");
  if (!g.connected()) throw Error(ErrorKind::Disconnected, "quasi-convexity needs a connected graph");
  const std::size_t n = g.vertex_count();
  auto to_h = bfs(g, h);
  std::vector<char> in_h(n, 0);
  for (Vertex v : h) in_h[v] = 1;

  bool sampled = false;
  auto picks = sample_indices(h.size(), spec, 7, &sampled);

  struct Best {
    std::uint32_t q = 0;
    Vertex u = 0, v = 0, w = 0;
    bool set = false;
  };
  std::vector<Best> chunk_best(worker_count());
  parallel_chunks(picks.size(), [&](std::size_t b, std::size_t e, std::size_t c) {
    Best best;
    std::vector<std::uint32_t> du(n);
    std::vector<Vertex> order;
    std::vector<Vertex> target(n);
    std::vector<char> marked(n);
    for (std::size_t k = b; k < e; ++k) {
      Vertex u = h[picks[k]];
      std::fill(du.begin(), du.end(), kUnreached);
      order.clear();
      du[u] = 0;
      order.push_back(u);
      for (std::size_t head = 0; head < order.size(); ++head) {
        Vertex x = order[head];
        for (Vertex y : g.neighbors(x)) {
          if (du[y] == kUnreached) {
            du[y] = du[x] + 1;
            order.push_back(y);
          }
        }
      }
      std::fill(marked.begin(), marked.end(), 0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Vertex x = *it;
        if (in_h[x]) {
          marked[x] = 1;
          target[x] = x;
        }
        if (!marked[x]) {
          for (Vertex y : g.neighbors(x)) {
            if (du[y] == du[x] + 1 && marked[y]) {
              marked[x] = 1;
              target[x] = target[y];
              break;
            }
          }
        }
        if (marked[x] && (!best.set || to_h[x] > best.q)) best = Best{to_h[x], u, target[x], x, true};
      }
    }
    chunk_best[c] = best;
  });
  Best best;
  for (const auto& cb : chunk_best) {
    if (cb.set && (!best.set || cb.q > best.q)) best = cb;
  }
  QuasiConvexityReport rep;
  rep.q = best.q;
  rep.from = best.u;
  rep.to = best.v;
  rep.far_point = best.w;
  rep.exhaustive = !sampled;
  rep.sources_examined = picks.size();
  auto first = shortest_path(g, best.u, best.w);
  auto second = shortest_path(g, best.w, best.v);
  rep.witness_geodesic = first;
  rep.witness_geodesic.vertices.insert(rep.witness_geodesic.vertices.end(), second.vertices.begin() + 1,
                                       second.vertices.end());
  return rep;
}

}  // namespace hhs
