#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hhs/graph.hpp"
#include "hhs/metric.hpp"

namespace hhs {

struct ConeOptions {
  /// Members larger than this are coned with an apex vertex instead of a clique.
  std::size_t clique_limit = 4096;
  /// Hard cap on the number of added edges.
  std::size_t max_cone_edges = 50000000;
};

/// Base graph plus, for every family member, edges joining each pair of its
/// vertices. Cone edges parallel to base edges are dropped and recorded.
struct ConedGraph {
  MetricGraph base;
  std::vector<Subgraph> family;
  MetricGraph coned;
  /// Sorted (edge, member id); a pair shared by several members is owned by
  /// the smallest id.
  std::vector<std::pair<Edge, std::uint32_t>> cone_edges;
  std::vector<std::pair<Edge, std::uint32_t>> dropped_parallel;
  /// Apex vertex id in `coned` per member, when the clique was replaced.
  std::vector<std::optional<Vertex>> apex;
  bool apex_approximation = false;

  std::optional<std::uint32_t> owner(Vertex u, Vertex v) const {
    Edge e = u < v ? Edge{u, v} : Edge{v, u};
    auto it = std::lower_bound(cone_edges.begin(), cone_edges.end(), std::pair<Edge, std::uint32_t>{e, 0});
    if (it == cone_edges.end() || it->first != e) return std::nullopt;
    return it->second;
  }

  bool is_apex(Vertex v) const { return v >= base.vertex_count(); }

  /// Member owning an apex vertex.
  std::uint32_t apex_member(Vertex v) const {
    for (std::uint32_t i = 0; i < apex.size(); ++i) {
      if (apex[i] && *apex[i] == v) return i;
    }
    throw Error(ErrorKind::InvalidArgument, "vertex is not an apex");
  }

  /// Cone edges as a set, for DOT export.
  std::set<Edge> cone_edge_set() const {
    std::set<Edge> out;
    for (const auto& [e, id] : cone_edges) out.insert(e);
    return out;
  }
};

inline ConedGraph build_coneoff(const MetricGraph& g, std::vector<Subgraph> family, const ConeOptions& opt = {}) {
  ConedGraph cg;
  cg.base = g;
  const std::size_t n = g.vertex_count();
  std::size_t total = n;
  std::vector<std::pair<Edge, std::uint32_t>> owned;
  cg.apex.assign(family.size(), std::nullopt);
  for (std::uint32_t id = 0; id < family.size(); ++id) {
    const auto& m = family[id].vertices;
    if (m.empty()) throw Error(ErrorKind::InvalidArgument, "empty family member '" + family[id].label + "'");
    if (m.back() >= n) throw Error(ErrorKind::InvalidArgument, "family member '" + family[id].label + "' leaves the graph");
    if (m.size() > opt.clique_limit) {
      Vertex a = static_cast<Vertex>(total++);
      cg.apex[id] = a;
      cg.apex_approximation = true;
      for (Vertex v : m) {
        owned.push_back({{v, a}, id});
      }
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
          Edge e{m[i], m[j]};
          if (g.has_edge(e.first, e.second)) {
            cg.dropped_parallel.push_back({e, id});
          } else {
            owned.push_back({e, id});
          }
        }
      }
    }
    if (owned.size() > opt.max_cone_edges) {
      throw Error(ErrorKind::BudgetExceeded, "cone-off needs more than " + std::to_string(opt.max_cone_edges) + " edges");
    }
  }
  std::sort(owned.begin(), owned.end());
  for (const auto& p : owned) {
    if (cg.cone_edges.empty() || cg.cone_edges.back().first != p.first) cg.cone_edges.push_back(p);
  }
  std::vector<Edge> edges = g.edges();
  for (const auto& [e, id] : cg.cone_edges) edges.push_back(e);
  std::vector<std::string> labels;
  if (g.has_labels()) {
    labels = g.labels();
    for (std::uint32_t id = 0; id < family.size(); ++id) {
      if (cg.apex[id]) labels.push_back("apex:" + family[id].label);
    }
  }
  cg.coned = MetricGraph::from_edges(total, std::move(edges), std::move(labels));
  cg.family = std::move(family);
  return cg;
}

struct ReplacedPiece {
  std::uint32_t member = 0;
  Vertex from = 0, to = 0;
  /// Geodesic of the member's induced subgraph, in base ids.
  PathRecord geodesic;
  std::size_t cone_edges = 0;
};

struct DeElectrificationRecord {
  PathRecord input;
  PathRecord output;
  std::vector<ReplacedPiece> pieces;
  std::size_t cone_edge_count = 0;
};

/// Shortlex-first geodesic between u and v inside member `id`.
inline PathRecord member_geodesic(const ConedGraph& cg, std::uint32_t id, Vertex u, Vertex v) {
  auto sub = induce(cg.base, cg.family[id].vertices);
  Vertex lu = sub.to_local.at(u), lv = sub.to_local.at(v);
  auto d = bfs(sub.graph, lv);
  if (d[lu] == kUnreached) {
    throw Error(ErrorKind::TruncatedPiece, "member '" + cg.family[id].label + "' has no geodesic from " +
                                               cg.base.label(u) + " to " + cg.base.label(v) + " inside the ball");
  }
  auto local = geodesic_along(sub.graph, lu, d);
  PathRecord p;
  p.is_geodesic = false;
  for (Vertex x : local.vertices) p.vertices.push_back(sub.to_parent[x]);
  return p;
}

/// Replaces every cone edge (or apex detour) of a coned path by a geodesic of
/// the owning member.
inline DeElectrificationRecord de_electrify(const ConedGraph& cg, const PathRecord& p) {
  if (!p.valid_in(cg.coned)) throw Error(ErrorKind::InvalidArgument, "path is not a walk in the coned graph");
  if (cg.is_apex(p.vertices.front()) || cg.is_apex(p.vertices.back())) {
    throw Error(ErrorKind::InvalidArgument, "path endpoints must be base vertices");
  }
  DeElectrificationRecord rec;
  rec.input = p;
  rec.output.vertices.push_back(p.vertices.front());
  std::size_t i = 0;
  while (i + 1 < p.vertices.size()) {
    Vertex u = p.vertices[i], v = p.vertices[i + 1];
    if (!cg.is_apex(v) && cg.base.has_edge(u, v)) {
      rec.output.vertices.push_back(v);
      ++i;
      continue;
    }
    ReplacedPiece piece;
    piece.from = u;
    if (cg.is_apex(v)) {
      piece.member = cg.apex_member(v);
      piece.to = p.vertices[i + 2];
      piece.cone_edges = 2;
      i += 2;
    } else {
      piece.member = *cg.owner(u, v);
      piece.to = v;
      piece.cone_edges = 1;
      i += 1;
    }
    piece.geodesic = member_geodesic(cg, piece.member, piece.from, piece.to);
    rec.output.vertices.insert(rec.output.vertices.end(), piece.geodesic.vertices.begin() + 1,
                               piece.geodesic.vertices.end());
    rec.cone_edge_count += piece.cone_edges;
    rec.pieces.push_back(std::move(piece));
  }
  return rec;
}

/// Smallest lambda >= 1 with (j - i) <= lambda * d(p_i, p_j) + lambda for all
/// i < j along the path, distances taken in g.
inline double quasi_geodesic_lambda(const MetricGraph& g, const PathRecord& p) {
  double lambda = 1.0;
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    auto d = bfs(g, p.vertices[i]);
    for (std::size_t j = i + 1; j < p.vertices.size(); ++j) {
      double ratio = static_cast<double>(j - i) / static_cast<double>(d[p.vertices[j]] + 1);
      lambda = std::max(lambda, ratio);
    }
  }
  return lambda;
}

struct KapovichRafiReport {
  std::size_t family_size = 0;
  HyperbolicityReport delta_base;
  HyperbolicityReport delta_coned;
  std::uint32_t hausdorff_H = 0;
  Vertex witness_u = 0, witness_v = 0;
  std::uint64_t pairs = 0;
  bool exhaustive = true;
  bool apex_approximation = false;
};

struct KapovichRafiOptions {
  SampleSpec pairs = SampleSpec::exhaustive();
  /// Quadruple count above which four-point constants are sampled.
  std::uint64_t exhaustive_quadruples = 50000000;
  FourPointBudget quadruple_budget{2000000, 1};
};

inline HyperbolicityReport delta_with_budget(const MetricGraph& g, const DistanceMatrix& d, std::uint64_t limit,
                                             FourPointBudget budget) {
  std::uint64_t n = g.vertex_count();
  std::uint64_t quads = n < 4 ? 0 : n * (n - 1) / 2 * (n - 2) / 3 * (n - 3) / 4;
  if (quads <= limit) return four_point_delta(g, d);
  return four_point_delta(g, d, budget);
}

/// Coned-metric Hausdorff distance between the shortlex-first base geodesic
/// and coned geodesic of each vertex pair, plus both four-point constants.
inline KapovichRafiReport kapovich_rafi_report(const ConedGraph& cg, const KapovichRafiOptions& opt = {}) {
  if (!cg.base.connected()) throw Error(ErrorKind::Disconnected, "cone-off report needs a connected base graph");
  KapovichRafiReport rep;
  rep.family_size = cg.family.size();
  rep.apex_approximation = cg.apex_approximation;
  DistanceMatrix db(cg.base), dc(cg.coned);
  rep.delta_base = delta_with_budget(cg.base, db, opt.exhaustive_quadruples, opt.quadruple_budget);
  rep.delta_coned = delta_with_budget(cg.coned, dc, opt.exhaustive_quadruples, opt.quadruple_budget);

  const std::uint64_t n = cg.base.vertex_count();
  const std::uint64_t total = n * (n - 1) / 2;
  bool sampled = false;
  auto picks = sample_indices(total, opt.pairs, 11, &sampled);
  rep.exhaustive = !sampled;
  rep.pairs = picks.size();

  struct Best {
    std::uint32_t h = 0;
    Vertex u = 0, v = 0;
    bool set = false;
  };
  std::vector<Best> chunk_best(worker_count());
  parallel_chunks(picks.size(), [&](std::size_t b, std::size_t e, std::size_t c) {
    Best best;
    for (std::size_t k = b; k < e; ++k) {
      auto [u64, v64] = unordered_pair(picks[k], n);
      Vertex u = static_cast<Vertex>(u64), v = static_cast<Vertex>(v64);
      auto pb = shortest_path(cg.base, db, u, v).vertices;
      auto pc = shortest_path(cg.coned, dc, u, v).vertices;
      std::uint32_t h = 0;
      for (Vertex x : pb) {
        std::uint32_t m = kUnreached;
        for (Vertex y : pc) m = std::min(m, dc(x, y));
        h = std::max(h, m);
      }
      for (Vertex y : pc) {
        std::uint32_t m = kUnreached;
        for (Vertex x : pb) m = std::min(m, dc(x, y));
        h = std::max(h, m);
      }
      if (!best.set || h > best.h) best = Best{h, u, v, true};
    }
    chunk_best[c] = best;
  });
  for (const auto& cb : chunk_best) {
    if (cb.set && cb.h > rep.hausdorff_H) {
      rep.hausdorff_H = cb.h;
      rep.witness_u = cb.u;
      rep.witness_v = cb.v;
    }
  }
  return rep;
}

struct TauReport {
  double tau1 = 1.0;
  double tau2 = 1.0;
  PathRecord coned_path;
  DeElectrificationRecord de_electrified;
};

/// Builds the shortlex-first coned geodesic from x to y, de-electrifies it
/// and measures both quasi-geodesic constants.
inline TauReport tau_quasigeodesic_check(const ConedGraph& cg, Vertex x, Vertex y) {
  if (cg.is_apex(x) || cg.is_apex(y) || y >= cg.base.vertex_count()) {
    throw Error(ErrorKind::InvalidArgument, "endpoints must be base vertices");
  }
  TauReport rep;
  rep.coned_path = shortest_path(cg.coned, x, y);
  rep.de_electrified = de_electrify(cg, rep.coned_path);
  rep.tau1 = quasi_geodesic_lambda(cg.coned, rep.coned_path);
  rep.tau2 = quasi_geodesic_lambda(cg.base, rep.de_electrified.output);
  rep.coned_path.quasi_geodesic_constant = rep.tau1;
  rep.de_electrified.output.quasi_geodesic_constant = rep.tau2;
  return rep;
}

}  // namespace hhs
