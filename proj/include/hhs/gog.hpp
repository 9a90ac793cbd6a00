#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hhs/embedding.hpp"
#include "hhs/factor_system.hpp"
#include "hhs/hhs_checks.hpp"

namespace hhs {

/// Free groups, the integers and free products of those.
inline bool is_hyperbolic_model(const GroupModel& m) {
  switch (m.effective_kind()) {
    case GroupKind::Free: return true;
    case GroupKind::FreeAbelian: return m.rank() <= 1;
    case GroupKind::Raag: return false;
    case GroupKind::FreeProduct:
      for (const auto& f : m.factors()) {
        if (!is_hyperbolic_model(f)) return false;
      }
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Edge maps

struct EdgeMapCheck {
  /// Every defining relator of the edge group maps to the identity.
  bool homomorphism = true;
  /// Distinct elements of the edge-group ball have distinct images.
  bool injective_on_ball = true;
  std::uint32_t radius = 0;
  std::string witness;
};

/// Image of an edge-group word under generator images.
inline Word map_word(const Word& w, const std::vector<Word>& images, const GroupModel& target) {
  Word out;
  for (Letter l : w) {
    const Word& g = images.at(generator_of(l));
    Word piece = (l & 1) ? inverse(g) : g;
    out.insert(out.end(), piece.begin(), piece.end());
  }
  return target.normal_form(out);
}

inline EdgeMapCheck check_edge_map(const GroupModel& edge, const GroupModel& vertex, const std::vector<Word>& images,
                                   std::uint32_t r) {
  EdgeMapCheck out;
  out.radius = r;
  for (std::uint32_t i = 0; i < edge.rank() && out.homomorphism; ++i) {
    for (std::uint32_t j = i + 1; j < edge.rank(); ++j) {
      if (!edge.commutes(i, j)) continue;
      Word rel{2 * i, 2 * j, 2 * i + 1, 2 * j + 1};
      Word img = map_word(rel, images, vertex);
      if (!img.empty()) {
        out.homomorphism = false;
        out.witness = "relator [" + edge.labels()[i] + "," + edge.labels()[j] + "] maps to " + vertex.format(img);
        break;
      }
    }
  }
  auto ball = cayley_ball(edge, r);
  std::unordered_map<Word, Vertex, WordHash> seen;
  for (Vertex v = 0; v < ball.size(); ++v) {
    Word img = map_word(ball.words[v], images, vertex);
    auto [it, fresh] = seen.emplace(std::move(img), v);
    if (!fresh) {
      out.injective_on_ball = false;
      if (out.witness.empty()) {
        out.witness = ball.label(it->second) + " and " + ball.label(v) + " have the same image";
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph of groups

/// Index map, space maps and point map of an edge-group structure into a
/// vertex structure. kUnreached marks points whose image leaves the ball.
struct Hieromorphism {
  std::vector<std::size_t> index_map;
  /// Per edge index U: vertex of CU -> vertex of C f(U).
  std::vector<std::vector<Vertex>> space_map;
  /// Vertex of X_e -> vertex of X_v.
  std::vector<Vertex> point_map;
};

struct GogVertex {
  std::string name;
  GroupModel group;
  /// "base:<component>" or "move:<k>".
  std::string origin;
  std::shared_ptr<const HHSInstance> structure;

  bool is_base() const { return origin.rfind("base:", 0) == 0; }
};

struct EdgeSide {
  std::size_t vertex = 0;
  std::vector<Word> images;
  EdgeMapCheck check;
  std::shared_ptr<const Hieromorphism> map;
};

struct GogEdge {
  std::string name;
  GroupModel group;
  /// side[0] carries phi^-, side[1] carries phi^+.
  std::array<EdgeSide, 2> side;
  std::string origin;
  std::shared_ptr<const HHSInstance> structure;

  /// Image of the edge group on one side, labelled by its generator images.
  SubgroupSpec image(std::size_t s, const GroupModel& vertex_group) const {
    std::string label = "<";
    for (std::size_t i = 0; i < side[s].images.size(); ++i) {
      if (i) label += ", ";
      label += vertex_group.format(side[s].images[i]);
    }
    return SubgroupSpec{label + ">", side[s].images};
  }
};

enum class MoveType { EdgeJoin, StarVertex };

inline const char* to_string(MoveType t) { return t == MoveType::EdgeJoin ? "edge-join" : "star-vertex"; }

struct MoveEdge {
  std::string name;
  /// Existing vertex the edge attaches to.
  std::size_t target = 0;
  GroupModel group;
  /// Generator images in the new vertex group (star-vertex) or the source vertex (edge-join).
  std::vector<std::string> near_images;
  /// Generator images in the target vertex group.
  std::vector<std::string> target_images;
};

struct QuasiConvexityEvidence {
  std::string edge;
  std::uint32_t radius = 0;
  std::uint32_t q = 0;
};

struct MoveRecord {
  MoveType type = MoveType::StarVertex;
  /// Star-vertex: the new vertex.
  std::string vertex_name;
  GroupModel vertex_group;
  /// Edge-join: the vertex the edge starts at.
  std::size_t source = 0;
  std::vector<MoveEdge> edges;
  std::uint32_t evidence_radius = 4;
  std::uint32_t max_quasiconvexity = 2;
  /// Filled when the move is applied.
  std::vector<std::size_t> targets;
  std::vector<QuasiConvexityEvidence> evidence;

  static MoveRecord star_vertex(std::string name, GroupModel group, std::vector<MoveEdge> edges) {
    MoveRecord mv;
    mv.type = MoveType::StarVertex;
    mv.vertex_name = std::move(name);
    mv.vertex_group = std::move(group);
    mv.edges = std::move(edges);
    return mv;
  }

  static MoveRecord edge_join(std::size_t source, MoveEdge edge) {
    MoveRecord mv;
    mv.type = MoveType::EdgeJoin;
    mv.source = source;
    mv.edges = {std::move(edge)};
    return mv;
  }
};

struct GraphOfGroups {
  std::vector<GogVertex> vertices;
  std::vector<GogEdge> edges;
  std::vector<MoveRecord> moves;
  std::size_t components = 0;

  /// Adds a one-vertex base component carrying its own structure.
  std::size_t add_base_vertex(std::string name, GroupModel group, std::shared_ptr<const HHSInstance> structure) {
    if (find_vertex(name)) throw Error(ErrorKind::InvalidArgument, "duplicate vertex name '" + name + "'");
    vertices.push_back(GogVertex{std::move(name), std::move(group), "base:" + std::to_string(components++),
                                 std::move(structure)});
    return vertices.size() - 1;
  }

  std::optional<std::size_t> find_vertex(const std::string& name) const {
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      if (vertices[v].name == name) return v;
    }
    return std::nullopt;
  }

  /// (edge, side) pairs attached at v.
  std::vector<std::pair<std::size_t, std::size_t>> sides_at(std::size_t v) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      for (std::size_t s = 0; s < 2; ++s) {
        if (edges[e].side[s].vertex == v) out.emplace_back(e, s);
      }
    }
    return out;
  }

  /// Subgroups of G_v that are images of incident edge groups, in sides_at order.
  std::vector<SubgroupSpec> incident_subgroups(std::size_t v) const {
    std::vector<SubgroupSpec> out;
    for (auto [e, s] : sides_at(v)) out.push_back(edges[e].image(s, vertices[v].group));
    return out;
  }
};

namespace detail {

inline std::vector<Word> parse_images(const GroupModel& m, const std::vector<std::string>& words, const std::string& what) {
  std::vector<Word> out;
  for (const auto& w : words) {
    try {
      out.push_back(m.normal_form(m.parse(w)));
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedMove, what + ": " + e.what());
    }
  }
  return out;
}

inline EdgeSide make_side(std::size_t v, const GroupModel& vertex_group, const MoveEdge& me,
                          const std::vector<std::string>& words, std::uint32_t r) {
  if (words.size() != me.group.rank()) {
    throw Error(ErrorKind::MalformedMove, "edge " + me.name + " gives " + std::to_string(words.size()) +
                                              " images for a rank " + std::to_string(me.group.rank()) + " edge group");
  }
  EdgeSide side;
  side.vertex = v;
  side.images = parse_images(vertex_group, words, "edge " + me.name);
  side.check = check_edge_map(me.group, vertex_group, side.images, r);
  if (!side.check.homomorphism) throw Error(ErrorKind::MalformedMove, "edge " + me.name + ": " + side.check.witness);
  return side;
}

}  // namespace detail

/// Applies one obtainability move and returns the new graph. Existing
/// vertices, edges and structures are copied unchanged.
inline GraphOfGroups apply_star_move(const GraphOfGroups& g, MoveRecord mv) {
  GraphOfGroups out = g;
  const std::string origin = "move:" + std::to_string(g.moves.size());
  auto need_vertex = [&](std::size_t v) {
    if (v >= g.vertices.size()) throw Error(ErrorKind::MalformedMove, "move targets missing vertex " + std::to_string(v));
  };
  for (const auto& me : mv.edges) {
    if (me.name.empty()) throw Error(ErrorKind::MalformedMove, "edge without a name");
    if (!is_hyperbolic_model(me.group)) {
      throw Error(ErrorKind::MalformedMove, "edge group of " + me.name + " is not a hyperbolic model");
    }
    for (const auto& e : out.edges) {
      if (e.name == me.name) throw Error(ErrorKind::MalformedMove, "duplicate edge name '" + me.name + "'");
    }
    need_vertex(me.target);
  }
  mv.targets.clear();
  mv.evidence.clear();

  if (mv.type == MoveType::EdgeJoin) {
    if (mv.edges.size() != 1) throw Error(ErrorKind::MalformedMove, "edge-join adds exactly one edge");
    const auto& me = mv.edges[0];
    need_vertex(mv.source);
    if (mv.source == me.target) throw Error(ErrorKind::MalformedMove, "edge-join needs two distinct vertices");
    GogEdge e{me.name, me.group, {}, origin, nullptr};
    e.side[0] = detail::make_side(mv.source, g.vertices[mv.source].group, me, me.near_images, mv.evidence_radius);
    e.side[1] = detail::make_side(me.target, g.vertices[me.target].group, me, me.target_images, mv.evidence_radius);
    out.edges.push_back(std::move(e));
    mv.targets = {mv.source, me.target};
  } else {
    if (mv.vertex_name.empty() || g.find_vertex(mv.vertex_name)) {
      throw Error(ErrorKind::MalformedMove, "new vertex needs a fresh name, got '" + mv.vertex_name + "'");
    }
    if (!is_hyperbolic_model(mv.vertex_group)) {
      throw Error(ErrorKind::MalformedMove, "vertex group of " + mv.vertex_name + " is not a hyperbolic model");
    }
    const std::size_t nv = out.vertices.size();
    out.vertices.push_back(GogVertex{mv.vertex_name, mv.vertex_group, origin, nullptr});
    std::optional<BallGraph> ball;
    if (!mv.edges.empty()) ball = cayley_ball(mv.vertex_group, mv.evidence_radius);
    for (const auto& me : mv.edges) {
      GogEdge e{me.name, me.group, {}, origin, nullptr};
      e.side[0] = detail::make_side(nv, mv.vertex_group, me, me.near_images, mv.evidence_radius);
      e.side[1] = detail::make_side(me.target, g.vertices[me.target].group, me, me.target_images, mv.evidence_radius);
      SubgroupSpec h = e.image(0, mv.vertex_group);
      QuasiConvexityEvidence ev{me.name, mv.evidence_radius, 0};
      for (const auto& c : enumerate_cosets(*ball, h)) {
        if (c.rep_vertex == 0) ev.q = quasiconvexity_constant(ball->graph, c.members).q;
      }
      if (ev.q > mv.max_quasiconvexity) {
        throw Error(ErrorKind::MalformedMove, "edge subgroup " + h.label + " has quasi-convexity constant " +
                                                  std::to_string(ev.q) + " on the radius " +
                                                  std::to_string(mv.evidence_radius) + " ball");
      }
      mv.evidence.push_back(ev);
      mv.targets.push_back(me.target);
      out.edges.push_back(std::move(e));
    }
    mv.targets.insert(mv.targets.begin(), nv);
  }
  out.moves.push_back(std::move(mv));
  return out;
}

// ---------------------------------------------------------------------------
// Obtainability

struct ObtainabilityVerdict {
  std::size_t vertex = 0;
  std::vector<SubgroupSpec> subgroups;
  std::optional<HHEmbeddedReport> report;
  bool pass = true;
  std::string witness;
};

struct ObtainabilityReport {
  std::vector<ObtainabilityVerdict> vertices;

  bool pass() const {
    for (const auto& v : vertices) {
      if (!v.pass) return false;
    }
    return true;
  }
};

namespace detail {

inline std::string embedding_witness(const HHEmbeddedReport& r) {
  if (!r.generated) return r.generation_witness;
  if (!r.cayley_top) return r.top_witness;
  const auto& w = r.embedding;
  if (!w.separation.pass) return "separation: " + w.separation.witness;
  for (const auto& s : w.subgroups) {
    if (!s.hyperbolic()) return s.subgroup.label + ": coned ball delta changes with the radius";
    if (!s.proper()) return s.subgroup.label + ": relative metric balls grow with the radius";
    if (!s.qi_embedded()) return s.subgroup.label + ": not quasi-isometrically embedded";
  }
  return {};
}

}  // namespace detail

/// Runs the hierarchical hyperbolic embedding check at every base vertex for
/// the images of the edges added by moves.
inline ObtainabilityReport check_hyperbolic_obtainable(const GraphOfGroups& g) {
  ObtainabilityReport out;
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const auto& vx = g.vertices[v];
    if (!vx.is_base()) continue;
    ObtainabilityVerdict verdict;
    verdict.vertex = v;
    verdict.subgroups = g.incident_subgroups(v);
    if (!verdict.subgroups.empty()) {
      if (!vx.structure) throw Error(ErrorKind::MissingStructure, "base vertex " + vx.name + " has no structure");
      verdict.report = check_hh_embedded(*vx.structure, verdict.subgroups);
      verdict.pass = verdict.report->pass();
      if (!verdict.pass) verdict.witness = vx.name + ": " + detail::embedding_witness(*verdict.report);
    }
    out.vertices.push_back(std::move(verdict));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Combination hypotheses

struct CombinationOptions {
  std::vector<std::uint32_t> hqc_grid{0, 1, 2, 3};
  /// Pass bounds: k0 <= hqc_k0 and k(r) <= hqc_slope * r + hqc_intercept.
  std::uint32_t hqc_k0 = 2;
  std::uint32_t hqc_slope = 2;
  std::uint32_t hqc_intercept = 1;
  /// Largest accepted (xi, xi) quasi-isometry constant of a space map.
  std::uint32_t full_xi = 2;
  /// Index spaces of at most this diameter count as bounded for nesting surjectivity.
  std::uint32_t bounded_cutoff = 0;
  CheckOptions checks{};
};

struct SideReport {
  std::size_t edge = 0, side = 0, vertex = 0;
  HQCReport hqc;
  bool hqc_pass = true;
  std::string hqc_witness;
  /// Measured xi per edge index.
  std::vector<std::uint32_t> qi_xi;
  std::uint32_t xi = 0;
  std::size_t undefined_points = 0;
  bool index_injective = true;
  bool relations_preserved = true;
  bool nesting_surjective = true;
  std::vector<std::string> bounded_exempt;
  bool full_pass = true;
  std::string full_witness;
  bool non_orthogonal = true;
  std::string orthogonal_witness;
};

struct Verdict {
  bool pass = true;
  std::string witness;

  void fail(const std::string& w) {
    if (pass) witness = w;
    pass = false;
  }
};

struct CombinationReport {
  std::vector<SideReport> sides;
  Verdict hqc, full, non_orthogonal;
  /// Checked through the disjointness of index orbit tags at shared vertices.
  Verdict bounded_supports;

  bool pass() const { return hqc.pass && full.pass && non_orthogonal.pass && bounded_supports.pass; }
};

namespace detail {

/// Least integer xi >= 1 with d/xi - xi <= d2 <= xi d + xi.
inline std::uint32_t qi_requirement(std::uint32_t d, std::uint32_t d2) {
  std::uint32_t xi = 1;
  while (d2 > xi * (d + 1) || d > xi * (d2 + xi)) ++xi;
  return xi;
}

inline std::uint32_t space_diameter(const DistanceMatrix& d, std::size_t n) {
  std::uint32_t best = 0;
  for (Vertex a = 0; a < n; ++a) {
    for (Vertex b = a + 1; b < n; ++b) best = std::max(best, d(a, b));
  }
  return best;
}

inline std::string edge_side_name(const GraphOfGroups& g, std::size_t e, std::size_t s) {
  return g.edges[e].name + (s == 0 ? "^-" : "^+") + " at " + g.vertices[g.edges[e].side[s].vertex].name;
}

inline SideReport check_side(const GraphOfGroups& g, std::size_t e, std::size_t s, const CombinationOptions& opt) {
  const auto& edge = g.edges[e];
  const auto& es = *edge.structure;
  const auto& side = edge.side[s];
  const auto& vs = *g.vertices[side.vertex].structure;
  const auto& f = *side.map;
  SideReport rep;
  rep.edge = e;
  rep.side = s;
  rep.vertex = side.vertex;
  const std::string where = edge_side_name(g, e, s);

  // (i) hierarchical quasi-convexity of the image
  std::vector<Vertex> y;
  for (Vertex p : f.point_map) {
    if (p != kUnreached) y.push_back(p);
    else ++rep.undefined_points;
  }
  rep.hqc = check_hqc(vs, make_set(std::move(y)), opt.hqc_grid, opt.checks);
  if (rep.hqc.k0 > opt.hqc_k0) {
    rep.hqc_pass = false;
    rep.hqc_witness = where + ": image projects to a " + std::to_string(rep.hqc.k0) + "-quasi-convex set in " +
                      vs.indices[rep.hqc.k0_index].label;
  }
  for (const auto& row : rep.hqc.table) {
    if (rep.hqc_pass && row.k > opt.hqc_slope * row.r + opt.hqc_intercept) {
      rep.hqc_pass = false;
      rep.hqc_witness = where + ": k(" + std::to_string(row.r) + ") = " + std::to_string(row.k) + " at " +
                        vs.X().label(row.witness);
    }
  }

  // (ii) fullness
  const std::size_t ne = es.size();
  std::set<std::size_t> image(f.index_map.begin(), f.index_map.end());
  rep.index_injective = image.size() == ne;
  for (std::size_t u = 0; u < ne; ++u) {
    for (std::size_t w = 0; w < ne; ++w) {
      if (es.rel(u, w) != vs.rel(f.index_map[u], f.index_map[w])) {
        rep.relations_preserved = false;
        if (rep.full_witness.empty()) {
          rep.full_witness = where + ": relation of " + es.indices[u].label + " and " + es.indices[w].label + " not preserved";
        }
      }
    }
  }
  for (std::size_t u = 0; u < ne; ++u) {
    const auto& map = f.space_map[u];
    const auto& de = es.dist(u);
    const std::size_t fu = f.index_map[u];
    const auto& dv = vs.dist(fu);
    std::vector<Vertex> defined;
    for (Vertex a = 0; a < map.size(); ++a) {
      if (map[a] != kUnreached) defined.push_back(a);
    }
    std::uint32_t xi = 1;
    const std::uint64_t k = defined.size();
    for (auto idx : sample_indices(k * k, opt.checks.pairs, 91 + u)) {
      Vertex a = defined[idx / k], b = defined[idx % k];
      if (a >= b) continue;
      xi = std::max(xi, qi_requirement(de(a, b), dv(map[a], map[b])));
    }
    std::vector<Vertex> img;
    for (Vertex a : defined) img.push_back(map[a]);
    auto gap = bfs(vs.space(fu), make_set(std::move(img)));
    for (auto d : gap) xi = std::max(xi, d);
    rep.qi_xi.push_back(xi);
    rep.xi = std::max(rep.xi, xi);

    for (std::size_t v2 = 0; v2 < vs.size(); ++v2) {
      if (!vs.nested(v2, fu)) continue;
      bool hit = false;
      for (std::size_t w = 0; w < ne && !hit; ++w) hit = es.nested(w, u) && f.index_map[w] == v2;
      if (hit) continue;
      if (space_diameter(vs.dist(v2), vs.space(v2).vertex_count()) <= opt.bounded_cutoff) {
        rep.bounded_exempt.push_back(vs.indices[v2].label);
        continue;
      }
      rep.nesting_surjective = false;
      if (rep.full_witness.empty()) {
        rep.full_witness = where + ": " + vs.indices[v2].label + " is nested in the image of " + es.indices[u].label +
                           " but has no preimage";
      }
    }
  }
  if (rep.xi > opt.full_xi && rep.full_witness.empty()) {
    rep.full_witness = where + ": space maps need xi = " + std::to_string(rep.xi);
  }
  rep.full_pass = rep.index_injective && rep.relations_preserved && rep.nesting_surjective && rep.xi <= opt.full_xi;

  // (iii) the image of the top element is not orthogonal to anything
  const std::size_t ft = f.index_map[es.top];
  for (std::size_t v2 = 0; v2 < vs.size(); ++v2) {
    if (vs.orthogonal(ft, v2)) {
      rep.non_orthogonal = false;
      rep.orthogonal_witness = where + ": " + vs.indices[ft].label + " is orthogonal to " + vs.indices[v2].label;
      break;
    }
  }
  return rep;
}

inline std::set<std::string> image_tags(const GraphOfGroups& g, std::size_t e, std::size_t s) {
  const auto& vs = *g.vertices[g.edges[e].side[s].vertex].structure;
  std::set<std::string> tags;
  for (std::size_t u : g.edges[e].side[s].map->index_map) tags.insert(vs.indices[u].orbit_tag);
  return tags;
}

}  // namespace detail

/// Evaluates the four hypotheses on a graph whose vertices and edges carry
/// structures and whose edge sides carry hieromorphisms.
inline CombinationReport check_combination_hypotheses(const GraphOfGroups& g, const CombinationOptions& opt = {}) {
  for (const auto& v : g.vertices) {
    if (!v.structure) throw Error(ErrorKind::MissingStructure, "vertex " + v.name + " has no structure");
  }
  for (const auto& e : g.edges) {
    if (!e.structure) throw Error(ErrorKind::MissingStructure, "edge " + e.name + " has no structure");
    for (const auto& s : e.side) {
      if (!s.map) throw Error(ErrorKind::MissingStructure, "edge " + e.name + " has no hieromorphism record");
    }
  }
  CombinationReport rep;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    for (std::size_t s = 0; s < 2; ++s) {
      auto side = detail::check_side(g, e, s, opt);
      if (!side.hqc_pass) rep.hqc.fail(side.hqc_witness);
      if (!side.full_pass) rep.full.fail(side.full_witness);
      if (!side.non_orthogonal) rep.non_orthogonal.fail(side.orthogonal_witness);
      rep.sides.push_back(std::move(side));
    }
  }
  // every edge is added by a move, so the lemma's condition is checked for all of them
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    auto sides = g.sides_at(v);
    for (std::size_t i = 0; i < sides.size(); ++i) {
      auto ti = detail::image_tags(g, sides[i].first, sides[i].second);
      for (std::size_t j = i + 1; j < sides.size(); ++j) {
        auto tj = detail::image_tags(g, sides[j].first, sides[j].second);
        for (const auto& t : ti) {
          if (tj.count(t)) {
            rep.bounded_supports.fail("edges " + g.edges[sides[i].first].name + " and " + g.edges[sides[j].first].name +
                                      " meet the index orbit " + t + " at " + g.vertices[v].name);
          }
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Main pipeline

struct PipelineOptions {
  /// Ball radius for new vertex groups.
  std::uint32_t radius = 5;
  std::size_t closure_budget = 3;
  /// Edge-group balls have radius factor * (largest endpoint radius), enough
  /// for every coset element of the ball to translate into the edge ball.
  std::uint32_t edge_radius_factor = 2;
  bool verify_augmented = true;
  std::size_t equivariance_samples = 100;
  std::uint64_t seed = 1;
  CombinationOptions combination{};
};

struct VertexStage {
  std::size_t vertex = 0;
  /// "factor-system", "augmented" or "unchanged".
  std::string step;
  std::optional<ClosureResult> closure;
  std::shared_ptr<const AugmentedStructure> augmented;
  std::optional<AugmentedVerification> verification;
  StructuralReport structural;
};

struct PipelineResult {
  GraphOfGroups graph;
  ObtainabilityReport obtainability;
  /// Set when obtainability fails; nothing after step 0 runs.
  bool refused = false;
  std::vector<VertexStage> stages;
  std::vector<StructuralReport> edge_structural;
  std::optional<CombinationReport> combination;

  bool pass() const {
    if (refused || !combination || !combination->pass()) return false;
    for (const auto& s : stages) {
      if (!s.structural.pass()) return false;
      if (s.verification && !s.verification->pass()) return false;
    }
    for (const auto& s : edge_structural) {
      if (!s.pass()) return false;
    }
    return true;
  }
};

namespace detail {

inline std::uint32_t ball_radius(const GogVertex& v, std::uint32_t fallback) {
  if (v.structure && v.structure->cayley) return v.structure->cayley->ball->radius;
  return fallback;
}

/// Structure index of the smallest factor member containing the identity and
/// every generator image; members follow the top element in family order.
inline std::size_t member_of_image(const FactorSystemCandidate& cand, const SubgroupSpec& h) {
  std::vector<Vertex> need{0};
  for (const auto& w : h.generators) {
    if (auto v = cand.ball->find(w)) need.push_back(*v);
  }
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cand.family.size(); ++i) {
    const auto& vs = cand.family[i].vertices;
    bool all = true;
    for (Vertex x : need) all = all && std::binary_search(vs.begin(), vs.end(), x);
    if (all && (!best || vs.size() < cand.family[*best].vertices.size())) best = i;
  }
  if (!best) throw Error(ErrorKind::MissingStructure, "no factor member carries the subgroup " + h.label);
  return *best + 1;
}

}  // namespace detail

/// Equips new vertices with factor-system structures, edges with structures on
/// their own Cayley balls, augments every base vertex over its new edge
/// subgroups, records the edge hieromorphisms and checks the combination
/// hypotheses. Refuses after step 0 when obtainability fails.
inline PipelineResult run_main_pipeline(const GraphOfGroups& input, const PipelineOptions& opt = {}) {
  PipelineResult res;
  res.graph = input;
  GraphOfGroups& g = res.graph;
  res.obtainability = check_hyperbolic_obtainable(g);
  if (!res.obtainability.pass()) {
    res.refused = true;
    return res;
  }

  // step 1: new vertices
  std::map<std::size_t, FactorSystemCandidate> factor;
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    auto& vx = g.vertices[v];
    if (vx.is_base()) continue;
    VertexStage st;
    st.vertex = v;
    st.step = "factor-system";
    st.closure = build_group_factor_closure(vx.group, g.incident_subgroups(v), opt.radius, opt.closure_budget);
    vx.structure = std::make_shared<const HHSInstance>(build_hhs_from_factor_system(st.closure->candidate));
    st.structural = check_structural(*vx.structure);
    factor.emplace(v, st.closure->candidate);
    res.stages.push_back(std::move(st));
  }

  // edge structures
  for (auto& e : g.edges) {
    std::uint32_t r = 0;
    for (const auto& s : e.side) r = std::max(r, detail::ball_radius(g.vertices[s.vertex], opt.radius));
    for (std::size_t s = 0; s < 2; ++s) {
      auto it = factor.find(e.side[s].vertex);
      if (it == factor.end()) continue;
      const auto& inst = *g.vertices[it->first].structure;
      auto u = detail::member_of_image(it->second, e.image(s, g.vertices[it->first].group));
      if (!inst.below(u).empty()) {
        throw Error(ErrorKind::MissingStructure, "edge " + e.name + ": the restricted structure has indices below " +
                                                     inst.indices[u].label + ", which are not realized on the edge ball");
      }
    }
    e.structure = std::make_shared<const HHSInstance>(cayley_instance(cayley_ball(e.group, opt.edge_radius_factor * r), e.name));
    res.edge_structural.push_back(check_structural(*e.structure));
  }

  // step 2: base vertices
  std::map<std::size_t, std::shared_ptr<const AugmentedStructure>> augmented;
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    auto& vx = g.vertices[v];
    if (!vx.is_base()) continue;
    if (!vx.structure) throw Error(ErrorKind::MissingStructure, "base vertex " + vx.name + " has no structure");
    VertexStage st;
    st.vertex = v;
    auto sides = g.sides_at(v);
    if (sides.empty()) {
      st.step = "unchanged";
    } else {
      st.step = "augmented";
      std::vector<SubgroupStructure> subs;
      for (auto [e, s] : sides) subs.push_back(SubgroupStructure{g.edges[e].image(s, vx.group), *g.edges[e].structure});
      auto aug = std::make_shared<AugmentedStructure>(build_augmented_structure(*vx.structure, subs));
      if (opt.verify_augmented) {
        st.verification = verify_augmented(*aug, opt.combination.checks, opt.equivariance_samples, opt.seed);
      }
      vx.structure = std::make_shared<const HHSInstance>(aug->result);
      st.augmented = aug;
      augmented.emplace(v, aug);
    }
    st.structural = check_structural(*vx.structure);
    res.stages.push_back(std::move(st));
  }
  std::sort(res.stages.begin(), res.stages.end(), [](const auto& a, const auto& b) { return a.vertex < b.vertex; });

  // hieromorphisms
  for (auto& e : g.edges) {
    const auto& es = *e.structure;
    const BallGraph& eb = *es.cayley->ball;
    for (std::size_t s = 0; s < 2; ++s) {
      const auto v = e.side[s].vertex;
      const auto& vs = *g.vertices[v].structure;
      const BallGraph& vb = *vs.cayley->ball;
      auto h = std::make_shared<Hieromorphism>();
      for (Vertex x = 0; x < eb.size(); ++x) {
        auto p = vb.find(map_word(eb.words[x], e.side[s].images, vb.model));
        h->point_map.push_back(p ? *p : kUnreached);
      }
      if (auto it = factor.find(v); it != factor.end()) {
        std::size_t u = detail::member_of_image(it->second, e.image(s, vb.model));
        h->index_map = {u};
        std::vector<Vertex> map;
        for (Vertex p : h->point_map) map.push_back(p == kUnreached ? kUnreached : vs.pi_of(u, p).front());
        h->space_map = {std::move(map)};
      } else {
        const auto& aug = *augmented.at(v);
        auto sides = g.sides_at(v);
        std::size_t which = std::find(sides.begin(), sides.end(), std::make_pair(static_cast<std::size_t>(&e - g.edges.data()), s)) - sides.begin();
        for (const auto& lv : aug.levels) {
          if (lv.subgroup != which || lv.coset.rep_vertex != 0) continue;
          for (std::size_t u = 0; u < es.size(); ++u) {
            h->index_map.push_back(lv.offset + u);
            std::vector<Vertex> id(es.space(u).vertex_count());
            for (Vertex c = 0; c < id.size(); ++c) id[c] = c;
            h->space_map.push_back(std::move(id));
          }
        }
      }
      e.side[s].map = std::move(h);
    }
  }

  res.combination = check_combination_hypotheses(g, opt.combination);
  return res;
}

// ---------------------------------------------------------------------------
// Finite tree of spaces

struct TreeOfSpaces {
  MetricGraph graph;
  /// Gog vertex of each glued ball copy, in creation order.
  std::vector<std::size_t> copies;
  std::size_t identified = 0;
};

/// Glues copies of vertex-group balls along edge-group cosets, breadth first
/// from the root vertex, up to the given depth. Vertex labels read
/// "<copy>|<word>".
inline TreeOfSpaces build_tree_of_spaces(const GraphOfGroups& g, std::uint32_t depth, std::uint32_t radius,
                                         std::size_t root = 0) {
  if (root >= g.vertices.size()) throw Error(ErrorKind::InvalidArgument, "root vertex out of range");
  std::vector<BallGraph> balls;
  for (const auto& v : g.vertices) balls.push_back(cayley_ball(v.group, radius));

  // per (edge, side): cosets of the image and preimages of its elements
  struct SideData {
    std::vector<CosetDescriptor> cosets;
    std::unordered_map<Word, Word, WordHash> preimage;
  };
  std::vector<std::array<SideData, 2>> data(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto eb = cayley_ball(g.edges[e].group, 2 * radius);
    for (std::size_t s = 0; s < 2; ++s) {
      const auto& vb = balls[g.edges[e].side[s].vertex];
      data[e][s].cosets = enumerate_cosets(vb, g.edges[e].image(s, vb.model));
      for (const auto& w : eb.words) data[e][s].preimage.emplace(map_word(w, g.edges[e].side[s].images, vb.model), w);
    }
  }

  struct Copy {
    std::size_t vertex;
    std::vector<Vertex> global;
    std::optional<std::pair<std::size_t, std::size_t>> parent;
    std::uint32_t depth;
    std::string name;
  };
  TreeOfSpaces out;
  std::vector<Copy> copies;
  std::vector<std::string> labels;
  auto fresh = [&](Copy& c) {
    const auto& b = balls[c.vertex];
    for (Vertex p = 0; p < b.size(); ++p) {
      if (c.global[p] != kUnreached) continue;
      c.global[p] = static_cast<Vertex>(labels.size());
      labels.push_back(c.name + "|" + b.label(p));
    }
    if (labels.size() > vertex_budget()) {
      throw Error(ErrorKind::BudgetExceeded, "tree of spaces exceeds " + std::to_string(vertex_budget()) + " vertices");
    }
  };
  copies.push_back(Copy{root, std::vector<Vertex>(balls[root].size(), kUnreached), std::nullopt, 0, g.vertices[root].name});
  fresh(copies[0]);
  for (std::size_t head = 0; head < copies.size(); ++head) {
    if (copies[head].depth >= depth) continue;
    const std::size_t v = copies[head].vertex;
    const auto& vb = balls[v];
    for (auto [e, s] : g.sides_at(v)) {
      const std::size_t o = 1 - s;
      const std::size_t w = g.edges[e].side[o].vertex;
      const auto& wb = balls[w];
      for (const auto& c : data[e][s].cosets) {
        if (copies[head].parent == std::make_pair(e, s) && c.rep_vertex == 0) continue;
        Copy child{w, std::vector<Vertex>(wb.size(), kUnreached), std::make_pair(e, o), copies[head].depth + 1,
                   copies[head].name + "/" + vb.label(c.rep_vertex) + ":" + g.edges[e].name};
        Word ginv = vb.model.normal_form(inverse(c.representative));
        for (Vertex p : c.members) {
          auto pre = data[e][s].preimage.find(vb.model.multiply(ginv, vb.words[p]));
          if (pre == data[e][s].preimage.end()) continue;
          auto q = wb.find(map_word(pre->second, g.edges[e].side[o].images, wb.model));
          if (!q) continue;
          child.global[*q] = copies[head].global[p];
          ++out.identified;
        }
        fresh(child);
        copies.push_back(std::move(child));
      }
    }
  }
  std::vector<Edge> edges;
  for (const auto& c : copies) {
    out.copies.push_back(c.vertex);
    for (auto [a, b] : balls[c.vertex].graph.edges()) edges.emplace_back(c.global[a], c.global[b]);
  }
  const std::size_t n = labels.size();
  out.graph = MetricGraph::from_edges(n, std::move(edges), std::move(labels), true);
  return out;
}

}  // namespace hhs
