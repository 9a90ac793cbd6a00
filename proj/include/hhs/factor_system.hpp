#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hhs/cayley.hpp"
#include "hhs/coneoff.hpp"
#include "hhs/hhs_instance.hpp"
#include "hhs/metric.hpp"

namespace hhs {

struct FactorSystemCandidate {
  std::shared_ptr<const MetricGraph> graph;
  std::vector<Subgraph> family;
  /// Radius of the finite model; 0 means the eccentricity of `center`.
  std::uint32_t radius = 0;
  Vertex center = 0;
  /// Set when the graph is a Cayley ball.
  std::shared_ptr<const BallGraph> ball;
};

struct FactorSystemOptions {
  /// Finite Hausdorff distance is read as distance at most
  /// max(1, floor(fraction * radius)).
  double hausdorff_fraction = 0.25;
  /// Defaults to 2 delta + 2 of the graph.
  std::optional<std::uint32_t> xi_candidate;
  FourPointBudget delta_budget{};
  std::size_t delta_exhaustive_vertices = 200;
};

inline std::uint32_t candidate_radius(const FactorSystemCandidate& c) {
  if (c.radius > 0) return c.radius;
  std::uint32_t ecc = 0;
  for (auto d : bfs(*c.graph, c.center)) {
    if (d != kUnreached) ecc = std::max(ecc, d);
  }
  return ecc;
}

/// Cosets of `subs` whose closest point to the identity lies within
/// `core_radius`, each cut to the ball. Pieces near the ball's boundary are
/// left out because their truncation makes them look bounded.
inline FactorSystemCandidate coset_candidate(const BallGraph& ball, const std::vector<SubgroupSpec>& subs,
                                             std::uint32_t core_radius) {
  FactorSystemCandidate cand;
  auto shared = std::make_shared<const BallGraph>(ball);
  cand.ball = shared;
  cand.graph = std::shared_ptr<const MetricGraph>(shared, &shared->graph);
  cand.radius = ball.radius;
  auto fam = coset_family(ball, subs);
  for (std::size_t i = 0; i < fam.members.size(); ++i) {
    if (ball.words[fam.cosets[i].rep_vertex].size() <= core_radius) cand.family.push_back(fam.members[i]);
  }
  return cand;
}

/// Default core radius for a ball of radius r.
inline std::uint32_t default_core_radius(std::uint32_t r) { return (r + 1) / 2; }

struct FactorSystemReport {
  std::size_t members = 0;
  /// Axiom 1: d_H <= K d_Gamma on every member.
  std::uint32_t K = 1;
  /// Axiom 2: largest diam p_{H1}(H2) among pairs within the candidate bound.
  std::uint32_t xi = 0;
  std::uint32_t xi_candidate = 0;
  /// Axiom 2: least B serving every pair over the candidate bound.
  std::uint32_t B = 0;
  /// Axiom 3 holds for every B strictly below this value.
  std::uint32_t B3_limit = kUnreached;
  /// Axiom 4: longest chain of strict inclusions, counted in members.
  std::uint32_t c = 0;
  std::uint32_t hausdorff_proxy = 1;
  HyperbolicityReport delta;
  std::array<bool, 5> pass{true, true, true, true, true};
  std::array<std::string, 5> witness;
  /// Row-major member x member table of diam p_{H1}(H2).
  std::vector<std::uint32_t> projection_diameter;
  /// Nested witnesses U for pairs over the candidate bound, keyed H1*m+H2.
  std::map<std::uint64_t, std::vector<std::uint32_t>> nested_witnesses;
  /// Axiom 5 uses the Hausdorff proxy, so its verdict is radius-limited.
  bool radius_limited = true;

  bool all_pass() const {
    for (bool p : pass) {
      if (!p) return false;
    }
    return true;
  }
};

namespace detail {

inline bool subset_of(std::span<const Vertex> a, std::span<const Vertex> b) {
  return a.size() <= b.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
}

/// Longest chain of strict inclusions among the members, counted in members.
inline std::uint32_t longest_chain(const std::vector<Subgraph>& fam) {
  const std::size_t m = fam.size();
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fam[a].vertices.size() < fam[b].vertices.size(); });
  std::vector<std::uint32_t> len(m, 1);
  std::uint32_t best = m ? 1 : 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const auto& a = fam[order[j]].vertices;
      const auto& b = fam[order[i]].vertices;
      if (a.size() < b.size() && subset_of(a, b)) len[order[i]] = std::max(len[order[i]], len[order[j]] + 1);
    }
    best = std::max(best, len[order[i]]);
  }
  return best;
}

inline std::string pair_label(const std::vector<Subgraph>& fam, std::size_t i, std::size_t j) {
  return fam[i].label + " / " + fam[j].label;
}

}  // namespace detail

inline FactorSystemReport verify_factor_system(const FactorSystemCandidate& cand, const FactorSystemOptions& opt = {}) {
  FactorSystemReport rep;
  const auto& g = *cand.graph;
  const auto& fam = cand.family;
  const std::size_t m = fam.size();
  rep.members = m;
  const std::uint32_t radius = candidate_radius(cand);
  rep.hausdorff_proxy =
      std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::floor(opt.hausdorff_fraction * radius)));

  DistanceMatrix dm(g);
  std::optional<FourPointBudget> budget;
  if (g.vertex_count() > opt.delta_exhaustive_vertices) budget = opt.delta_budget;
  rep.delta = four_point_delta(g, dm, budget);
  rep.xi_candidate = opt.xi_candidate ? *opt.xi_candidate : rep.delta.twice_delta + 2;

  // axiom 1
  for (std::size_t i = 0; i < m; ++i) {
    const auto& h = fam[i].vertices;
    if (h.size() == g.vertex_count()) {
      rep.pass[3] = false;
      rep.witness[3] = "member " + fam[i].label + " is the whole graph";
    }
    auto sub = induce(g, h);
    for (Vertex a = 0; a < sub.graph.vertex_count(); ++a) {
      auto d = bfs(sub.graph, a);
      for (Vertex b = a + 1; b < sub.graph.vertex_count(); ++b) {
        if (d[b] == kUnreached) {
          rep.pass[0] = false;
          rep.witness[0] = "member " + fam[i].label + " is disconnected";
          continue;
        }
        std::uint32_t amb = dm(sub.to_parent[a], sub.to_parent[b]);
        std::uint32_t k = (d[b] + amb - 1) / amb;
        if (k > rep.K) {
          rep.K = k;
          rep.witness[0] = fam[i].label + " at " + g.label(sub.to_parent[a]) + "," + g.label(sub.to_parent[b]);
        }
      }
    }
  }

  // pairwise projections
  rep.projection_diameter.assign(m * m, 0);
  std::vector<std::uint32_t> directed(m * m, 0);  // max over H2 of d(., H1), row H1
  std::vector<std::uint32_t> haus_to_h1(m * m, 0);
  std::vector<std::vector<std::uint32_t>> nested_in(m);  // U nested in H1 (vertex inclusion)
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t u = 0; u < m; ++u) {
      if (detail::subset_of(fam[u].vertices, fam[i].vertices)) nested_in[i].push_back(static_cast<std::uint32_t>(u));
    }
  }
  std::vector<std::map<std::uint64_t, std::vector<std::uint32_t>>> chunk_witness(worker_count() + 1);
  std::vector<std::vector<std::uint32_t>> chunk_b(worker_count() + 1);
  parallel_chunks(m, [&](std::size_t b, std::size_t e, std::size_t c) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& h1 = fam[i].vertices;
      auto field = nearest_points(g, h1);
      for (std::size_t j = 0; j < m; ++j) {
        std::vector<Vertex> p;
        std::uint32_t far = 0;
        for (Vertex v : fam[j].vertices) {
          auto near = field.nearest[v];
          p.insert(p.end(), near.begin(), near.end());
          far = std::max(far, field.distance[v]);
        }
        VertexSet ps = make_set(std::move(p));
        directed[i * m + j] = far;
        std::uint32_t diam = set_diameter(dm, ps);
        rep.projection_diameter[i * m + j] = diam;
        auto haus_p = [&](std::span<const Vertex> target) {
          std::uint32_t worst = 0;
          for (Vertex u : target) {
            std::uint32_t best = kUnreached;
            for (Vertex q : ps) best = std::min(best, dm(u, q));
            worst = std::max(worst, best);
          }
          for (Vertex q : ps) {
            std::uint32_t best = kUnreached;
            for (Vertex u : target) best = std::min(best, dm(u, q));
            worst = std::max(worst, best);
          }
          return worst;
        };
        haus_to_h1[i * m + j] = haus_p(h1);
        if (i != j && diam > rep.xi_candidate) {
          std::vector<std::uint32_t> wit;
          std::uint32_t need = kUnreached;
          for (auto u : nested_in[i]) {
            wit.push_back(u);
            need = std::min(need, haus_p(fam[u].vertices));
          }
          chunk_witness[c][static_cast<std::uint64_t>(i) * m + j] = std::move(wit);
          chunk_b[c].push_back(need);
        }
      }
    }
  });

  for (auto& cw : chunk_witness) rep.nested_witnesses.merge(cw);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      auto diam = rep.projection_diameter[i * m + j];
      if (diam <= rep.xi_candidate) {
        rep.xi = std::max(rep.xi, diam);
      }
    }
  }
  for (const auto& cb : chunk_b) {
    for (auto need : cb) {
      if (need == kUnreached) {
        rep.pass[1] = false;
      } else {
        rep.B = std::max(rep.B, need);
      }
    }
  }
  for (const auto& [k, wit] : rep.nested_witnesses) {
    if (wit.empty() && rep.witness[1].empty()) {
      rep.witness[1] = "no nested witness for " + detail::pair_label(fam, k / m, k % m) + ", projection diameter " +
                       std::to_string(rep.projection_diameter[k]);
    }
  }

  // axiom 3
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j || detail::subset_of(fam[i].vertices, fam[j].vertices)) continue;
      if (haus_to_h1[i * m + j] < rep.B3_limit) {
        rep.B3_limit = haus_to_h1[i * m + j];
        rep.witness[2] = detail::pair_label(fam, i, j);
      }
    }
  }
  if (rep.B >= rep.B3_limit) {
    rep.pass[2] = false;
    rep.witness[2] = "projection of " + rep.witness[2] + " within B of the first member";
  }

  // axiom 4
  rep.c = detail::longest_chain(fam);

  // axiom 5
  for (std::size_t i = 0; i < m && rep.pass[4]; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (fam[i].vertices == fam[j].vertices) continue;
      std::uint32_t h = std::max(directed[i * m + j], directed[j * m + i]);
      if (h <= rep.hausdorff_proxy) {
        rep.pass[4] = false;
        rep.witness[4] = detail::pair_label(fam, i, j) + " at Hausdorff distance " + std::to_string(h);
        break;
      }
    }
  }
  return rep;
}

struct SimpleFamilyRow {
  std::uint32_t epsilon = 0;
  std::uint32_t R = 0;
  std::size_t h1 = 0, h2 = 0;
};

struct SimpleFamilyReport {
  std::vector<SimpleFamilyRow> rows;
  /// Every member's diameter is at least radius minus its distance from the center.
  bool unbounded_proxy = true;
  std::vector<std::string> violations;
};

inline SimpleFamilyReport simple_family_check(const FactorSystemCandidate& cand, std::vector<std::uint32_t> eps_grid) {
  SimpleFamilyReport rep;
  const auto& g = *cand.graph;
  const auto& fam = cand.family;
  const std::size_t m = fam.size();
  DistanceMatrix dm(g);
  std::sort(eps_grid.begin(), eps_grid.end());
  for (auto e : eps_grid) rep.rows.push_back({e, 0, 0, 0});
  auto from_center = bfs(g, cand.center);
  const std::uint32_t radius = candidate_radius(cand);
  for (std::size_t i = 0; i < m; ++i) {
    std::uint32_t access = kUnreached;
    for (Vertex v : fam[i].vertices) access = std::min(access, from_center[v]);
    std::uint32_t diam = set_diameter(dm, fam[i].vertices);
    if (access != kUnreached && access <= radius && diam < radius - access) {
      rep.unbounded_proxy = false;
      if (rep.violations.size() < 16) {
        rep.violations.push_back(fam[i].label + " has diameter " + std::to_string(diam));
      }
    }
  }
  std::vector<std::vector<SimpleFamilyRow>> chunk_rows(worker_count() + 1, rep.rows);
  parallel_chunks(m, [&](std::size_t b, std::size_t e, std::size_t c) {
    auto& rows = chunk_rows[c];
    for (std::size_t i = b; i < e; ++i) {
      auto d = bfs(g, fam[i].vertices);
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j || fam[i].vertices == fam[j].vertices) continue;
        for (auto& row : rows) {
          std::vector<Vertex> inter;
          for (Vertex v : fam[j].vertices) {
            if (d[v] <= row.epsilon) inter.push_back(v);
          }
          std::uint32_t diam = set_diameter(dm, inter);
          if (diam > row.R) row = SimpleFamilyRow{row.epsilon, diam, i, j};
        }
      }
    }
  });
  for (const auto& rows : chunk_rows) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].R > rep.rows[k].R) rep.rows[k] = rows[k];
    }
  }
  return rep;
}

/// Builds the structure whose index set is the family plus the whole graph
/// (index 0). CU is U coned off over the members strictly inside it, every
/// projection is the closest-point projection in the graph, nesting is
/// inclusion, and there is no orthogonality.
inline HHSInstance build_hhs_from_factor_system(const FactorSystemCandidate& cand, bool force = false,
                                                const FactorSystemOptions& opt = {}) {
  std::optional<FactorSystemReport> report;
  if (!cand.family.empty()) {
    report = verify_factor_system(cand, opt);
    if (!force && !report->all_pass()) {
      std::string why;
      for (std::size_t a = 0; a < 5; ++a) {
        if (!report->pass[a]) why += " axiom " + std::to_string(a + 1) + ": " + report->witness[a] + ";";
      }
      throw Error(ErrorKind::FactorSystemViolated, "candidate is not a factor system:" + why);
    }
  }
  const auto& g = *cand.graph;
  const auto& fam = cand.family;
  const std::size_t m = fam.size(), n = m + 1;
  const Vertex nx = static_cast<Vertex>(g.vertex_count());

  HHSInstance inst;
  inst.total = cand.graph;
  inst.top = 0;
  inst.relations.assign(n * n, Relation::Transverse);
  for (std::size_t u = 0; u < n; ++u) inst.relations[u * n + u] = Relation::Equal;

  // index 0: the whole graph coned over every member
  auto top_cone = build_coneoff(g, fam);
  auto top_space = std::make_shared<const MetricGraph>(top_cone.coned);
  inst.indices.push_back(IndexElement{"Gamma", top_space, "factor-top", "S"});
  SetTable id;
  for (Vertex x = 0; x < nx; ++x) id.push_back(std::span<const Vertex>(&x, 1));
  inst.pi.push_back(std::move(id));

  std::vector<InducedSubgraph> local(m);
  std::vector<NearestField> fields(m);
  for (std::size_t i = 0; i < m; ++i) {
    local[i] = induce(g, fam[i].vertices);
    std::vector<Subgraph> inner;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i || fam[j].vertices.size() >= fam[i].vertices.size() ||
          !detail::subset_of(fam[j].vertices, fam[i].vertices)) {
        continue;
      }
      std::vector<Vertex> lv;
      for (Vertex v : fam[j].vertices) lv.push_back(local[i].to_local.at(v));
      inner.push_back(Subgraph{make_set(std::move(lv)), fam[j].label});
    }
    auto space = inner.empty() ? std::make_shared<const MetricGraph>(local[i].graph)
                               : std::make_shared<const MetricGraph>(build_coneoff(local[i].graph, inner).coned);
    std::string tag = fam[i].label;
    if (auto star = tag.find('*'); star != std::string::npos) tag = tag.substr(star + 1);
    inst.indices.push_back(IndexElement{fam[i].label, space, "factor", tag});
    fields[i] = nearest_points(g, fam[i].vertices);
    SetTable t;
    for (Vertex x = 0; x < nx; ++x) {
      std::vector<Vertex> row;
      for (Vertex v : fields[i].nearest[x]) row.push_back(local[i].to_local.at(v));
      t.push_back(make_set(std::move(row)));
    }
    inst.pi.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < m; ++i) {
    inst.set_relation(i + 1, 0, Relation::Nested);
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j && fam[i].vertices.size() < fam[j].vertices.size() &&
          detail::subset_of(fam[i].vertices, fam[j].vertices)) {
        inst.set_relation(i + 1, j + 1, Relation::Nested);
      }
    }
  }

  inst.rho_up.assign(n * n, {});
  for (std::size_t i = 0; i < m; ++i) {
    inst.rho_up[(i + 1) * n + 0] = fam[i].vertices;
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      Relation r = inst.rel(i + 1, j + 1);
      if (r != Relation::Nested && r != Relation::Transverse) continue;
      std::vector<Vertex> img;
      for (Vertex v : fam[i].vertices) {
        auto p = inst.pi_of(j + 1, v);
        img.insert(img.end(), p.begin(), p.end());
      }
      inst.rho_up[(i + 1) * n + j + 1] = make_set(std::move(img));
    }
  }

  // downward maps: a vertex of CW is a graph vertex (or an apex), sent by pi_V
  for (std::size_t w = 0; w < n; ++w) {
    const MetricGraph& cw = *inst.indices[w].space;
    for (std::size_t v = 1; v < n; ++v) {
      if (!inst.properly_nested(v, w)) continue;
      SetTable t;
      for (Vertex c = 0; c < cw.vertex_count(); ++c) {
        Vertex x;
        if (w == 0) {
          x = top_cone.is_apex(c) ? fam[top_cone.apex_member(c)].vertices.front() : c;
        } else {
          x = c < local[w - 1].to_parent.size() ? local[w - 1].to_parent[c] : fam[w - 1].vertices.front();
        }
        t.push_back(inst.pi_of(v, x));
      }
      inst.rho_down.emplace(inst.key(w, v), std::move(t));
    }
  }

  inst.xi = report ? report->xi : 0;
  if (cand.ball) inst.cayley = CayleyTag{cand.ball, false};
  inst.finalize();
  for (std::size_t i = 0; i < m; ++i) inst.xi = std::max(inst.xi, inst.set_diam(0, inst.rho(i + 1, 0)));
  for (std::size_t u = 0; u < n; ++u) {
    for (Vertex x = 0; x < nx; ++x) inst.xi = std::max(inst.xi, inst.set_diam(u, inst.pi_of(u, x)));
  }
  return inst;
}

struct ClosureResult {
  FactorSystemCandidate candidate;
  /// Rounds that added at least one member.
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t merged = 0;
  std::size_t added = 0;
  std::uint32_t xi_candidate = 0;
  /// Quasi-convexity constant of each subgroup's identity coset piece.
  std::vector<std::uint32_t> quasiconvexity;
};

namespace detail {

inline std::uint32_t hausdorff_with(const MetricGraph& g, std::span<const Vertex> a, std::span<const Vertex> b) {
  return hausdorff_distance(g, a, b);
}

/// Appends `s` unless a member lies within Hausdorff distance 1 of it.
inline bool add_unless_close(const MetricGraph& g, std::vector<Subgraph>& fam, Subgraph s) {
  for (const auto& f : fam) {
    if (hausdorff_with(g, f.vertices, s.vertices) <= 1) return false;
  }
  fam.push_back(std::move(s));
  return true;
}

/// The set together with geodesics of the induced member joining its points.
inline VertexSet hull_within(const MetricGraph& g, std::span<const Vertex> member, const VertexSet& pts) {
  auto sub = induce(g, member);
  std::vector<Vertex> out(pts.begin(), pts.end());
  auto d = bfs(sub.graph, sub.to_local.at(pts.front()));
  for (Vertex p : pts) {
    auto path = geodesic_along(sub.graph, sub.to_local.at(p), d);
    for (Vertex v : path.vertices) out.push_back(sub.to_parent[v]);
  }
  return make_set(std::move(out));
}

}  // namespace detail

/// Projection closure of the cosets of `subs`: members are identified when
/// within Hausdorff distance 1, and each round adds the projections
/// p_{H1}(H2) whose diameter exceeds the candidate bound.
inline ClosureResult build_group_factor_closure(const GroupModel& m, const std::vector<SubgroupSpec>& subs,
                                                std::uint32_t radius, std::size_t budget,
                                                std::optional<std::uint32_t> core_radius = std::nullopt,
                                                const FactorSystemOptions& opt = {}) {
  ClosureResult res;
  auto ball = cayley_ball(m, radius);
  auto raw = coset_candidate(ball, subs, core_radius ? *core_radius : default_core_radius(radius));
  const auto& g = *raw.graph;
  res.candidate = raw;
  res.candidate.family.clear();
  for (auto& s : raw.family) {
    if (!detail::add_unless_close(g, res.candidate.family, s)) ++res.merged;
  }
  for (const auto& h : subs) {
    auto cosets = enumerate_cosets(ball, h);
    for (const auto& c : cosets) {
      if (c.rep_vertex != 0) continue;
      auto piece = coset_subgraph(ball, c);
      res.quasiconvexity.push_back(quasiconvexity_constant(g, piece.subgraph.vertices).q);
    }
  }
  if (opt.xi_candidate) {
    res.xi_candidate = *opt.xi_candidate;
  } else {
    std::optional<FourPointBudget> b;
    if (g.vertex_count() > opt.delta_exhaustive_vertices) b = opt.delta_budget;
    res.xi_candidate = four_point_delta(g, b).twice_delta + 2;
  }
  DistanceMatrix dm(g);
  for (std::size_t round = 0; round < budget; ++round) {
    auto& fam = res.candidate.family;
    std::vector<Subgraph> fresh;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      auto field = nearest_points(g, fam[i].vertices);
      for (std::size_t j = 0; j < fam.size(); ++j) {
        if (i == j) continue;
        std::vector<Vertex> p;
        for (Vertex v : fam[j].vertices) {
          auto near = field.nearest[v];
          p.insert(p.end(), near.begin(), near.end());
        }
        VertexSet ps = make_set(std::move(p));
        if (set_diameter(dm, ps) <= res.xi_candidate) continue;
        Subgraph s{detail::hull_within(g, fam[i].vertices, ps), "p(" + fam[i].label + "," + fam[j].label + ")"};
        std::vector<Subgraph> both = fam;
        both.insert(both.end(), fresh.begin(), fresh.end());
        if (detail::add_unless_close(g, both, s)) fresh.push_back(std::move(s));
      }
    }
    if (fresh.empty()) {
      res.converged = true;
      return res;
    }
    res.added += fresh.size();
    ++res.iterations;
    fam.insert(fam.end(), fresh.begin(), fresh.end());
  }
  return res;
}

}  // namespace hhs
