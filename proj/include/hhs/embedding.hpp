#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hhs/cayley.hpp"
#include "hhs/coneoff.hpp"
#include "hhs/factor_system.hpp"
#include "hhs/hhs_checks.hpp"
#include "hhs/hhs_instance.hpp"

namespace hhs {

// ---------------------------------------------------------------------------
// Relative metric

struct RelativeMetricTable {
  SubgroupSpec subgroup;
  std::shared_ptr<const BallGraph> ball;
  /// Ball over T coned over every coset of the subgroup.
  std::shared_ptr<const ConedGraph> coned;
  /// Subgroup elements of the ball, as ball vertices in id order.
  std::vector<Vertex> elements;
  /// Row-major |elements|^2; kUnreached when no path avoids E(h) inside the ball.
  std::vector<std::uint32_t> table;

  std::uint32_t operator()(std::size_t i, std::size_t j) const { return table[i * elements.size() + j]; }
  std::size_t unreached() const { return static_cast<std::size_t>(std::count(table.begin(), table.end(), kUnreached)); }

  /// n -> #{h : d(1, h) <= n} for n up to the largest finite value.
  std::vector<std::uint64_t> profile() const {
    std::uint32_t top = 0;
    for (std::size_t j = 0; j < elements.size(); ++j) {
      if ((*this)(0, j) != kUnreached) top = std::max(top, (*this)(0, j));
    }
    std::vector<std::uint64_t> out(top + 1, 0);
    for (std::size_t j = 0; j < elements.size(); ++j) {
      auto d = (*this)(0, j);
      if (d == kUnreached) continue;
      for (std::uint32_t n = d; n <= top; ++n) ++out[n];
    }
    return out;
  }
};

inline RelativeMetricTable relative_metric(const GroupModel& m, const std::vector<Word>& gens, const SubgroupSpec& h,
                                           std::uint32_t r) {
  RelativeMetricTable out;
  out.subgroup = h;
  auto ball = std::make_shared<const BallGraph>(cayley_ball(m, gens, r));
  out.ball = ball;
  auto fam = coset_family(*ball, {h});
  auto coned = std::make_shared<ConedGraph>(build_coneoff(ball->graph, fam.members));
  out.coned = coned;
  std::optional<Vertex> h_apex;
  for (std::size_t i = 0; i < fam.cosets.size(); ++i) {
    if (fam.cosets[i].rep_vertex != 0) continue;
    out.elements = fam.cosets[i].members;
    h_apex = coned->apex[i];
  }
  std::vector<char> in_h(coned->coned.vertex_count(), 0);
  for (Vertex v : out.elements) in_h[v] = 1;
  // an apex star stands in for the clique on H and is removed with it
  if (h_apex) in_h[*h_apex] = 1;
  std::vector<Edge> kept;
  for (auto [u, v] : coned->coned.edges()) {
    if (!(in_h[u] && in_h[v])) kept.emplace_back(u, v);
  }
  auto punctured = MetricGraph::from_edges(coned->coned.vertex_count(), std::move(kept));
  const std::size_t k = out.elements.size();
  out.table.assign(k * k, kUnreached);
  parallel_for(k, [&](std::size_t i) {
    auto d = bfs(punctured, out.elements[i]);
    for (std::size_t j = 0; j < k; ++j) out.table[i * k + j] = d[out.elements[j]];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Hyperbolically embedded subgroups

struct SubgroupEmbeddingReport {
  SubgroupSpec subgroup;
  /// Four-point delta of the ball coned over this subgroup's cosets.
  HyperbolicityReport delta, delta_smaller;
  std::vector<std::uint64_t> profile, profile_smaller;
  std::size_t unreached = 0;
  /// Ratio bound between the coset-piece metric and d_T on the subgroup.
  std::uint32_t qi_K = 1, qi_K_smaller = 1;

  bool hyperbolic() const { return delta.twice_delta == delta_smaller.twice_delta; }
  /// Every d-ball is finite and the profile does not grow with the radius.
  bool proper() const { return profile == profile_smaller; }
  bool qi_embedded() const { return qi_K == qi_K_smaller; }
};

struct SeparationReport {
  std::vector<SimpleFamilyRow> rows, rows_smaller;
  bool pass = true;
  /// First pair whose overlap grows with the radius: (g, i, j) as labels.
  std::string witness;
};

struct HHEmbeddingWitness {
  std::vector<Word> T;
  std::uint32_t radius = 0, smaller_radius = 0;
  /// Ball over T coned over the cosets of every subgroup.
  std::shared_ptr<const ConedGraph> coned;
  HyperbolicityReport coned_delta;
  std::vector<SubgroupEmbeddingReport> subgroups;
  SeparationReport separation;
  /// Verdicts compare two radii; they cannot certify the infinite group.
  bool radius_limited = true;

  bool pass() const {
    for (const auto& s : subgroups) {
      if (!s.hyperbolic() || !s.proper() || !s.qi_embedded()) return false;
    }
    return separation.pass;
  }
};

namespace detail {

inline HyperbolicityReport coned_delta(const MetricGraph& g, std::size_t exhaustive_limit, FourPointBudget budget) {
  std::optional<FourPointBudget> b;
  if (g.vertex_count() > exhaustive_limit) b = budget;
  return four_point_delta(g, b);
}

/// Ratio bound of the identity coset piece's own metric against d_T.
inline std::uint32_t piece_qi_constant(const BallGraph& ball, const SubgroupSpec& h) {
  for (const auto& c : enumerate_cosets(ball, h)) {
    if (c.rep_vertex != 0) continue;
    FactorSystemCandidate cand;
    cand.graph = std::shared_ptr<const MetricGraph>(std::shared_ptr<const MetricGraph>{}, &ball.graph);
    cand.family = {coset_subgraph(ball, c).subgraph};
    cand.radius = ball.radius;
    FactorSystemOptions opt;
    opt.xi_candidate = 0;
    return verify_factor_system(cand, opt).K;
  }
  return 1;
}

}  // namespace detail

inline HHEmbeddingWitness check_hyperbolically_embedded(const GroupModel& m, const std::vector<Word>& T,
                                                        const std::vector<SubgroupSpec>& subs, std::uint32_t r,
                                                        std::vector<std::uint32_t> eps_grid = {0, 1, 2},
                                                        FourPointBudget budget = {}) {
  HHEmbeddingWitness w;
  w.T = T;
  w.radius = r;
  w.smaller_radius = r > 2 ? r - 2 : 1;
  const std::size_t exhaustive_limit = 200;
  auto big = std::make_shared<const BallGraph>(cayley_ball(m, T, r));
  auto small = cayley_ball(m, T, w.smaller_radius);
  auto all_big = coset_family(*big, subs);
  w.coned = std::make_shared<const ConedGraph>(build_coneoff(big->graph, all_big.members));
  if (subs.empty()) return w;
  w.coned_delta = detail::coned_delta(w.coned->coned, exhaustive_limit, budget);

  for (const auto& h : subs) {
    SubgroupEmbeddingReport rep;
    rep.subgroup = h;
    auto rel = relative_metric(m, T, h, r);
    auto rel_small = relative_metric(m, T, h, w.smaller_radius);
    rep.delta = detail::coned_delta(rel.coned->coned, exhaustive_limit, budget);
    rep.delta_smaller = detail::coned_delta(rel_small.coned->coned, exhaustive_limit, budget);
    rep.profile = rel.profile();
    rep.profile_smaller = rel_small.profile();
    rep.unreached = rel.unreached();
    rep.qi_K = detail::piece_qi_constant(*big, h);
    rep.qi_K_smaller = detail::piece_qi_constant(small, h);
    w.subgroups.push_back(std::move(rep));
  }

  auto separation_rows = [&](const BallGraph& ball, std::vector<Subgraph>* members) {
    FactorSystemCandidate cand;
    cand.graph = std::shared_ptr<const MetricGraph>(std::shared_ptr<const MetricGraph>{}, &ball.graph);
    cand.family = coset_family(ball, subs).members;
    cand.radius = ball.radius;
    if (members) *members = cand.family;
    return simple_family_check(cand, eps_grid).rows;
  };
  std::vector<Subgraph> members;
  w.separation.rows = separation_rows(*big, &members);
  w.separation.rows_smaller = separation_rows(small, nullptr);
  for (std::size_t k = 0; k < w.separation.rows.size(); ++k) {
    const auto& row = w.separation.rows[k];
    if (row.R != w.separation.rows_smaller[k].R) {
      w.separation.pass = false;
      const auto& lab = members[row.h2].label;
      auto star = lab.find('*');
      w.separation.witness = "epsilon " + std::to_string(row.epsilon) + ": g = " + lab.substr(0, star) + ", i = " +
                             members[row.h1].label + ", j = " + lab + ", overlap diameter " + std::to_string(row.R) +
                             " at radius " + std::to_string(r) + ", " + std::to_string(w.separation.rows_smaller[k].R) +
                             " at radius " + std::to_string(w.smaller_radius);
      break;
    }
  }
  return w;
}

struct HHEmbeddedReport {
  /// T intersected with each subgroup generates its ball elements.
  bool generated = true;
  std::string generation_witness;
  /// CS is the Cayley graph over T and pi_S is the inclusion.
  bool cayley_top = true;
  std::string top_witness;
  HHEmbeddingWitness embedding;

  bool pass() const { return generated && cayley_top && embedding.pass(); }
};

inline HHEmbeddedReport check_hh_embedded(const HHSInstance& base, const std::vector<SubgroupSpec>& subs) {
  if (!base.cayley || !base.cayley->top_is_cayley) {
    throw Error(ErrorKind::StructureMismatch, "base structure does not declare CS as a Cayley graph");
  }
  const BallGraph& ball = *base.cayley->ball;
  HHEmbeddedReport rep;
  if (subs.empty()) return rep;

  for (Vertex x = 0; x < base.X().vertex_count() && rep.cayley_top; ++x) {
    auto p = base.pi_of(base.top, x);
    if (p.size() != 1 || p[0] != x) {
      rep.cayley_top = false;
      rep.top_witness = "pi_S is not the inclusion at " + base.X().label(x);
    }
  }
  if (rep.cayley_top && !(base.space(base.top) == base.X())) {
    rep.cayley_top = false;
    rep.top_witness = "CS differs from the Cayley graph";
  }

  for (const auto& h : subs) {
    if (!rep.generated) break;
    SubgroupOracle oracle(ball.model, h);
    std::vector<Word> steps;
    for (const auto& t : ball.generators) {
      if (oracle.contains(t).member) {
        steps.push_back(t);
        steps.push_back(ball.model.normal_form(inverse(t)));
      }
    }
    std::vector<char> seen(ball.size(), 0);
    std::vector<Vertex> queue{0};
    seen[0] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (const auto& s : steps) {
        auto it = ball.index.find(ball.model.multiply(ball.words[queue[head]], s));
        if (it != ball.index.end() && !seen[it->second]) {
          seen[it->second] = 1;
          queue.push_back(it->second);
        }
      }
    }
    for (const auto& c : enumerate_cosets(ball, h)) {
      if (c.rep_vertex != 0) continue;
      for (Vertex v : c.members) {
        if (!seen[v]) {
          rep.generated = false;
          rep.generation_witness = h.label + " element " + ball.graph.label(v) + " is not reached over T";
          break;
        }
      }
    }
  }
  rep.embedding = check_hyperbolically_embedded(ball.model, ball.generators, subs, ball.radius);
  return rep;
}

// ---------------------------------------------------------------------------
// Augmented structure

struct SubgroupStructure {
  SubgroupSpec subgroup;
  /// Structure on the subgroup; its X must be a Cayley ball whose k-th
  /// generator stands for the subgroup's k-th generator.
  HHSInstance structure;
};

/// One copy of a subgroup's index set, attached to a coset.
struct LevelSet {
  std::size_t subgroup = 0;
  CosetDescriptor coset;
  /// Index of the copy of the subgroup structure's index 0.
  std::size_t offset = 0;
  /// Subgroup-structure vertex of g^-1 p for each coset member p.
  std::vector<Vertex> member_h;
};

struct AugmentedStructure {
  HHSInstance base;
  std::vector<SubgroupStructure> subgroups;
  HHSInstance result;
  std::shared_ptr<const ConedGraph> coned_top;
  std::vector<LevelSet> levels;
  /// Per subgroup: ambient element of each subgroup-structure vertex, and back.
  std::vector<std::vector<Word>> ambient_of;
  std::vector<std::unordered_map<Word, Vertex, WordHash>> vertex_of;
  /// Per subgroup and ball vertex: the level containing its coset.
  std::vector<std::vector<std::size_t>> level_of;
  /// Cross rho entries left empty because a composite was empty in the ball.
  std::size_t unreached_rho = 0;

  std::size_t base_size() const { return base.size(); }
};

namespace detail {

inline Word substitute(const Word& w, const SubgroupSpec& h, const GroupModel& m) {
  Word out;
  for (Letter l : w) {
    const Word& g = h.generators.at(generator_of(l));
    Word piece = (l & 1) ? m.normal_form(inverse(g)) : g;
    out.insert(out.end(), piece.begin(), piece.end());
  }
  return m.normal_form(out);
}

inline std::string level_label(const std::string& u, const BallGraph& ball, const CosetDescriptor& c) {
  return u + "@" + coset_label(ball, c);
}

}  // namespace detail

/// Index set: the base indices in their order, then one copy of each
/// subgroup structure per coset meeting the ball. CS becomes the base CS
/// coned over every coset; copies keep their spaces; pi of a copy is the
/// subgroup projection composed with the closest-point map to the coset.
inline AugmentedStructure build_augmented_structure(const HHSInstance& base, const std::vector<SubgroupStructure>& subs,
                                                    bool force = false) {
  if (!base.cayley) throw Error(ErrorKind::MissingStructure, "base structure carries no Cayley ball");
  const BallGraph& ball = *base.cayley->ball;
  const GroupModel& m = ball.model;
  const Vertex nx = static_cast<Vertex>(base.X().vertex_count());
  for (Vertex x = 0; x < nx; ++x) {
    auto p = base.pi_of(base.top, x);
    if (p.size() != 1 || p[0] != x) {
      throw Error(ErrorKind::StructureMismatch, "pi_S of the base is not the inclusion at " + base.X().label(x));
    }
  }
  if (!force && !subs.empty()) {
    std::vector<SubgroupSpec> specs;
    for (const auto& s : subs) specs.push_back(s.subgroup);
    auto check = check_hh_embedded(base, specs);
    if (!check.pass()) throw Error(ErrorKind::EmbeddingViolated, "subgroups are not hierarchically hyperbolically embedded");
  }

  AugmentedStructure aug;
  aug.base = base;
  aug.subgroups = subs;
  const std::size_t nb = base.size();

  // levels and identifications
  std::vector<Subgraph> pieces;
  std::size_t n = nb;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& hs = subs[i].structure;
    if (!hs.cayley) throw Error(ErrorKind::MissingStructure, "subgroup structure carries no Cayley ball");
    const BallGraph& hb = *hs.cayley->ball;
    if (hb.model.rank() != subs[i].subgroup.generators.size()) {
      throw Error(ErrorKind::StructureMismatch, "subgroup structure rank differs from the generator count");
    }
    aug.ambient_of.emplace_back();
    aug.vertex_of.emplace_back();
    for (Vertex v = 0; v < hb.size(); ++v) {
      Word w = detail::substitute(hb.words[v], subs[i].subgroup, m);
      aug.vertex_of[i].emplace(w, v);
      aug.ambient_of[i].push_back(std::move(w));
    }
    aug.level_of.emplace_back(nx, 0);
    for (auto& c : enumerate_cosets(ball, subs[i].subgroup)) {
      LevelSet lv;
      lv.subgroup = i;
      lv.offset = n;
      Word ginv = m.normal_form(inverse(c.representative));
      for (Vertex p : c.members) {
        auto it = aug.vertex_of[i].find(m.multiply(ginv, ball.words[p]));
        if (it == aug.vertex_of[i].end()) {
          throw Error(ErrorKind::TruncatedPiece, "subgroup structure ball misses " + m.format(m.multiply(ginv, ball.words[p])) +
                                                     "; build it with a larger radius");
        }
        lv.member_h.push_back(it->second);
        aug.level_of[i][p] = aug.levels.size();
      }
      pieces.push_back(coset_subgraph(ball, c).subgraph);
      lv.coset = std::move(c);
      n += hs.size();
      aug.levels.push_back(std::move(lv));
    }
  }

  HHSInstance& res = aug.result;
  res.total = base.total;
  res.top = base.top;
  res.cayley = base.cayley;
  res.cayley->top_is_cayley = base.cayley->top_is_cayley && subs.empty();
  auto coned = std::make_shared<const ConedGraph>(build_coneoff(base.space(base.top), pieces));
  aug.coned_top = coned;
  SpacePtr top_space = subs.empty() ? base.indices[base.top].space : std::make_shared<const MetricGraph>(coned->coned);

  res.indices = base.indices;
  for (auto& e : res.indices) e.provenance = "old";
  res.indices[base.top].space = top_space;
  res.relations.assign(n * n, Relation::Transverse);
  for (std::size_t u = 0; u < nb; ++u) {
    for (std::size_t v = 0; v < nb; ++v) res.relations[u * n + v] = base.rel(u, v);
  }
  res.pi = base.pi;
  for (const auto& lv : aug.levels) {
    const auto& hs = subs[lv.subgroup].structure;
    const std::size_t hn = hs.size();
    for (std::size_t u = 0; u < hn; ++u) {
      const auto& e = hs.indices[u];
      res.indices.push_back(IndexElement{detail::level_label(e.label, ball, lv.coset), e.space,
                                         "coset-level:" + std::to_string(lv.subgroup),
                                         subs[lv.subgroup].subgroup.label + ":" + e.label});
      for (std::size_t v = 0; v < hn; ++v) res.relations[(lv.offset + u) * n + lv.offset + v] = hs.rel(u, v);
      res.relations[(lv.offset + u) * n + base.top] = Relation::Nested;
      res.relations[base.top * n + lv.offset + u] = Relation::Contains;
    }
    auto field = nearest_points(base.X(), lv.coset.members);
    for (std::size_t u = 0; u < hn; ++u) {
      SetTable t;
      for (Vertex x = 0; x < nx; ++x) {
        std::vector<Vertex> row;
        for (Vertex p : field.nearest[x]) {
          auto pos = std::lower_bound(lv.coset.members.begin(), lv.coset.members.end(), p) - lv.coset.members.begin();
          auto img = hs.pi_of(u, lv.member_h[pos]);
          row.insert(row.end(), img.begin(), img.end());
        }
        t.push_back(make_set(std::move(row)));
      }
      res.pi.push_back(std::move(t));
    }
  }

  // rho
  res.rho_up.assign(n * n, {});
  for (std::size_t u = 0; u < nb; ++u) {
    for (std::size_t v = 0; v < nb; ++v) res.rho_up[u * n + v] = base.rho(u, v);
  }
  // Ambient support of rho^U_{S_U} for every level index.
  std::vector<VertexSet> support(n);
  for (const auto& lv : aug.levels) {
    const auto& hs = subs[lv.subgroup].structure;
    const bool h_cayley_top = hs.cayley && hs.cayley->top_is_cayley;
    const auto& hb = *hs.cayley->ball;
    for (std::size_t u = 0; u < hs.size(); ++u) {
      std::vector<Vertex> s;
      if (u == hs.top || !h_cayley_top) {
        s = lv.coset.members;
      } else {
        for (Vertex hv : hs.rho(u, hs.top)) {
          if (hv >= hb.size()) continue;
          auto it = ball.index.find(m.multiply(lv.coset.representative, aug.ambient_of[lv.subgroup][hv]));
          if (it != ball.index.end()) s.push_back(it->second);
        }
      }
      support[lv.offset + u] = make_set(std::move(s));
    }
  }
  auto image = [&](std::size_t v, std::span<const Vertex> xs) {
    std::vector<Vertex> out;
    for (Vertex x : xs) {
      if (x >= nx) continue;
      auto p = res.pi_of(v, x);
      out.insert(out.end(), p.begin(), p.end());
    }
    return make_set(std::move(out));
  };
  for (const auto& lv : aug.levels) {
    const auto& hs = subs[lv.subgroup].structure;
    for (std::size_t u = 0; u < hs.size(); ++u) {
      const std::size_t a = lv.offset + u;
      res.rho_up[a * n + base.top] = support[a];
      for (std::size_t v = 0; v < hs.size(); ++v) {
        if (u != v) res.rho_up[a * n + lv.offset + v] = hs.rho(u, v);
      }
      for (std::size_t w = 0; w < nb; ++w) {
        if (w == base.top) continue;
        res.rho_up[a * n + w] = image(w, support[a]);
        res.rho_up[w * n + a] = image(a, base.rho(w, base.top));
        if (res.rho_up[a * n + w].empty()) ++aug.unreached_rho;
        if (res.rho_up[w * n + a].empty()) ++aug.unreached_rho;
      }
    }
  }
  for (std::size_t p = 0; p < aug.levels.size(); ++p) {
    const auto& lp = aug.levels[p];
    const std::size_t pn = subs[lp.subgroup].structure.size();
    for (std::size_t q = 0; q < aug.levels.size(); ++q) {
      if (p == q) continue;
      const auto& lq = aug.levels[q];
      const std::size_t qn = subs[lq.subgroup].structure.size();
      for (std::size_t u = 0; u < pn; ++u) {
        for (std::size_t v = 0; v < qn; ++v) {
          auto& slot = res.rho_up[(lp.offset + u) * n + lq.offset + v];
          slot = image(lq.offset + v, support[lp.offset + u]);
          if (slot.empty()) ++aug.unreached_rho;
        }
      }
    }
  }

  // downward maps
  const MetricGraph& cs = *top_space;
  std::vector<Vertex> rep_of(cs.vertex_count());
  for (Vertex c = 0; c < cs.vertex_count(); ++c) {
    rep_of[c] = c;
    if (c < nx) continue;
    for (Vertex w : cs.neighbors(c)) {
      if (w < nx) {
        rep_of[c] = w;
        break;
      }
    }
  }
  for (const auto& [k, table] : base.rho_down) {
    std::size_t w = k / nb, v = k % nb;
    if (w == base.top && table.size() < cs.vertex_count()) {
      SetTable t = table;
      for (Vertex c = static_cast<Vertex>(table.size()); c < cs.vertex_count(); ++c) t.push_back(table[rep_of[c]]);
      res.rho_down.emplace(w * n + v, std::move(t));
    } else {
      res.rho_down.emplace(w * n + v, table);
    }
  }
  for (auto k : base.default_rho) res.default_rho.insert((k / nb) * n + k % nb);
  for (const auto& lv : aug.levels) {
    const auto& hs = subs[lv.subgroup].structure;
    const std::size_t hn = hs.size();
    for (const auto& [k, table] : hs.rho_down) {
      res.rho_down.emplace((lv.offset + k / hn) * n + lv.offset + k % hn, table);
    }
    for (std::size_t u = 0; u < hn; ++u) {
      SetTable t;
      for (Vertex c = 0; c < cs.vertex_count(); ++c) t.push_back(res.pi_of(lv.offset + u, rep_of[c]));
      res.rho_down.emplace(base.top * n + lv.offset + u, std::move(t));
    }
  }

  res.xi = base.xi;
  for (const auto& s : subs) res.xi = std::max(res.xi, s.structure.xi);
  res.finalize();
  for (std::size_t u = 0; u < n; ++u) {
    for (Vertex x = 0; x < nx; ++x) res.xi = std::max(res.xi, res.set_diam(u, res.pi_of(u, x)));
    for (std::size_t v = 0; v < n; ++v) {
      const auto& r = res.rho_up[u * n + v];
      if (r.size() > 1) res.xi = std::max(res.xi, res.set_diam(v, r));
    }
  }
  return aug;
}

struct HomomorphismReport {
  std::size_t subgroup = 0;
  bool index_map_injective = true;
  bool relations_preserved = true;
  /// Largest diam(pi_{(U,e)}(phi x) union phi_U(pi_U x)) over ball points.
  std::uint32_t pi_commute_error = 0;
  std::uint32_t rho_commute_error = 0;
  /// Largest diam(pi_{h(U,g)}(h x) union k pi_{(U,g)}(x)) over the samples.
  std::uint32_t equivariance_error = 0;
  std::size_t samples = 0;
  std::size_t skipped = 0;
  std::uint64_t seed = 0;
  std::uint32_t bound = 0;
  std::string witness;

  bool pass() const {
    return index_map_injective && relations_preserved && pi_commute_error <= bound && rho_commute_error <= bound &&
           equivariance_error <= bound;
  }
};

struct AugmentedVerification {
  AxiomReport axioms;
  ConstantsBundle base_constants;
  std::vector<HomomorphismReport> homomorphisms;

  bool pass() const {
    if (!axioms.pass()) return false;
    for (const auto& h : homomorphisms) {
      if (!h.pass()) return false;
    }
    return true;
  }
};

inline AugmentedVerification verify_augmented(const AugmentedStructure& aug, const CheckOptions& opt = {},
                                              std::size_t samples = 100, std::uint64_t seed = 1) {
  AugmentedVerification out;
  out.axioms = run_battery(aug.result, opt);
  out.base_constants = run_battery(aug.base, opt).constants;
  const HHSInstance& res = aug.result;
  const BallGraph& ball = *aug.base.cayley->ball;
  const GroupModel& m = ball.model;
  const Vertex nx = static_cast<Vertex>(res.X().vertex_count());

  for (std::size_t i = 0; i < aug.subgroups.size(); ++i) {
    HomomorphismReport h;
    h.subgroup = i;
    h.seed = seed;
    h.bound = res.xi;
    const auto& hs = aug.subgroups[i].structure;
    const auto& hb = *hs.cayley->ball;
    const LevelSet* identity = nullptr;
    for (const auto& lv : aug.levels) {
      if (lv.subgroup == i && lv.coset.rep_vertex == 0) identity = &lv;
    }
    if (!identity) continue;
    // the index map U -> (U, e)
    for (std::size_t u = 0; u < hs.size(); ++u) {
      for (std::size_t v = 0; v < hs.size(); ++v) {
        if (res.rel(identity->offset + u, identity->offset + v) != hs.rel(u, v)) h.relations_preserved = false;
      }
    }
    for (std::size_t u = 0; u < hs.size(); ++u) {
      for (Vertex hv = 0; hv < hb.size(); ++hv) {
        auto it = ball.index.find(aug.ambient_of[i][hv]);
        if (it == ball.index.end()) continue;
        auto a = res.pi_of(identity->offset + u, it->second);
        auto b = hs.pi_of(u, hv);
        auto err = res.set_diam(identity->offset + u, set_union(a, b));
        if (err > h.pi_commute_error) {
          h.pi_commute_error = err;
          h.witness = "pi at " + ball.graph.label(it->second);
        }
      }
      for (std::size_t v = 0; v < hs.size(); ++v) {
        if (u == v || hs.rho(u, v).empty()) continue;
        if (res.rho(identity->offset + u, identity->offset + v) != hs.rho(u, v)) {
          auto err = res.set_diam(identity->offset + v, set_union(res.rho(identity->offset + u, identity->offset + v),
                                                                  hs.rho(u, v)));
          h.rho_commute_error = std::max(h.rho_commute_error, err);
        }
      }
    }

    // coarse equivariance on the top index of each copy
    if (hs.cayley && hs.cayley->top_is_cayley) {
      std::vector<Vertex> inner;
      for (Vertex v = 0; v < nx; ++v) {
        if (2 * ball.words[v].size() <= ball.radius) inner.push_back(v);
      }
      std::vector<std::size_t> inner_levels;
      for (std::size_t l = 0; l < aug.levels.size(); ++l) {
        const auto& lv = aug.levels[l];
        if (lv.subgroup == i && 2 * lv.coset.representative.size() <= ball.radius) inner_levels.push_back(l);
      }
      for (std::uint64_t k = 0; h.samples < samples && k < samples * 50; ++k) {
        std::uint64_t r = draw(seed, 81, k);
        Vertex g_el = inner[r % inner.size()];
        r = splitmix64(r);
        Vertex x = inner[r % inner.size()];
        r = splitmix64(r);
        const LevelSet& lv = aug.levels[inner_levels[r % inner_levels.size()]];
        const Word& hw = ball.words[g_el];
        auto hx = ball.find(m.multiply(hw, ball.words[x]));
        auto hg = ball.find(m.multiply(hw, lv.coset.representative));
        if (!hx || !hg) {
          ++h.skipped;
          continue;
        }
        const LevelSet& target = aug.levels[aug.level_of[i][*hg]];
        // h g = g' k with k in the subgroup
        Word kw = m.multiply(m.normal_form(inverse(target.coset.representative)), m.multiply(hw, lv.coset.representative));
        auto kv = aug.vertex_of[i].find(kw);
        if (kv == aug.vertex_of[i].end()) {
          ++h.skipped;
          continue;
        }
        std::vector<Vertex> moved;
        bool inside = true;
        for (Vertex p : res.pi_of(lv.offset + hs.top, x)) {
          auto q = hb.find(hb.model.multiply(hb.words[kv->second], hb.words[p]));
          if (!q) {
            inside = false;
            break;
          }
          moved.push_back(*q);
        }
        if (!inside) {
          ++h.skipped;
          continue;
        }
        const std::size_t t = target.offset + hs.top;
        auto err = res.set_diam(t, set_union(res.pi_of(t, *hx), make_set(std::move(moved))));
        if (err > h.equivariance_error) {
          h.equivariance_error = err;
          h.witness = "h = " + ball.graph.label(g_el) + ", x = " + ball.graph.label(x) + ", index " + res.indices[lv.offset].label;
        }
        ++h.samples;
      }
    }
    out.homomorphisms.push_back(std::move(h));
  }
  return out;
}

/// Closest-point projection bound of subgroup cosets: the largest
/// diam_{CU}(pi_U(gH)) over U other than S and cosets gH meeting the ball.
struct ProjectionUniformity {
  std::uint32_t C = 0;
  std::size_t index = 0;
  std::string coset;
};

inline ProjectionUniformity projection_uniform_bound(const HHSInstance& base, const SubgroupSpec& h) {
  ProjectionUniformity out;
  if (base.size() == 1) return out;
  if (!base.cayley) throw Error(ErrorKind::MissingStructure, "base structure carries no Cayley ball");
  const BallGraph& ball = *base.cayley->ball;
  auto cosets = enumerate_cosets(ball, h);
  for (std::size_t u = 0; u < base.size(); ++u) {
    if (u == base.top) continue;
    for (const auto& c : cosets) {
      std::vector<Vertex> img;
      for (Vertex x : c.members) {
        auto p = base.pi_of(u, x);
        img.insert(img.end(), p.begin(), p.end());
      }
      auto d = base.set_diam(u, make_set(std::move(img)));
      if (d > out.C) out = ProjectionUniformity{d, u, coset_label(ball, c)};
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decomposition of quasi-geodesics

struct DecompositionReport {
  /// Geodesic of the coned top space, de-electrified to a path of X.
  PathRecord path;
  std::uint32_t theta = 0;
  /// [start, end] positions along the path of each beta piece, with its coset.
  struct Piece {
    std::size_t start = 0, end = 0;
    std::string coset;
  };
  std::vector<Piece> betas;
  /// [start, end] of each gamma segment.
  std::vector<std::pair<std::size_t, std::size_t>> gammas;
  /// max over U of diam(pi_U(path)) - max_i diam(pi_U(gamma_i)).
  std::uint32_t T = 0;
  std::size_t index = 0;
};

inline DecompositionReport decomposition_projection_check(const AugmentedStructure& aug, Vertex x, Vertex y,
                                                          std::uint32_t theta) {
  DecompositionReport rep;
  rep.theta = theta;
  const ConedGraph& cg = *aug.coned_top;
  auto coned_path = shortest_path(cg.coned, x, y);
  auto rec = de_electrify(cg, coned_path);
  const MetricGraph& X = aug.result.X();
  // base CS edges that are not edges of X are replaced by geodesics of X
  rep.path.vertices = {x};
  std::size_t piece = 0;
  for (std::size_t i = 0; i + 1 < coned_path.vertices.size();) {
    Vertex u = coned_path.vertices[i], v = coned_path.vertices[i + 1];
    if (!cg.is_apex(v) && cg.base.has_edge(u, v)) {
      if (X.has_edge(u, v)) {
        rep.path.vertices.push_back(v);
      } else {
        auto seg = shortest_path(X, u, v);
        rep.path.vertices.insert(rep.path.vertices.end(), seg.vertices.begin() + 1, seg.vertices.end());
      }
      ++i;
      continue;
    }
    const auto& rp = rec.pieces[piece++];
    std::size_t start = rep.path.vertices.size() - 1;
    std::size_t len = rp.geodesic.vertices.size() - 1;
    if (len > theta) rep.betas.push_back({start, start + len, cg.family[rp.member].label});
    rep.path.vertices.insert(rep.path.vertices.end(), rp.geodesic.vertices.begin() + 1, rp.geodesic.vertices.end());
    i += cg.is_apex(v) ? 2 : 1;
  }
  rep.path.is_geodesic = false;
  std::size_t start = 0;
  for (const auto& b : rep.betas) {
    rep.gammas.emplace_back(start, b.start);
    start = b.end;
  }
  rep.gammas.emplace_back(start, rep.path.vertices.size() - 1);

  const HHSInstance& res = aug.result;
  auto diam_over = [&](std::size_t u, std::size_t a, std::size_t b) {
    std::vector<Vertex> img;
    for (std::size_t k = a; k <= b; ++k) {
      auto p = res.pi_of(u, rep.path.vertices[k]);
      img.insert(img.end(), p.begin(), p.end());
    }
    return res.set_diam(u, make_set(std::move(img)));
  };
  for (std::size_t u = 0; u < aug.base_size(); ++u) {
    if (u == res.top) continue;
    std::uint32_t whole = diam_over(u, 0, rep.path.vertices.size() - 1);
    std::uint32_t best = 0;
    for (auto [a, b] : rep.gammas) best = std::max(best, diam_over(u, a, b));
    if (whole > best && whole - best > rep.T) {
      rep.T = whole - best;
      rep.index = u;
    }
  }
  return rep;
}

}  // namespace hhs
