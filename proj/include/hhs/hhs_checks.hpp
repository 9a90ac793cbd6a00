#pragma once

#include <cmath>
#include <functional>
#include <tuple>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hhs/hhs_instance.hpp"
#include "hhs/metric.hpp"

namespace hhs {

struct CheckOptions {
  /// Points of X visited by pointwise checks.
  SampleSpec points{};
  /// Unordered pairs of points visited by pairwise checks.
  SampleSpec pairs{};
  std::vector<std::uint32_t> e_grid{1, 2, 3, 4, 6, 8};
  std::vector<std::uint32_t> kappa_grid{1, 2, 3, 4, 6, 8};
  /// Point tuples tried per orthogonal family in partial realization.
  std::size_t tuples_per_family = 256;
  /// Largest orthogonal family size enumerated.
  std::size_t max_family = 4;
  FourPointBudget delta_budget{};
  /// Spaces with at most this many vertices get an exhaustive four-point scan.
  std::size_t delta_exhaustive_vertices = 200;

  static CheckOptions exhaustive() {
    CheckOptions o;
    o.points = SampleSpec::exhaustive();
    o.pairs = SampleSpec::exhaustive();
    return o;
  }
};

namespace detail {

/// Per-index up/down adjacency of the proper nesting relation.
struct NestingLists {
  std::vector<std::vector<std::size_t>> down, up;
  explicit NestingLists(const HHSInstance& inst) : down(inst.size()), up(inst.size()) {
    for (std::size_t u = 0; u < inst.size(); ++u) {
      for (std::size_t v = 0; v < inst.size(); ++v) {
        if (inst.properly_nested(u, v)) {
          down[v].push_back(u);
          up[u].push_back(v);
        }
      }
    }
  }
};

inline std::uint32_t min_over(std::span<const std::uint32_t> d, std::span<const Vertex> set) {
  std::uint32_t best = kUnreached;
  for (Vertex c : set) best = std::min(best, d[c]);
  return best;
}

inline std::vector<std::uint32_t> distances_from(const HHSInstance& inst, std::size_t u, std::span<const Vertex> set) {
  return bfs(inst.space(u), set);
}

/// Visited unordered pairs of X as (x, y) with x < y.
inline std::vector<std::pair<Vertex, Vertex>> point_pairs(std::size_t n, const SampleSpec& spec, std::uint64_t stream,
                                                          bool* sampled) {
  std::vector<std::pair<Vertex, Vertex>> out;
  if (n < 2) {
    if (sampled) *sampled = false;
    return out;
  }
  std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  for (auto k : sample_indices(total, spec, stream, sampled)) {
    auto [i, j] = unordered_pair(k, n);
    out.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
  }
  return out;
}

inline std::string idx(const HHSInstance& inst, std::size_t u) { return inst.indices[u].label; }

inline std::string vx(const HHSInstance& inst, Vertex x) { return inst.X().label(x); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Structure

struct StructuralReport {
  bool relations_well_formed = true;
  bool partial_order = true;
  bool unique_maximal = true;
  bool orthogonality_closed = true;
  bool container = true;
  bool projections_nonempty = true;
  bool projections_bounded = true;
  bool rho_bounded = true;
  /// Longest chain of properly nested indices, counted in elements.
  std::size_t complexity = 0;
  std::size_t orthogonal_pairs = 0;
  /// (T, U) pairs where the container condition had something to contain.
  std::size_t container_cases = 0;
  std::uint32_t max_projection_diameter = 0;
  std::uint32_t max_rho_diameter = 0;
  /// Pairs whose rho is required but empty in the truncated model.
  std::size_t missing_rho = 0;
  std::vector<std::string> violations;

  bool pass() const {
    return relations_well_formed && partial_order && unique_maximal && orthogonality_closed && container &&
           projections_nonempty && projections_bounded && rho_bounded;
  }
};

inline StructuralReport check_structural(const HHSInstance& inst) {
  StructuralReport rep;
  const std::size_t n = inst.size();
  auto note = [&rep](std::string s) {
    if (rep.violations.size() < 32) rep.violations.push_back(std::move(s));
  };
  using detail::idx;

  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      Relation r = inst.rel(u, v);
      bool ok = (u == v) ? r == Relation::Equal : (r != Relation::Equal && inst.rel(v, u) == converse(r));
      if (!ok) {
        rep.relations_well_formed = false;
        note("relation " + idx(inst, u) + " / " + idx(inst, v) + " is " + to_string(r));
      }
      if (u < v && r == Relation::Orthogonal) ++rep.orthogonal_pairs;
    }
  }

  detail::NestingLists lists(inst);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u : lists.down[v]) {
      for (std::size_t w : lists.up[v]) {
        if (!inst.properly_nested(u, w)) {
          rep.partial_order = false;
          note("nesting not transitive: " + idx(inst, u) + " < " + idx(inst, v) + " < " + idx(inst, w));
        }
      }
    }
  }

  for (std::size_t u = 0; u < n; ++u) {
    if (u != inst.top && !inst.properly_nested(u, inst.top)) {
      rep.unique_maximal = false;
      note("index " + idx(inst, u) + " is not nested in the top element");
    }
  }

  for (std::size_t w = 0; w < n; ++w) {
    for (std::size_t u = 0; u < n; ++u) {
      if (!inst.orthogonal(w, u)) continue;
      for (std::size_t v : lists.down[w]) {
        if (!inst.orthogonal(v, u)) {
          rep.orthogonality_closed = false;
          note("orthogonality not inherited: " + idx(inst, v) + " < " + idx(inst, w) + " but not orthogonal to " +
               idx(inst, u));
        }
      }
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::size_t> below_t = lists.down[t];
    std::vector<std::size_t> in_t = below_t;
    in_t.push_back(t);
    for (std::size_t u : in_t) {
      std::vector<std::size_t> orth;
      for (std::size_t v : in_t) {
        if (inst.orthogonal(v, u)) orth.push_back(v);
      }
      if (orth.empty()) continue;
      ++rep.container_cases;
      bool found = false;
      for (std::size_t w : below_t) {
        bool all = true;
        for (std::size_t v : orth) {
          if (!inst.nested(v, w)) {
            all = false;
            break;
          }
        }
        if (all) {
          found = true;
          break;
        }
      }
      if (!found) {
        rep.container = false;
        note("no container in " + idx(inst, t) + " for the orthogonal complement of " + idx(inst, u));
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t u = 0; u < n; ++u) order[u] = u;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lists.down[a].size() < lists.down[b].size(); });
  std::vector<std::size_t> chain(n, 1);
  for (std::size_t u : order) {
    for (std::size_t v : lists.down[u]) chain[u] = std::max(chain[u], chain[v] + 1);
    rep.complexity = std::max(rep.complexity, chain[u]);
  }

  for (std::size_t u = 0; u < n; ++u) {
    for (Vertex x = 0; x < inst.X().vertex_count(); ++x) {
      auto p = inst.pi_of(u, x);
      if (p.empty()) {
        rep.projections_nonempty = false;
        note("empty projection of " + detail::vx(inst, x) + " to " + idx(inst, u));
        continue;
      }
      rep.max_projection_diameter = std::max(rep.max_projection_diameter, inst.set_diam(u, p));
    }
  }
  if (rep.max_projection_diameter > inst.xi) {
    rep.projections_bounded = false;
    note("projection diameter " + std::to_string(rep.max_projection_diameter) + " exceeds xi");
  }

  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      Relation r = inst.rel(u, v);
      if (r != Relation::Nested && r != Relation::Transverse) continue;
      const auto& rho = inst.rho(u, v);
      if (rho.empty()) {
        ++rep.missing_rho;
        continue;
      }
      std::uint32_t d = inst.set_diam(v, rho);
      if (d > rep.max_rho_diameter) rep.max_rho_diameter = d;
      if (d > inst.xi) {
        rep.rho_bounded = false;
        note("rho of " + idx(inst, u) + " in " + idx(inst, v) + " has diameter " + std::to_string(d));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Projections are coarsely Lipschitz

struct ProjectionReport {
  /// Largest d_U(x, y) over edges xy of X and all U.
  std::uint32_t K = 0;
  std::size_t index = 0;
  Vertex x = 0, y = 0;
};

inline ProjectionReport check_projections(const HHSInstance& inst) {
  ProjectionReport rep;
  auto edges = inst.X().edges();
  for (std::size_t u = 0; u < inst.size(); ++u) {
    for (auto [x, y] : edges) {
      std::uint32_t d = inst.d_index(u, x, y);
      if (d > rep.K) rep = ProjectionReport{d, u, x, y};
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Consistency

enum class ConsistencyKind { None, Transverse, Nested, Rho };

struct ConsistencyReport {
  std::uint32_t kappa0 = 0;
  std::uint32_t transverse_max = 0, nested_max = 0, rho_max = 0;
  ConsistencyKind kind = ConsistencyKind::None;
  /// Transverse: (v, w, x). Nested: v in w at x. Rho: u in v against w.
  std::size_t u = 0, v = 0, w = 0;
  Vertex x = 0;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;
  std::size_t skipped_pairs = 0;
};

/// Re-evaluates one term of the consistency inequalities.
inline std::uint32_t consistency_term(const HHSInstance& inst, ConsistencyKind kind, std::size_t u, std::size_t v,
                                      std::size_t w, Vertex x) {
  switch (kind) {
    case ConsistencyKind::Transverse: {
      auto a = inst.set_distance(w, inst.pi_of(w, x), inst.rho(v, w));
      auto b = inst.set_distance(v, inst.pi_of(v, x), inst.rho(w, v));
      return std::min(a, b);
    }
    case ConsistencyKind::Nested: {
      auto a = inst.set_distance(w, inst.pi_of(w, x), inst.rho(v, w));
      VertexSet img(inst.pi_of(v, x).begin(), inst.pi_of(v, x).end());
      for (Vertex c : inst.pi_of(w, x)) {
        auto r = inst.rho_down_at(w, v, c);
        img = set_union(img, r);
      }
      return std::min(a, inst.set_diam(v, img));
    }
    case ConsistencyKind::Rho:
      return inst.set_distance(w, inst.rho(u, w), inst.rho(v, w));
    case ConsistencyKind::None:
      break;
  }
  return 0;
}

inline ConsistencyReport check_consistency(const HHSInstance& inst, const CheckOptions& opt = {}) {
  ConsistencyReport rep;
  const std::size_t n = inst.size();
  bool sampled = false;
  auto xs_raw = sample_indices(inst.X().vertex_count(), opt.points, 21, &sampled);
  std::vector<Vertex> xs(xs_raw.begin(), xs_raw.end());
  rep.exhaustive = !sampled;
  rep.seed = opt.points.seed;

  struct Best {
    std::uint32_t value = 0;
    ConsistencyKind kind = ConsistencyKind::None;
    std::size_t u = 0, v = 0, w = 0;
    Vertex x = 0;
    std::uint64_t evals = 0;
    std::size_t skipped = 0;
  };
  auto better = [](Best& into, const Best& c) {
    if (c.value > into.value) {
      auto e = into.evals;
      auto s = into.skipped;
      into = c;
      into.evals = e;
      into.skipped = s;
    }
  };

  // transverse pairs
  std::vector<std::pair<std::size_t, std::size_t>> tpairs;
  std::vector<std::pair<std::size_t, std::size_t>> npairs;  // (v, w) with v properly nested in w
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w = 0; w < n; ++w) {
      if (v < w && inst.transverse(v, w)) tpairs.emplace_back(v, w);
      if (inst.properly_nested(v, w)) npairs.emplace_back(v, w);
    }
  }

  std::vector<Best> chunk_t(worker_count() + 1);
  parallel_chunks(tpairs.size(), [&](std::size_t b, std::size_t e, std::size_t c) {
    Best best;
    for (std::size_t i = b; i < e; ++i) {
      auto [v, w] = tpairs[i];
      const auto& rvw = inst.rho(v, w);
      const auto& rwv = inst.rho(w, v);
      if (rvw.empty() || rwv.empty()) {
        ++best.skipped;
        continue;
      }
      auto dw = detail::distances_from(inst, w, rvw);
      auto dv = detail::distances_from(inst, v, rwv);
      for (Vertex x : xs) {
        std::uint32_t a = detail::min_over(dw, inst.pi_of(w, x));
        if (a <= best.value) continue;
        std::uint32_t val = std::min(a, detail::min_over(dv, inst.pi_of(v, x)));
        if (val > best.value) better(best, Best{val, ConsistencyKind::Transverse, 0, v, w, x});
      }
      best.evals += xs.size();
    }
    chunk_t[c] = best;
  });
  Best total;
  for (const auto& c : chunk_t) {
    total.evals += c.evals;
    total.skipped += c.skipped;
    better(total, c);
  }
  rep.transverse_max = total.value;

  Best nested_best;
  for (auto [v, w] : npairs) {
    const auto& rvw = inst.rho(v, w);
    if (rvw.empty()) {
      ++total.skipped;
      continue;
    }
    auto dw = detail::distances_from(inst, w, rvw);
    for (Vertex x : xs) {
      std::uint32_t a = detail::min_over(dw, inst.pi_of(w, x));
      if (a <= nested_best.value) continue;
      VertexSet img(inst.pi_of(v, x).begin(), inst.pi_of(v, x).end());
      for (Vertex c : inst.pi_of(w, x)) img = set_union(img, inst.rho_down_at(w, v, c));
      std::uint32_t val = std::min(a, inst.set_diam(v, img));
      if (val > nested_best.value) nested_best = Best{val, ConsistencyKind::Nested, 0, v, w, x};
    }
    total.evals += xs.size();
  }
  rep.nested_max = nested_best.value;
  better(total, nested_best);

  Best rho_best;
  for (auto [u, v] : npairs) {
    for (std::size_t w = 0; w < n; ++w) {
      bool eligible = inst.properly_nested(v, w) || (inst.transverse(v, w) && !inst.orthogonal(w, u));
      if (!eligible) continue;
      const auto& a = inst.rho(u, w);
      const auto& b = inst.rho(v, w);
      if (a.empty() || b.empty()) continue;
      std::uint32_t val = inst.set_distance(w, a, b);
      ++total.evals;
      if (val > rho_best.value) rho_best = Best{val, ConsistencyKind::Rho, u, v, w, 0};
    }
  }
  rep.rho_max = rho_best.value;
  better(total, rho_best);

  rep.kappa0 = total.value;
  rep.kind = total.kind;
  rep.u = total.u;
  rep.v = total.v;
  rep.w = total.w;
  rep.x = total.x;
  rep.evaluations = total.evals;
  rep.skipped_pairs = total.skipped;
  return rep;
}

// ---------------------------------------------------------------------------
// Large links

struct LargeLinksRow {
  std::uint32_t E = 0;
  /// Least real lambda satisfying every visited pair.
  double lambda_raw = 0;
  /// max(1, ceil(lambda_raw)).
  std::uint32_t lambda = 1;
  std::size_t w = 0;
  Vertex x = 0, y = 0;
  std::size_t cover_size = 0;
};

struct LargeLinksReport {
  std::vector<LargeLinksRow> rows;
  /// Smallest grid E at least the floor (max of xi and kappa0), with its lambda.
  std::uint32_t E_ll = 0;
  std::uint32_t lambda = 1;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::uint64_t pairs = 0;
  /// Cover elements whose rho into W is empty; they cannot certify the
  /// distance side condition.
  std::size_t missing_rho = 0;
};

inline LargeLinksReport check_large_links(const HHSInstance& inst, const CheckOptions& opt = {},
                                          std::uint32_t e_floor = 0) {
  LargeLinksReport rep;
  const std::size_t n = inst.size();
  std::vector<std::uint32_t> grid = opt.e_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) grid.push_back(std::max<std::uint32_t>(1, e_floor));
  for (auto E : grid) rep.rows.push_back(LargeLinksRow{E, 0, 1, 0, 0, 0, 0});

  bool sampled = false;
  auto pairs = detail::point_pairs(inst.X().vertex_count(), opt.pairs, 31, &sampled);
  rep.exhaustive = !sampled;
  rep.seed = opt.pairs.seed;
  rep.pairs = pairs.size();
  detail::NestingLists lists(inst);

  for (std::size_t w = 0; w < n; ++w) {
    const auto& ts = lists.down[w];
    if (ts.empty()) continue;
    // parent[k] lists positions in ts of elements properly containing ts[k]
    std::vector<std::vector<std::size_t>> parent(ts.size());
    bool flat = true;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      for (std::size_t j = 0; j < ts.size(); ++j) {
        if (inst.properly_nested(ts[i], ts[j])) {
          parent[i].push_back(j);
          flat = false;
        }
      }
    }
    std::vector<std::vector<std::uint32_t>> rho_dist(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto& r = inst.rho(ts[i], w);
      if (r.empty()) {
        ++rep.missing_rho;
      } else {
        rho_dist[i] = detail::distances_from(inst, w, r);
      }
    }

    std::vector<std::vector<LargeLinksRow>> chunk_rows(worker_count() + 1, rep.rows);
    parallel_chunks(pairs.size(), [&](std::size_t b, std::size_t e, std::size_t c) {
      auto& rows = chunk_rows[c];
      std::vector<std::uint32_t> dt(ts.size());
      std::vector<char> viol(ts.size());
      for (std::size_t p = b; p < e; ++p) {
        auto [x, y] = pairs[p];
        for (std::size_t i = 0; i < ts.size(); ++i) dt[i] = inst.d_index(ts[i], x, y);
        const double denom = static_cast<double>(inst.d_index(w, x, y)) + 1.0;
        for (auto& row : rows) {
          std::size_t count = 0;
          std::uint32_t far = 0;
          for (std::size_t i = 0; i < ts.size(); ++i) viol[i] = dt[i] >= row.E;
          for (std::size_t i = 0; i < ts.size(); ++i) {
            if (!viol[i]) continue;
            if (!flat) {
              bool covered = false;
              for (std::size_t j : parent[i]) covered = covered || viol[j];
              if (covered) continue;
            }
            ++count;
            if (!rho_dist[i].empty()) far = std::max(far, detail::min_over(rho_dist[i], inst.pi_of(w, x)));
          }
          double need = static_cast<double>(std::max<std::size_t>(count, far)) / denom;
          if (need > row.lambda_raw) {
            row.lambda_raw = need;
            row.w = w;
            row.x = x;
            row.y = y;
            row.cover_size = count;
          }
        }
      }
    });
    for (const auto& rows : chunk_rows) {
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].lambda_raw > rep.rows[k].lambda_raw) rep.rows[k] = rows[k];
      }
    }
  }
  for (auto& row : rep.rows) {
    row.lambda = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(row.lambda_raw - 1e-12)));
  }
  rep.E_ll = rep.rows.back().E;
  rep.lambda = rep.rows.back().lambda;
  for (const auto& row : rep.rows) {
    if (row.E >= e_floor) {
      rep.E_ll = row.E;
      rep.lambda = row.lambda;
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Bounded geodesic image

struct BGIReport {
  /// Least E such that every visited geodesic either meets N_E(rho^V_W) or
  /// has rho^W_V-image of diameter at most E.
  std::uint32_t E_bgi = 0;
  std::size_t w = 0, v = 0;
  Vertex from = 0, to = 0;
  std::uint32_t image_diameter = 0, distance_to_rho = 0;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::uint64_t geodesics = 0;
};

inline BGIReport check_bgi(const HHSInstance& inst, const CheckOptions& opt = {}) {
  BGIReport rep;
  rep.seed = opt.pairs.seed;
  detail::NestingLists lists(inst);
  std::unordered_map<const MetricGraph*, std::vector<std::pair<Vertex, Vertex>>> pair_cache;
  for (std::size_t w = 0; w < inst.size(); ++w) {
    const auto& vs = lists.down[w];
    if (vs.empty()) continue;
    const auto& cw = inst.space(w);
    bool sampled = false;
    auto pairs = detail::point_pairs(cw.vertex_count(), opt.pairs, 41, &sampled);
    if (sampled) rep.exhaustive = false;
    rep.geodesics += pairs.size();
    std::vector<std::vector<std::uint32_t>> rho_dist(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const auto& r = inst.rho(vs[i], w);
      if (!r.empty()) rho_dist[i] = detail::distances_from(inst, w, r);
    }
    struct Best {
      std::uint32_t value = 0;
      std::size_t v = 0;
      Vertex from = 0, to = 0;
      std::uint32_t diam = 0, dist = 0;
    };
    std::vector<Best> chunk_best(worker_count() + 1);
    parallel_chunks(pairs.size(), [&](std::size_t b, std::size_t e, std::size_t c) {
      Best best;
      for (std::size_t p = b; p < e; ++p) {
        auto [c1, c2] = pairs[p];
        if (inst.dist(w)(c1, c2) == kUnreached) continue;
        auto gamma = shortest_path(cw, inst.dist(w), c1, c2).vertices;
        for (std::size_t i = 0; i < vs.size(); ++i) {
          if (rho_dist[i].empty()) continue;
          std::uint32_t dist = detail::min_over(rho_dist[i], gamma);
          if (dist <= best.value) continue;
          VertexSet img;
          for (Vertex g : gamma) img = set_union(img, inst.rho_down_at(w, vs[i], g));
          std::uint32_t diam = inst.set_diam(vs[i], img);
          std::uint32_t val = std::min(diam, dist);
          if (val > best.value) best = Best{val, vs[i], c1, c2, diam, dist};
        }
      }
      chunk_best[c] = best;
    });
    for (const auto& cb : chunk_best) {
      if (cb.value > rep.E_bgi) {
        rep.E_bgi = cb.value;
        rep.w = w;
        rep.v = cb.v;
        rep.from = cb.from;
        rep.to = cb.to;
        rep.image_diameter = cb.diam;
        rep.distance_to_rho = cb.dist;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Partial realization

struct PartialRealizationReport {
  /// Least alpha realizing every visited family; kUnreached when some
  /// family has no realizer in X.
  std::uint32_t alpha = 0;
  std::vector<std::size_t> family;
  std::vector<Vertex> points;
  Vertex realizer = 0;
  std::size_t families = 0;
  std::size_t tuples = 0;
  std::size_t no_realizer = 0;
  std::size_t largest_family = 0;
};

inline PartialRealizationReport check_partial_realization(const HHSInstance& inst, const CheckOptions& opt = {}) {
  PartialRealizationReport rep;
  const std::size_t n = inst.size();
  const Vertex nx = static_cast<Vertex>(inst.X().vertex_count());

  // pairwise orthogonal families, by depth-first extension in index order
  std::vector<std::vector<std::size_t>> families;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> extend = [&](std::size_t from) {
    if (!cur.empty()) families.push_back(cur);
    if (cur.size() >= opt.max_family) return;
    for (std::size_t u = from; u < n; ++u) {
      bool ok = true;
      for (std::size_t v : cur) ok = ok && inst.orthogonal(u, v);
      if (!ok) continue;
      cur.push_back(u);
      extend(u + 1);
      cur.pop_back();
    }
  };
  extend(0);
  rep.families = families.size();

  std::vector<VertexSet> image(n);
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<Vertex> all;
    for (Vertex x = 0; x < nx; ++x) {
      auto p = inst.pi_of(u, x);
      all.insert(all.end(), p.begin(), p.end());
    }
    image[u] = make_set(std::move(all));
  }

  struct Condition {
    std::size_t space;
    std::vector<std::uint32_t> dist;
  };
  // conditions on x imposed by V_j through the indices above or transverse to it
  auto conditions_for = [&](std::size_t vj) {
    std::vector<Condition> out;
    for (std::size_t w = 0; w < n; ++w) {
      if (!(inst.properly_nested(vj, w) || inst.transverse(vj, w))) continue;
      const auto& r = inst.rho(vj, w);
      if (r.empty()) continue;
      out.push_back(Condition{w, detail::distances_from(inst, w, r)});
    }
    return out;
  };

  std::uint64_t stream = 51;
  for (const auto& fam : families) {
    rep.largest_family = std::max(rep.largest_family, fam.size());
    std::vector<std::vector<Condition>> conds;
    for (std::size_t vj : fam) conds.push_back(conditions_for(vj));
    std::uint64_t total = 1;
    bool overflow = false;
    for (std::size_t vj : fam) {
      if (image[vj].empty()) total = 0;
      if (total > 0 && image[vj].size() > (std::uint64_t{1} << 40) / total) overflow = true;
      if (!overflow) total *= image[vj].size();
    }
    SampleSpec spec{opt.tuples_per_family, opt.tuples_per_family, opt.points.seed};
    auto picks = overflow ? sample_indices(std::numeric_limits<std::uint64_t>::max(), spec, stream)
                          : sample_indices(total, spec, stream);
    ++stream;
    std::vector<std::vector<std::uint32_t>> point_dist(fam.size());
    for (auto k : picks) {
      std::vector<Vertex> pts;
      for (std::size_t j = 0; j < fam.size(); ++j) {
        const auto& img = image[fam[j]];
        pts.push_back(img[k % img.size()]);
        k /= img.size();
      }
      for (std::size_t j = 0; j < fam.size(); ++j) {
        Vertex p = pts[j];
        point_dist[j] = bfs(inst.space(fam[j]), std::span<const Vertex>(&p, 1));
      }
      ++rep.tuples;
      std::uint32_t best = kUnreached;
      Vertex best_x = 0;
      for (Vertex x = 0; x < nx && best > 0; ++x) {
        std::uint32_t val = 0;
        for (std::size_t j = 0; j < fam.size() && val < best; ++j) {
          val = std::max(val, detail::min_over(point_dist[j], inst.pi_of(fam[j], x)));
        }
        for (std::size_t j = 0; j < fam.size() && val < best; ++j) {
          for (const auto& cnd : conds[j]) {
            val = std::max(val, detail::min_over(cnd.dist, inst.pi_of(cnd.space, x)));
            if (val >= best) break;
          }
        }
        if (val < best) {
          best = val;
          best_x = x;
        }
      }
      if (best == kUnreached) ++rep.no_realizer;
      if (best > rep.alpha || (best == rep.alpha && rep.family.empty())) {
        rep.alpha = best;
        rep.family = fam;
        rep.points = pts;
        rep.realizer = best_x;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness

struct UniquenessRow {
  std::uint32_t kappa = 0;
  /// Largest d_X(x, y) over visited pairs with every d_V(x, y) < kappa.
  std::uint32_t theta = 0;
  Vertex x = 0, y = 0;
  /// theta reached the largest visited d_X.
  bool saturated = false;
  /// Saturated at the smallest kappa with theta > 0: distinct points that no
  /// index separates reach the largest distance.
  bool unbounded = false;
};

struct UniquenessReport {
  std::vector<UniquenessRow> rows;
  std::uint32_t max_distance = 0;
  /// Largest max_V d_V over visited pairs, capped at the top of the grid.
  std::uint32_t max_index = 0;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::uint64_t pairs = 0;
  bool unbounded() const { return !rows.empty() && rows.front().unbounded; }
};

/// Largest d_V(x, y) over all indices, stopping early once `cap` is reached.
inline std::uint32_t max_index_distance(const HHSInstance& inst, Vertex x, Vertex y, std::uint32_t cap) {
  std::uint32_t m = 0;
  for (std::size_t u = 0; u < inst.size() && m < cap; ++u) m = std::max(m, inst.d_index(u, x, y));
  return m;
}

inline UniquenessReport check_uniqueness(const HHSInstance& inst, const CheckOptions& opt = {}) {
  UniquenessReport rep;
  std::vector<std::uint32_t> grid = opt.kappa_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  bool sampled = false;
  auto pairs = detail::point_pairs(inst.X().vertex_count(), opt.pairs, 61, &sampled);
  rep.exhaustive = !sampled;
  rep.seed = opt.pairs.seed;
  rep.pairs = pairs.size();
  const std::uint32_t cap = grid.empty() ? 0 : grid.back();
  struct Acc {
    std::vector<UniquenessRow> rows;
    std::uint32_t max_distance = 0;
    std::uint32_t max_index = 0;
  };
  std::vector<UniquenessRow> init;
  for (auto k : grid) init.push_back(UniquenessRow{k, 0, 0, 0, false, false});
  std::vector<Acc> chunk_acc(worker_count() + 1, Acc{init, 0, 0});
  const auto& dx = inst.x_dist();
  parallel_chunks(pairs.size(), [&](std::size_t b, std::size_t e, std::size_t c) {
    auto& acc = chunk_acc[c];
    for (std::size_t p = b; p < e; ++p) {
      auto [x, y] = pairs[p];
      std::uint32_t d = dx(x, y);
      acc.max_distance = std::max(acc.max_distance, d);
      std::uint32_t m = max_index_distance(inst, x, y, cap);
      acc.max_index = std::max(acc.max_index, m);
      for (auto& row : acc.rows) {
        if (m < row.kappa && d > row.theta) {
          row.theta = d;
          row.x = x;
          row.y = y;
        }
      }
    }
  });
  rep.rows = init;
  for (const auto& acc : chunk_acc) {
    rep.max_distance = std::max(rep.max_distance, acc.max_distance);
    rep.max_index = std::max(rep.max_index, acc.max_index);
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
      if (acc.rows[k].theta > rep.rows[k].theta) rep.rows[k] = acc.rows[k];
    }
  }
  for (auto& row : rep.rows) row.saturated = !pairs.empty() && row.theta == rep.max_distance;
  if (!rep.rows.empty()) rep.rows.front().unbounded = rep.rows.front().saturated && rep.rows.front().theta > 0;
  return rep;
}

// ---------------------------------------------------------------------------
// Battery

struct ConstantsBundle {
  double delta = 0;
  std::uint32_t xi = 0;
  std::uint32_t K = 0;
  std::uint32_t kappa0 = 0;
  std::size_t n = 0;
  std::uint32_t lambda = 1;
  std::uint32_t E_ll = 0;
  std::uint32_t E_bgi = 0;
  std::uint32_t alpha = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> theta_u;
  std::uint32_t s = 0;
  std::uint32_t K_df = 0, C_df = 0;
  double D0 = 0;
};

struct AxiomEntry {
  std::string axiom;
  std::string value;
  std::string witness;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::uint64_t items = 0;
  bool pass = true;
};

struct AxiomReport {
  std::vector<AxiomEntry> entries;
  ConstantsBundle constants;
  StructuralReport structural;
  ProjectionReport projection;
  ConsistencyReport consistency;
  LargeLinksReport large_links;
  BGIReport bgi;
  PartialRealizationReport realization;
  UniquenessReport uniqueness;
  /// Largest four-point delta over the index spaces, with the worst index.
  HyperbolicityReport worst_delta;
  std::size_t worst_delta_index = 0;

  bool pass() const {
    for (const auto& e : entries) {
      if (!e.pass) return false;
    }
    return true;
  }
};

/// Four-point delta of every distinct index space; exhaustive up to the
/// configured size, sampled above it.
inline std::pair<HyperbolicityReport, std::size_t> index_space_delta(const HHSInstance& inst, const CheckOptions& opt) {
  std::unordered_map<const MetricGraph*, HyperbolicityReport> seen;
  HyperbolicityReport worst;
  std::size_t at = 0;
  for (std::size_t u = 0; u < inst.size(); ++u) {
    const MetricGraph* g = inst.indices[u].space.get();
    auto it = seen.find(g);
    if (it == seen.end()) {
      std::optional<FourPointBudget> budget;
      if (g->vertex_count() > opt.delta_exhaustive_vertices) budget = opt.delta_budget;
      it = seen.emplace(g, four_point_delta(*g, inst.dist(u), budget)).first;
    }
    if (u == 0 || it->second.twice_delta > worst.twice_delta) {
      worst = it->second;
      at = u;
    }
  }
  return {worst, at};
}

inline AxiomReport run_battery(const HHSInstance& inst, const CheckOptions& opt = {}) {
  AxiomReport rep;
  using detail::idx;
  using detail::vx;
  auto str = [](auto v) { return std::to_string(v); };

  std::tie(rep.worst_delta, rep.worst_delta_index) = index_space_delta(inst, opt);
  rep.constants.delta = rep.worst_delta.delta();
  rep.entries.push_back({"hyperbolicity", str(rep.worst_delta.twice_delta) + "/2",
                         idx(inst, rep.worst_delta_index), rep.worst_delta.exhaustive, rep.worst_delta.seed,
                         rep.worst_delta.quadruples, true});

  rep.projection = check_projections(inst);
  rep.structural = check_structural(inst);
  rep.constants.K = rep.projection.K;
  rep.constants.xi = std::max({inst.xi, rep.structural.max_projection_diameter, rep.structural.max_rho_diameter});
  rep.constants.n = rep.structural.complexity;
  rep.entries.push_back({"projections", "K=" + str(rep.projection.K) + " xi=" + str(rep.constants.xi),
                         idx(inst, rep.projection.index) + " at " + vx(inst, rep.projection.x) + "~" +
                             vx(inst, rep.projection.y),
                         true, 0, inst.X().edge_count(),
                         rep.structural.projections_nonempty && rep.structural.projections_bounded});
  std::string first_violation = rep.structural.violations.empty() ? "" : rep.structural.violations.front();
  rep.entries.push_back({"nesting", "partial order, unique maximal " + idx(inst, inst.top), first_violation, true, 0,
                         inst.size() * inst.size(),
                         rep.structural.relations_well_formed && rep.structural.partial_order &&
                             rep.structural.unique_maximal && rep.structural.rho_bounded});
  rep.entries.push_back({"orthogonality",
                         str(rep.structural.orthogonal_pairs) + " pairs, " + str(rep.structural.container_cases) +
                             " container cases",
                         first_violation, true, 0, inst.size() * inst.size(),
                         rep.structural.orthogonality_closed && rep.structural.container});

  rep.consistency = check_consistency(inst, opt);
  rep.constants.kappa0 = rep.consistency.kappa0;
  rep.entries.push_back({"consistency", "kappa0=" + str(rep.consistency.kappa0),
                         rep.consistency.kind == ConsistencyKind::None
                             ? std::string("none")
                             : idx(inst, rep.consistency.v) + " / " + idx(inst, rep.consistency.w) + " at " +
                                   vx(inst, rep.consistency.x),
                         rep.consistency.exhaustive, rep.consistency.seed, rep.consistency.evaluations, true});

  rep.entries.push_back({"complexity", "n=" + str(rep.structural.complexity), "", true, 0, inst.size(), true});

  std::uint32_t floor = std::max(rep.constants.xi, rep.constants.kappa0);
  rep.large_links = check_large_links(inst, opt, floor);
  rep.constants.E_ll = rep.large_links.E_ll;
  rep.constants.lambda = rep.large_links.lambda;
  bool ll_ok = rep.large_links.E_ll >= floor;
  std::string ll_w;
  for (const auto& row : rep.large_links.rows) {
    if (row.E == rep.large_links.E_ll) ll_w = idx(inst, row.w) + " at " + vx(inst, row.x) + "," + vx(inst, row.y);
  }
  rep.entries.push_back({"large-links", "E=" + str(rep.large_links.E_ll) + " lambda=" + str(rep.large_links.lambda),
                         ll_w, rep.large_links.exhaustive, rep.large_links.seed, rep.large_links.pairs, ll_ok});

  rep.bgi = check_bgi(inst, opt);
  rep.constants.E_bgi = rep.bgi.E_bgi;
  rep.entries.push_back({"bounded-geodesic-image", "E=" + str(rep.bgi.E_bgi),
                         idx(inst, rep.bgi.v) + " in " + idx(inst, rep.bgi.w), rep.bgi.exhaustive, rep.bgi.seed,
                         rep.bgi.geodesics, true});

  rep.realization = check_partial_realization(inst, opt);
  rep.constants.alpha = rep.realization.alpha;
  std::string pr_w;
  for (auto u : rep.realization.family) pr_w += (pr_w.empty() ? "" : ",") + idx(inst, u);
  rep.entries.push_back({"partial-realization",
                         rep.realization.alpha == kUnreached ? std::string("no-realizer")
                                                             : "alpha=" + str(rep.realization.alpha),
                         pr_w, true, opt.points.seed, rep.realization.tuples, rep.realization.no_realizer == 0});

  rep.uniqueness = check_uniqueness(inst, opt);
  std::string th;
  for (const auto& row : rep.uniqueness.rows) {
    rep.constants.theta_u.emplace_back(row.kappa, row.theta);
    th += (th.empty() ? "" : " ") + str(row.kappa) + ":" + str(row.theta) + (row.unbounded ? "!" : "");
  }
  std::string uw;
  if (!rep.uniqueness.rows.empty()) {
    uw = vx(inst, rep.uniqueness.rows.back().x) + "," + vx(inst, rep.uniqueness.rows.back().y);
  }
  rep.entries.push_back({"uniqueness", th, uw, rep.uniqueness.exhaustive, rep.uniqueness.seed, rep.uniqueness.pairs,
                         !rep.uniqueness.unbounded()});
  return rep;
}

// ---------------------------------------------------------------------------
// Distance formula

struct DistanceFormulaReport {
  std::uint32_t s = 1;
  std::uint32_t K = 0, C = 0;
  std::size_t violations = 0;
  Vertex x = 0, y = 0;
  std::uint32_t worst_distance = 0, worst_sum = 0;
  bool exhaustive = true;
  std::uint64_t seed = 0;
  std::uint64_t pairs = 0;
  /// Least C for each K tried.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> table;
};

/// Sum over indices of d_W(x, y), counting only terms of at least s.
inline std::uint32_t distance_formula_sum(const HHSInstance& inst, Vertex x, Vertex y, std::uint32_t s) {
  std::uint32_t sum = 0;
  for (std::size_t u = 0; u < inst.size(); ++u) {
    std::uint32_t d = inst.d_index(u, x, y);
    if (d >= s) sum += d;
  }
  return sum;
}

inline DistanceFormulaReport distance_formula_fit(const HHSInstance& inst, std::uint32_t s,
                                                  const CheckOptions& opt = {},
                                                  std::vector<std::uint32_t> k_grid = {1, 2, 3, 4, 6, 8, 12, 16}) {
  if (s < 1) throw Error(ErrorKind::InvalidArgument, "threshold s must be at least 1");
  DistanceFormulaReport rep;
  rep.s = s;
  bool sampled = false;
  auto pairs = detail::point_pairs(inst.X().vertex_count(), opt.pairs, 71, &sampled);
  rep.exhaustive = !sampled;
  rep.seed = opt.pairs.seed;
  rep.pairs = pairs.size();
  std::vector<std::uint32_t> dist(pairs.size()), sum(pairs.size());
  const auto& dx = inst.x_dist();
  parallel_for(pairs.size(), [&](std::size_t p) {
    dist[p] = dx(pairs[p].first, pairs[p].second);
    sum[p] = distance_formula_sum(inst, pairs[p].first, pairs[p].second, s);
  });
  std::sort(k_grid.begin(), k_grid.end());
  auto needed = [&](std::uint32_t K, std::size_t p) {
    std::int64_t d = dist[p], S = sum[p];
    return std::max<std::int64_t>({0, d - static_cast<std::int64_t>(K) * S, S - static_cast<std::int64_t>(K) * d});
  };
  bool found = false;
  for (auto K : k_grid) {
    std::int64_t C = 0;
    std::size_t at = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto c = needed(K, p);
      if (c > C) {
        C = c;
        at = p;
      }
    }
    rep.table.emplace_back(K, static_cast<std::uint32_t>(C));
    if (!found && C <= K) {
      found = true;
      rep.K = K;
      rep.C = static_cast<std::uint32_t>(C);
      if (!pairs.empty()) {
        rep.x = pairs[at].first;
        rep.y = pairs[at].second;
        rep.worst_distance = dist[at];
        rep.worst_sum = sum[at];
      }
    }
  }
  if (!found) {
    rep.K = rep.C = k_grid.empty() ? 0 : k_grid.back();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      if (needed(rep.K, p) > rep.C) {
        if (rep.violations == 0) {
          rep.x = pairs[p].first;
          rep.y = pairs[p].second;
          rep.worst_distance = dist[p];
          rep.worst_sum = sum[p];
        }
        ++rep.violations;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hierarchy paths

/// Least D making the sequence a (D, D)-quasi-geodesic in the metric `d`,
/// with consecutive repeats removed first (unparameterized).
template <class Dist>
double unparameterized_qg_constant(const std::vector<Vertex>& seq, Dist&& d) {
  std::vector<Vertex> s;
  for (Vertex v : seq) {
    if (s.empty() || s.back() != v) s.push_back(v);
  }
  double D = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      double t = static_cast<double>(j - i);
      double dd = static_cast<double>(d(s[i], s[j]));
      D = std::max(D, t / (dd + 1.0));
      D = std::max(D, (-t + std::sqrt(t * t + 4.0 * dd)) / 2.0);
    }
  }
  return D;
}

struct HierarchyPathResult {
  PathRecord path;
  /// Constant of the path in X and of its projection to each index.
  double d_path = 1;
  std::vector<double> per_index;
  double D = 1;
  bool within_budget = true;
  std::size_t candidates = 0;
};

inline HierarchyPathResult measure_hierarchy_path(const HHSInstance& inst, const PathRecord& path) {
  HierarchyPathResult res;
  res.path = path;
  const auto& dx = inst.x_dist();
  res.d_path = unparameterized_qg_constant(path.vertices, [&](Vertex a, Vertex b) { return dx(a, b); });
  res.D = res.d_path;
  for (std::size_t u = 0; u < inst.size(); ++u) {
    std::vector<Vertex> seq;
    for (Vertex x : path.vertices) seq.push_back(inst.pi_of(u, x).front());
    const auto& du = inst.dist(u);
    double D = unparameterized_qg_constant(seq, [&](Vertex a, Vertex b) { return du(a, b); });
    res.per_index.push_back(D);
    res.D = std::max(res.D, D);
  }
  return res;
}

/// Starts from the shortlex-first X-geodesic and, while over budget, tries
/// further geodesics of X in lexicographic order of vertex ids, keeping the
/// best. At most `max_candidates` paths are measured.
inline HierarchyPathResult find_hierarchy_path(const HHSInstance& inst, Vertex x, Vertex y, double budget,
                                               std::size_t max_candidates = 64) {
  const auto& dx = inst.x_dist();
  if (dx(x, y) == kUnreached) throw Error(ErrorKind::Disconnected, "points lie in different components");
  HierarchyPathResult best;
  bool have = false;
  std::vector<Vertex> cur{x};
  std::size_t tried = 0;
  std::function<void(Vertex)> go = [&](Vertex u) {
    if (tried >= max_candidates || (have && best.D <= budget)) return;
    if (u == y) {
      PathRecord p;
      p.vertices = cur;
      auto m = measure_hierarchy_path(inst, p);
      ++tried;
      if (!have || m.D < best.D) {
        best = std::move(m);
        have = true;
      }
      return;
    }
    for (Vertex w : inst.X().neighbors(u)) {
      if (dx(w, y) + 1 != dx(u, y)) continue;
      cur.push_back(w);
      go(w);
      cur.pop_back();
      if (tried >= max_candidates || (have && best.D <= budget)) return;
    }
  };
  go(x);
  best.candidates = tried;
  best.within_budget = best.D <= budget;
  return best;
}

// ---------------------------------------------------------------------------
// Hierarchical quasi-convexity

struct HQCReport {
  /// Quasi-convexity constant of pi_U(Y) in CU, per index.
  std::vector<std::uint32_t> per_index;
  std::uint32_t k0 = 0;
  std::size_t k0_index = 0;
  /// (r, k(r), witness x).
  struct Row {
    std::uint32_t r = 0;
    std::uint32_t k = 0;
    Vertex witness = 0;
  };
  std::vector<Row> table;
  /// Quasi-convexity constant of Y in X.
  std::uint32_t q = 0;
  bool exhaustive = true;
};

inline HQCReport check_hqc(const HHSInstance& inst, std::span<const Vertex> y, const std::vector<std::uint32_t>& r_grid,
                           const CheckOptions& opt = {}) {
  if (y.empty()) throw Error(ErrorKind::InvalidArgument, "subset Y is empty");
  VertexSet ys = make_set({y.begin(), y.end()});
  HQCReport rep;
  const std::size_t n = inst.size();
  const Vertex nx = static_cast<Vertex>(inst.X().vertex_count());
  std::vector<VertexSet> image(n);
  std::vector<std::vector<std::uint32_t>> to_image(n);
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<Vertex> all;
    for (Vertex v : ys) {
      auto p = inst.pi_of(u, v);
      all.insert(all.end(), p.begin(), p.end());
    }
    image[u] = make_set(std::move(all));
    to_image[u] = detail::distances_from(inst, u, image[u]);
  }
  std::unordered_map<const MetricGraph*, std::map<VertexSet, std::uint32_t>> qc_cache;
  for (std::size_t u = 0; u < n; ++u) {
    auto& cache = qc_cache[inst.indices[u].space.get()];
    auto it = cache.find(image[u]);
    if (it == cache.end()) {
      auto q = quasiconvexity_constant(inst.space(u), image[u], opt.points);
      rep.exhaustive = rep.exhaustive && q.exhaustive;
      it = cache.emplace(image[u], q.q).first;
    }
    rep.per_index.push_back(it->second);
    if (it->second > rep.k0) {
      rep.k0 = it->second;
      rep.k0_index = u;
    }
  }
  auto to_y = bfs(inst.X(), ys);
  std::vector<std::uint32_t> grid = r_grid;
  std::sort(grid.begin(), grid.end());
  for (auto r : grid) rep.table.push_back({r, 0, ys.front()});
  for (Vertex x = 0; x < nx; ++x) {
    std::uint32_t m = 0;
    for (std::size_t u = 0; u < n; ++u) m = std::max(m, detail::min_over(to_image[u], inst.pi_of(u, x)));
    for (auto& row : rep.table) {
      if (m <= row.r && to_y[x] > row.k) {
        row.k = to_y[x];
        row.witness = x;
      }
    }
  }
  auto qx = quasiconvexity_constant(inst.X(), ys, opt.points);
  rep.q = qx.q;
  rep.exhaustive = rep.exhaustive && qx.exhaustive;
  return rep;
}

struct HQCEquivalenceReport {
  HQCReport hqc;
  HyperbolicityReport delta;
  /// Set when delta(X) exceeds the configured threshold.
  bool not_hyperbolic = false;
  std::uint32_t q = 0;
};

inline HQCEquivalenceReport hqc_qc_equivalence(const HHSInstance& inst, std::span<const Vertex> y,
                                               const std::vector<std::uint32_t>& r_grid, double delta_threshold = 2,
                                               const CheckOptions& opt = {}) {
  HQCEquivalenceReport rep;
  std::optional<FourPointBudget> budget;
  if (inst.X().vertex_count() > opt.delta_exhaustive_vertices) budget = opt.delta_budget;
  rep.delta = four_point_delta(inst.X(), inst.x_dist(), budget);
  rep.not_hyperbolic = rep.delta.delta() > delta_threshold;
  rep.hqc = check_hqc(inst, y, r_grid, opt);
  rep.q = rep.hqc.q;
  return rep;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationRecord {
  /// Per index: new vertex id -> old vertex id of CU.
  std::vector<std::vector<Vertex>> kept;
  /// Indices whose restricted space needed geodesic repair to stay connected.
  std::vector<std::size_t> repaired;
  /// Indices whose space shrank.
  std::vector<std::size_t> changed;
  bool identity() const { return changed.empty(); }
};

struct NormalizedInstance {
  HHSInstance instance;
  NormalizationRecord record;
};

/// Restricts every CU to the image of pi_U, adding shortest paths of CU
/// between components when the image is disconnected. The index set and
/// relations are unchanged; the map on X is the identity.
inline NormalizedInstance normalize(const HHSInstance& inst) {
  NormalizedInstance out;
  HHSInstance& res = out.instance;
  res = inst;
  const std::size_t n = inst.size();
  const Vertex nx = static_cast<Vertex>(inst.X().vertex_count());
  std::vector<std::vector<Vertex>> to_new(n);
  std::unordered_map<const MetricGraph*, SpacePtr> shared_result;
  std::unordered_map<const MetricGraph*, std::pair<std::vector<Vertex>, bool>> shared_kept;

  for (std::size_t u = 0; u < n; ++u) {
    const auto& cu = inst.space(u);
    std::vector<Vertex> img;
    for (Vertex x = 0; x < nx; ++x) {
      auto p = inst.pi_of(u, x);
      img.insert(img.end(), p.begin(), p.end());
    }
    VertexSet keep = make_set(std::move(img));
    bool repaired = false;
    if (!is_connected_subset(cu, keep)) {
      repaired = true;
      // join every component to the first by a shortest path of CU
      const auto& d = inst.dist(u);
      for (;;) {
        VertexSet comp = component_within(cu, keep, keep.front());
        if (comp.size() == keep.size()) break;
        Vertex best_a = 0, best_b = 0;
        std::uint32_t best = kUnreached;
        for (Vertex a : comp) {
          for (Vertex b : keep) {
            if (contains(comp, b)) continue;
            if (d(a, b) < best) {
              best = d(a, b);
              best_a = a;
              best_b = b;
            }
          }
        }
        if (best == kUnreached) {
          throw Error(ErrorKind::DisconnectedImage, "projection image of " + inst.indices[u].label + " spans components");
        }
        auto path = shortest_path(cu, d, best_a, best_b);
        keep = set_union(keep, make_set(path.vertices));
      }
    }
    if (repaired) out.record.repaired.push_back(u);
    if (keep.size() != cu.vertex_count()) out.record.changed.push_back(u);
    to_new[u].assign(cu.vertex_count(), kUnreached);
    for (Vertex i = 0; i < keep.size(); ++i) to_new[u][keep[i]] = i;
    out.record.kept.push_back(keep);

    auto key = inst.indices[u].space.get();
    auto it = shared_result.find(key);
    if (it != shared_result.end() && shared_kept[key].first == keep) {
      res.indices[u].space = it->second;
      continue;
    }
    auto sub = induce(cu, keep);
    auto sp = std::make_shared<const MetricGraph>(std::move(sub.graph));
    res.indices[u].space = sp;
    shared_result[key] = sp;
    shared_kept[key] = {keep, repaired};
  }

  // remap a vertex set of CU; dropped vertices go to their nearest kept ones
  auto remap = [&](std::size_t u, std::span<const Vertex> set) {
    std::vector<Vertex> outv;
    const auto& keep = out.record.kept[u];
    for (Vertex c : set) {
      if (to_new[u][c] != kUnreached) {
        outv.push_back(to_new[u][c]);
        continue;
      }
      std::uint32_t best = kUnreached;
      for (Vertex k : keep) best = std::min(best, inst.dist(u)(c, k));
      for (Vertex k : keep) {
        if (inst.dist(u)(c, k) == best) outv.push_back(to_new[u][k]);
      }
    }
    return make_set(std::move(outv));
  };

  for (std::size_t u = 0; u < n; ++u) {
    SetTable t;
    for (Vertex x = 0; x < nx; ++x) t.push_back(remap(u, inst.pi_of(u, x)));
    res.pi[u] = std::move(t);
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const auto& r = inst.rho(u, v);
      if (!r.empty()) res.rho_up[u * n + v] = remap(v, r);
    }
  }
  res.rho_down.clear();
  for (const auto& [k, table] : inst.rho_down) {
    std::size_t w = k / n, v = k % n;
    SetTable t;
    for (Vertex c : out.record.kept[w]) t.push_back(remap(v, table[c]));
    res.rho_down.emplace(k, std::move(t));
  }
  res.finalize();
  return out;
}

}  // namespace hhs
