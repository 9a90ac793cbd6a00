#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "hhs/cayley.hpp"
#include "hhs/graph.hpp"
#include "hhs/metric.hpp"

namespace hhs {

/// Relation of a row index to a column index. Nested means the row is
/// properly nested in the column, Contains the converse.
enum class Relation : std::uint8_t { Equal, Nested, Contains, Orthogonal, Transverse };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::Equal: return "equal";
    case Relation::Nested: return "nested";
    case Relation::Contains: return "contains";
    case Relation::Orthogonal: return "orthogonal";
    case Relation::Transverse: return "transverse";
  }
  return "?";
}

inline Relation relation_from_string(const std::string& s) {
  for (Relation r : {Relation::Equal, Relation::Nested, Relation::Contains, Relation::Orthogonal, Relation::Transverse}) {
    if (s == to_string(r)) return r;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown relation '" + s + "'");
}

inline Relation converse(Relation r) {
  if (r == Relation::Nested) return Relation::Contains;
  if (r == Relation::Contains) return Relation::Nested;
  return r;
}

using SpacePtr = std::shared_ptr<const MetricGraph>;

struct IndexElement {
  std::string label;
  SpacePtr space;
  /// Where the index came from: "base", "factor", "coset", "product-a", ...
  std::string provenance = "base";
  /// Indices with equal tags are translates of one another.
  std::string orbit_tag;
};

/// Identifies the vertices of the total space with group elements.
struct CayleyTag {
  std::shared_ptr<const BallGraph> ball;
  /// CS is the same Cayley graph and pi_S is the identity.
  bool top_is_cayley = false;
};

/// Finite model of a hierarchically hyperbolic space. Fields are filled by a
/// builder, then finalize() validates them, fills default downward rho maps
/// and caches distances. Instances are treated as immutable afterwards.
struct HHSInstance {
  std::shared_ptr<const MetricGraph> total;
  std::vector<IndexElement> indices;
  /// Row-major n x n.
  std::vector<Relation> relations;
  std::size_t top = 0;
  /// pi[U] has one row per vertex of X holding vertices of CU.
  std::vector<SetTable> pi;
  /// Entry U*n+V holds rho^U_V inside CV for U nested in or transverse to V;
  /// empty where undefined or unreached.
  std::vector<VertexSet> rho_up;
  /// Key W*n+V for V properly nested in W; one row per vertex of CW.
  std::map<std::uint64_t, SetTable> rho_down;
  /// Downward maps filled by the generic fallback rather than a construction.
  std::set<std::uint64_t> default_rho;
  /// Declared bound on projection and rho diameters.
  std::uint32_t xi = 0;
  std::optional<CayleyTag> cayley;

  std::size_t size() const { return indices.size(); }
  const MetricGraph& X() const { return *total; }
  const MetricGraph& space(std::size_t u) const { return *indices[u].space; }
  std::uint64_t key(std::size_t u, std::size_t v) const { return static_cast<std::uint64_t>(u) * size() + v; }

  Relation rel(std::size_t u, std::size_t v) const { return relations[u * size() + v]; }
  /// U is nested in V, equality included.
  bool nested(std::size_t u, std::size_t v) const {
    Relation r = rel(u, v);
    return r == Relation::Equal || r == Relation::Nested;
  }
  bool properly_nested(std::size_t u, std::size_t v) const { return rel(u, v) == Relation::Nested; }
  bool orthogonal(std::size_t u, std::size_t v) const { return rel(u, v) == Relation::Orthogonal; }
  bool transverse(std::size_t u, std::size_t v) const { return rel(u, v) == Relation::Transverse; }

  void set_relation(std::size_t u, std::size_t v, Relation r) {
    relations[u * size() + v] = r;
    relations[v * size() + u] = converse(r);
  }

  std::span<const Vertex> pi_of(std::size_t u, Vertex x) const { return pi[u][x]; }
  const VertexSet& rho(std::size_t u, std::size_t v) const { return rho_up[key(u, v)]; }

  /// rho^W_V evaluated at the vertex c of CW.
  std::span<const Vertex> rho_down_at(std::size_t w, std::size_t v, Vertex c) const {
    return rho_down.at(key(w, v))[c];
  }

  /// Indices properly nested in u.
  std::vector<std::size_t> below(std::size_t u) const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < size(); ++v) {
      if (properly_nested(v, u)) out.push_back(v);
    }
    return out;
  }

  const DistanceMatrix& dist(std::size_t u) const { return *space_distances_[u]; }
  const DistanceMatrix& x_dist() const { return *x_distances_; }

  /// Least distance between two vertex sets of CU; kUnreached if either is empty.
  std::uint32_t set_distance(std::size_t u, std::span<const Vertex> a, std::span<const Vertex> b) const {
    const auto& d = dist(u);
    std::uint32_t best = kUnreached;
    for (Vertex x : a) {
      for (Vertex y : b) best = std::min(best, d(x, y));
    }
    return best;
  }

  std::uint32_t set_diam(std::size_t u, std::span<const Vertex> a) const { return set_diameter(dist(u), a); }

  /// d_U(x, y) = diam of pi_U(x) union pi_U(y).
  std::uint32_t d_index(std::size_t u, Vertex x, Vertex y) const {
    auto a = pi_of(u, x);
    auto b = pi_of(u, y);
    std::uint32_t best = std::max(set_diam(u, a), set_diam(u, b));
    const auto& d = dist(u);
    for (Vertex p : a) {
      for (Vertex q : b) best = std::max(best, d(p, q));
    }
    return best;
  }

  /// Validates shapes, fills default downward rho maps and caches all-pairs
  /// distances of X and every index space.
  void finalize() {
    const std::size_t n = size();
    if (!total) throw Error(ErrorKind::InvalidArgument, "instance has no total space");
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "instance has an empty index set");
    if (relations.size() != n * n) throw Error(ErrorKind::InvalidArgument, "relation matrix has the wrong shape");
    if (pi.size() != n) throw Error(ErrorKind::InvalidArgument, "projection table count does not match index count");
    if (rho_up.empty()) rho_up.assign(n * n, {});
    if (rho_up.size() != n * n) throw Error(ErrorKind::InvalidArgument, "rho table has the wrong shape");
    if (top >= n) throw Error(ErrorKind::InvalidArgument, "top index out of range");
    for (std::size_t u = 0; u < n; ++u) {
      if (!indices[u].space) throw Error(ErrorKind::InvalidArgument, "index " + indices[u].label + " has no space");
      if (pi[u].size() != X().vertex_count()) {
        throw Error(ErrorKind::InvalidArgument, "projection table of " + indices[u].label + " has the wrong row count");
      }
      for (Vertex x = 0; x < X().vertex_count(); ++x) {
        for (Vertex c : pi[u][x]) {
          if (c >= space(u).vertex_count()) {
            throw Error(ErrorKind::InvalidArgument, "projection to " + indices[u].label + " leaves its space");
          }
        }
      }
    }
    fill_default_rho();
    cache_distances();
  }

  bool operator==(const HHSInstance& o) const {
    if (size() != o.size() || top != o.top || xi != o.xi || relations != o.relations || pi != o.pi ||
        rho_up != o.rho_up || rho_down != o.rho_down || default_rho != o.default_rho || !(X() == o.X())) {
      return false;
    }
    for (std::size_t u = 0; u < size(); ++u) {
      const auto& a = indices[u];
      const auto& b = o.indices[u];
      if (a.label != b.label || a.provenance != b.provenance || a.orbit_tag != b.orbit_tag || !(*a.space == *b.space)) {
        return false;
      }
    }
    return cayley.has_value() == o.cayley.has_value();
  }

 private:
  /// For each vertex c of CW, a point of X whose projection reaches c, or
  /// failing that reaches the nearest covered vertex of CW.
  std::vector<Vertex> preimage_representatives(std::size_t w) const {
    const auto& cw = space(w);
    std::vector<Vertex> rep(cw.vertex_count(), kUnreached);
    for (Vertex x = 0; x < X().vertex_count(); ++x) {
      for (Vertex c : pi[w][x]) {
        if (rep[c] == kUnreached) rep[c] = x;
      }
    }
    std::vector<Vertex> queue;
    for (Vertex c = 0; c < cw.vertex_count(); ++c) {
      if (rep[c] != kUnreached) queue.push_back(c);
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
      Vertex c = queue[head];
      for (Vertex nb : cw.neighbors(c)) {
        if (rep[nb] == kUnreached) {
          rep[nb] = rep[c];
          queue.push_back(nb);
        }
      }
    }
    return rep;
  }

  void fill_default_rho() {
    const std::size_t n = size();
    for (std::size_t w = 0; w < n; ++w) {
      std::vector<Vertex> rep;
      for (std::size_t v = 0; v < n; ++v) {
        if (!properly_nested(v, w) || rho_down.count(key(w, v))) continue;
        if (rep.empty()) rep = preimage_representatives(w);
        SetTable table;
        for (Vertex c = 0; c < rep.size(); ++c) {
          if (rep[c] == kUnreached) {
            table.push_back({});
          } else {
            table.push_back(pi[v][rep[c]]);
          }
        }
        rho_down.emplace(key(w, v), std::move(table));
        default_rho.insert(key(w, v));
      }
    }
  }

  void cache_distances() {
    std::unordered_map<const MetricGraph*, std::shared_ptr<const DistanceMatrix>> cache;
    auto get = [&](const MetricGraph* g) {
      auto it = cache.find(g);
      if (it != cache.end()) return it->second;
      auto dm = std::make_shared<const DistanceMatrix>(*g);
      cache.emplace(g, dm);
      return dm;
    };
    space_distances_.clear();
    for (const auto& idx : indices) space_distances_.push_back(get(idx.space.get()));
    x_distances_ = get(total.get());
  }

  std::vector<std::shared_ptr<const DistanceMatrix>> space_distances_;
  std::shared_ptr<const DistanceMatrix> x_distances_;
};

/// Index set {S} with CS = X and pi_S the identity.
inline HHSInstance trivial_instance(std::shared_ptr<const MetricGraph> x, std::string label = "S") {
  HHSInstance inst;
  inst.total = x;
  inst.indices.push_back(IndexElement{std::move(label), x, "base", "S"});
  inst.relations = {Relation::Equal};
  SetTable id;
  for (Vertex v = 0; v < x->vertex_count(); ++v) id.push_back(std::span<const Vertex>(&v, 1));
  inst.pi.push_back(std::move(id));
  inst.finalize();
  return inst;
}

/// Trivial structure on a Cayley ball, tagged so that CS is the Cayley graph.
inline HHSInstance cayley_instance(const BallGraph& ball, std::string label = "S") {
  auto shared = std::make_shared<const BallGraph>(ball);
  auto x = std::shared_ptr<const MetricGraph>(shared, &shared->graph);
  HHSInstance inst = trivial_instance(x, std::move(label));
  inst.cayley = CayleyTag{shared, true};
  return inst;
}

/// The integers on one generator, truncated to [-radius, radius].
inline HHSInstance line_instance(const std::string& generator, std::uint32_t radius) {
  return cayley_instance(cayley_ball(GroupModel::free({generator}), radius), "line:" + generator);
}

/// Product structure: X is the Cartesian product graph, the two index sets
/// are mutually orthogonal and nested in a new top element whose space is a
/// single point.
inline HHSInstance product_hhs(const HHSInstance& a, const HHSInstance& b) {
  const std::size_t na = a.X().vertex_count(), nb = b.X().vertex_count();
  if (na * nb > vertex_budget()) {
    throw Error(ErrorKind::BudgetExceeded, "product space would have " + std::to_string(na * nb) + " vertices");
  }
  auto vid = [nb](Vertex x, Vertex y) { return static_cast<Vertex>(x * nb + y); };
  std::vector<Edge> edges;
  for (Vertex x = 0; x < na; ++x) {
    for (Vertex y = 0; y < nb; ++y) {
      for (Vertex w : b.X().neighbors(y)) {
        if (y < w) edges.emplace_back(vid(x, y), vid(x, w));
      }
      for (Vertex w : a.X().neighbors(x)) {
        if (x < w) edges.emplace_back(vid(x, y), vid(w, y));
      }
    }
  }
  std::vector<std::string> labels;
  if (a.X().has_labels() || b.X().has_labels()) {
    for (Vertex x = 0; x < na; ++x) {
      for (Vertex y = 0; y < nb; ++y) {
        std::string la = a.X().label(x), lb = b.X().label(y);
        if (la == "1") {
          labels.push_back(lb);
        } else if (lb == "1") {
          labels.push_back(la);
        } else {
          labels.push_back(la + " " + lb);
        }
      }
    }
  }
  HHSInstance p;
  p.total = std::make_shared<const MetricGraph>(MetricGraph::from_edges(na * nb, std::move(edges), std::move(labels)));
  const std::size_t ka = a.size(), kb = b.size(), n = ka + kb + 1;
  for (const auto& idx : a.indices) p.indices.push_back(IndexElement{idx.label + "@A", idx.space, "product-a", idx.orbit_tag});
  for (const auto& idx : b.indices) p.indices.push_back(IndexElement{idx.label + "@B", idx.space, "product-b", idx.orbit_tag});
  auto point = std::make_shared<const MetricGraph>(MetricGraph::from_edges(1, {}));
  p.indices.push_back(IndexElement{"S", point, "product-top", "S"});
  p.top = n - 1;
  p.relations.assign(n * n, Relation::Orthogonal);
  for (std::size_t u = 0; u < ka; ++u) {
    for (std::size_t v = 0; v < ka; ++v) p.relations[u * n + v] = a.rel(u, v);
  }
  for (std::size_t u = 0; u < kb; ++u) {
    for (std::size_t v = 0; v < kb; ++v) p.relations[(ka + u) * n + ka + v] = b.rel(u, v);
  }
  p.relations[p.top * n + p.top] = Relation::Equal;
  for (std::size_t u = 0; u < p.top; ++u) p.set_relation(u, p.top, Relation::Nested);

  for (std::size_t u = 0; u < ka; ++u) {
    SetTable t;
    for (Vertex x = 0; x < na; ++x) {
      for (Vertex y = 0; y < nb; ++y) t.push_back(a.pi_of(u, x));
    }
    p.pi.push_back(std::move(t));
  }
  for (std::size_t u = 0; u < kb; ++u) {
    SetTable t;
    for (Vertex x = 0; x < na; ++x) {
      for (Vertex y = 0; y < nb; ++y) t.push_back(b.pi_of(u, y));
    }
    p.pi.push_back(std::move(t));
  }
  SetTable to_point;
  const Vertex zero = 0;
  for (std::size_t i = 0; i < na * nb; ++i) to_point.push_back(std::span<const Vertex>(&zero, 1));
  p.pi.push_back(std::move(to_point));

  p.rho_up.assign(n * n, {});
  for (std::size_t u = 0; u < ka; ++u) {
    for (std::size_t v = 0; v < ka; ++v) p.rho_up[u * n + v] = a.rho(u, v);
  }
  for (std::size_t u = 0; u < kb; ++u) {
    for (std::size_t v = 0; v < kb; ++v) p.rho_up[(ka + u) * n + ka + v] = b.rho(u, v);
  }
  for (std::size_t u = 0; u < p.top; ++u) p.rho_up[u * n + p.top] = {0};
  for (const auto& [k, table] : a.rho_down) p.rho_down.emplace((k / ka) * n + k % ka, table);
  for (const auto& [k, table] : b.rho_down) p.rho_down.emplace((ka + k / kb) * n + ka + k % kb, table);
  for (auto k : a.default_rho) p.default_rho.insert((k / ka) * n + k % ka);
  for (auto k : b.default_rho) p.default_rho.insert((ka + k / kb) * n + ka + k % kb);
  p.xi = std::max(a.xi, b.xi);
  p.finalize();
  return p;
}

}  // namespace hhs
