#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hhs/graph.hpp"
#include "hhs/group.hpp"
#include "hhs/subgroup.hpp"

namespace hhs {

/// Largest vertex count any single ball or tree-of-spaces build may reach.
/// HHS_BUDGET overrides the default.
inline std::size_t vertex_budget() {
  if (const char* env = std::getenv("HHS_BUDGET")) {
    auto v = std::strtoull(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 2000000;
}

/// Ball of radius r in a Cayley graph. Vertex ids follow shortlex order of
/// the normal forms within each distance layer.
struct BallGraph {
  GroupModel model;
  std::vector<Word> generators;
  std::uint32_t radius = 0;
  MetricGraph graph;
  std::vector<Word> words;
  std::unordered_map<Word, Vertex, WordHash> index;
  /// Whether the generating set is the model's declared generators.
  bool standard_generators = true;

  std::size_t size() const { return words.size(); }

  std::optional<Vertex> find(const Word& w) const {
    auto it = index.find(model.normal_form(w));
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  Vertex vertex(const std::string& text) const {
    auto v = find(model.parse(text));
    if (!v) throw Error(ErrorKind::InvalidArgument, "element '" + text + "' is outside the ball of radius " + std::to_string(radius));
    return *v;
  }

  std::string label(Vertex v) const { return model.format(words[v]); }
};

inline std::vector<Word> standard_generators(const GroupModel& m) {
  std::vector<Word> gens;
  for (Letter g = 0; g < m.rank(); ++g) gens.push_back(Word{2 * g});
  return gens;
}

inline BallGraph cayley_ball(const GroupModel& m, std::vector<Word> gens, std::uint32_t r,
                             std::size_t cap = vertex_budget()) {
  BallGraph ball{m, {}, r, {}, {}, {}, true};
  for (auto& g : gens) {
    g = m.normal_form(g);
    if (!g.empty()) ball.generators.push_back(g);
  }
  ball.standard_generators = ball.generators == standard_generators(m);
  std::vector<Word> steps;
  for (const auto& g : ball.generators) {
    steps.push_back(g);
    steps.push_back(m.normal_form(inverse(g)));
  }

  ball.words.push_back(Word{});
  ball.index.emplace(Word{}, 0);
  std::size_t layer_begin = 0;
  for (std::uint32_t k = 0; k < r; ++k) {
    std::size_t layer_end = ball.words.size();
    std::vector<Word> next;
    std::unordered_map<Word, char, WordHash> fresh;
    for (std::size_t i = layer_begin; i < layer_end; ++i) {
      for (const auto& s : steps) {
        Word y = m.multiply(ball.words[i], s);
        if (ball.index.count(y) || fresh.count(y)) continue;
        fresh.emplace(y, 0);
        next.push_back(std::move(y));
      }
    }
    if (ball.words.size() + next.size() > cap) {
      throw Error(ErrorKind::BudgetExceeded, "Cayley ball of radius " + std::to_string(r) + " exceeds " +
                                                 std::to_string(cap) + " vertices");
    }
    std::sort(next.begin(), next.end(), shortlex_less);
    for (auto& w : next) {
      ball.index.emplace(w, static_cast<Vertex>(ball.words.size()));
      ball.words.push_back(std::move(w));
    }
    layer_begin = layer_end;
    if (next.empty()) break;
  }

  std::vector<Edge> edges;
  std::vector<std::string> labels;
  labels.reserve(ball.words.size());
  for (Vertex v = 0; v < ball.words.size(); ++v) {
    labels.push_back(m.format(ball.words[v]));
    for (const auto& s : steps) {
      auto it = ball.index.find(m.multiply(ball.words[v], s));
      if (it != ball.index.end() && v < it->second) edges.emplace_back(v, it->second);
    }
  }
  ball.graph = MetricGraph::from_edges(ball.words.size(), std::move(edges), std::move(labels), true);
  return ball;
}

inline BallGraph cayley_ball(const GroupModel& m, std::uint32_t r, std::size_t cap = vertex_budget()) {
  return cayley_ball(m, standard_generators(m), r, cap);
}

/// A left coset gH met by a ball: its shortlex-least representative and the
/// ball vertices it contains.
struct CosetDescriptor {
  SubgroupSpec subgroup;
  Word representative;
  Vertex rep_vertex = 0;
  VertexSet members;
  /// Membership came from bounded enumeration.
  bool radius_limited = false;
};

/// Partitions the ball into left cosets of h, ordered by representative.
inline std::vector<CosetDescriptor> enumerate_cosets(const BallGraph& ball, const SubgroupSpec& h,
                                                     OracleLimits limits = {}) {
  auto kind = ball.model.effective_kind();
  if (kind != GroupKind::Free && kind != GroupKind::FreeAbelian) {
    limits.length_bound = std::max<std::size_t>(limits.length_bound, 2 * ball.radius);
  }
  SubgroupOracle oracle(ball.model, h, limits);
  std::vector<CosetDescriptor> out;
  const std::size_t n = ball.size();
  if (oracle.exact()) {
    std::map<std::vector<std::int64_t>, std::size_t> by_key;
    for (Vertex v = 0; v < n; ++v) {
      auto key = *oracle.left_coset_key(ball.words[v]);
      auto [it, fresh] = by_key.emplace(std::move(key), out.size());
      if (fresh) out.push_back(CosetDescriptor{h, ball.words[v], v, {}, false});
      out[it->second].members.push_back(v);
    }
    return out;
  }
  auto elements = oracle.enumerated_elements();
  std::vector<char> assigned(n, 0);
  for (Vertex v = 0; v < n; ++v) {
    if (assigned[v]) continue;
    CosetDescriptor c{h, ball.words[v], v, {}, true};
    for (const auto& e : elements) {
      auto it = ball.index.find(ball.model.multiply(ball.words[v], e));
      if (it != ball.index.end() && !assigned[it->second]) {
        assigned[it->second] = 1;
        c.members.push_back(it->second);
      }
    }
    std::sort(c.members.begin(), c.members.end());
    out.push_back(std::move(c));
  }
  return out;
}

inline std::string coset_label(const BallGraph& ball, const CosetDescriptor& c) {
  return ball.model.format(c.representative) + "*" + c.subgroup.label;
}

/// Connected piece of a coset inside the ball.
struct CosetPiece {
  Subgraph subgraph;
  /// Some coset vertices of the ball lie outside the representative's component.
  bool truncated = false;
  /// Non-coset vertices added along generator paths.
  std::size_t thickening = 0;
};

/// The coset's ball vertices plus the ball vertices along each subgroup
/// generator path between them, restricted to the representative's component.
inline CosetPiece coset_subgraph(const BallGraph& ball, const CosetDescriptor& c) {
  if (c.members.empty()) throw Error(ErrorKind::EmptyIntersection, "coset does not meet the ball");
  VertexSet verts = c.members;
  if (ball.standard_generators) {
    std::vector<Word> paths;
    for (const auto& g : c.subgroup.generators) {
      paths.push_back(g);
      paths.push_back(ball.model.normal_form(inverse(g)));
    }
    std::vector<Vertex> extra;
    for (Vertex v : c.members) {
      for (const auto& p : paths) {
        if (p.size() < 2) continue;
        std::vector<Vertex> walk;
        Word cur = ball.words[v];
        bool inside = true;
        for (std::size_t i = 0; i + 1 < p.size() && inside; ++i) {
          cur = ball.model.multiply(cur, Word{p[i]});
          auto it = ball.index.find(cur);
          if (it == ball.index.end()) {
            inside = false;
          } else {
            walk.push_back(it->second);
          }
        }
        if (!inside) continue;
        auto end = ball.index.find(ball.model.multiply(ball.words[v], p));
        if (end == ball.index.end()) continue;
        extra.insert(extra.end(), walk.begin(), walk.end());
      }
    }
    verts = set_union(verts, make_set(std::move(extra)));
  }
  VertexSet comp = component_within(ball.graph, verts, c.rep_vertex);
  CosetPiece piece;
  for (Vertex v : c.members) {
    if (!contains(comp, v)) piece.truncated = true;
  }
  std::size_t member_count = 0;
  for (Vertex v : comp) member_count += contains(c.members, v) ? 1 : 0;
  piece.thickening = comp.size() - member_count;
  piece.subgraph = Subgraph{std::move(comp), coset_label(ball, c)};
  return piece;
}

}  // namespace hhs

namespace hhs {

/// Connected pieces of every coset of every subgroup that meets the ball,
/// grouped by subgroup and ordered by representative.
struct CosetFamily {
  std::vector<Subgraph> members;
  std::vector<CosetDescriptor> cosets;
  /// Index into the subgroup list for each member.
  std::vector<std::uint32_t> subgroup_of;
  std::size_t truncated = 0;
};

inline CosetFamily coset_family(const BallGraph& ball, const std::vector<SubgroupSpec>& subgroups,
                                std::size_t min_size = 1) {
  CosetFamily fam;
  for (std::uint32_t i = 0; i < subgroups.size(); ++i) {
    for (auto& c : enumerate_cosets(ball, subgroups[i])) {
      auto piece = coset_subgraph(ball, c);
      if (piece.subgraph.vertices.size() < min_size) continue;
      fam.truncated += piece.truncated ? 1 : 0;
      fam.members.push_back(std::move(piece.subgraph));
      fam.cosets.push_back(std::move(c));
      fam.subgroup_of.push_back(i);
    }
  }
  return fam;
}

}  // namespace hhs
