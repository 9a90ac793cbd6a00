#pragma once

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hhs/embedding.hpp"
#include "hhs/hhs_instance.hpp"

namespace hhs {

using Json = nlohmann::json;

namespace detail {

inline Json set_json(std::span<const Vertex> s) { return Json(std::vector<Vertex>(s.begin(), s.end())); }

inline VertexSet set_from(const Json& j) { return j.get<VertexSet>(); }

inline Json table_json(const SetTable& t) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < t.size(); ++i) rows.push_back(set_json(t[i]));
  return rows;
}

inline SetTable table_from(const Json& j) {
  SetTable t;
  for (const auto& row : j) t.push_back(set_from(row));
  return t;
}

inline char relation_code(Relation r) {
  switch (r) {
    case Relation::Equal: return 'E';
    case Relation::Nested: return 'N';
    case Relation::Contains: return 'C';
    case Relation::Orthogonal: return 'O';
    case Relation::Transverse: return 'T';
  }
  return '?';
}

inline Relation relation_from_code(char c) {
  switch (c) {
    case 'E': return Relation::Equal;
    case 'N': return Relation::Nested;
    case 'C': return Relation::Contains;
    case 'O': return Relation::Orthogonal;
    case 'T': return Relation::Transverse;
  }
  throw Error(ErrorKind::InvalidArgument, std::string("unknown relation code '") + c + "'");
}

inline const Json& need(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::InvalidArgument, std::string("bundle is missing '") + key + "'");
  return *it;
}

}  // namespace detail

inline const char* kind_name(GroupKind k) {
  switch (k) {
    case GroupKind::Free: return "free";
    case GroupKind::FreeAbelian: return "free-abelian";
    case GroupKind::Raag: return "raag";
    case GroupKind::FreeProduct: return "free-product";
  }
  return "?";
}

inline Json to_json(const GroupModel& m) {
  Json j{{"kind", kind_name(m.kind())}};
  if (m.kind() == GroupKind::FreeProduct) {
    Json f = Json::array();
    for (const auto& g : m.factors()) f.push_back(to_json(g));
    j["factors"] = std::move(f);
    return j;
  }
  j["generators"] = m.labels();
  if (m.kind() == GroupKind::Raag) {
    Json e = Json::array();
    for (auto [u, v] : m.raag_edges()) e.push_back({m.labels()[u], m.labels()[v]});
    j["edges"] = std::move(e);
  }
  return j;
}

inline GroupModel group_from_json(const Json& j) {
  auto kind = detail::need(j, "kind").get<std::string>();
  if (kind == "free-product") {
    std::vector<GroupModel> f;
    for (const auto& g : detail::need(j, "factors")) f.push_back(group_from_json(g));
    return GroupModel::free_product(std::move(f));
  }
  auto labels = detail::need(j, "generators").get<std::vector<std::string>>();
  if (kind == "free") return GroupModel::free(labels);
  if (kind == "free-abelian") return GroupModel::free_abelian(labels);
  if (kind == "raag") {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    GroupModel probe = GroupModel::free(labels);
    for (const auto& e : j.value("edges", Json::array())) {
      auto pair = e.get<std::vector<std::string>>();
      if (pair.size() != 2) throw Error(ErrorKind::InvalidArgument, "a defining-graph edge needs two generators");
      edges.emplace_back(probe.generator_index(pair[0]), probe.generator_index(pair[1]));
    }
    return GroupModel::raag(labels, edges);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown group kind '" + kind + "'");
}

inline Json to_json(const MetricGraph& g) {
  Json edges = Json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  Json j{{"vertices", g.vertex_count()}, {"edges", std::move(edges)}};
  if (g.has_labels()) j["labels"] = g.labels();
  return j;
}

inline MetricGraph graph_from_json(const Json& j) {
  std::vector<Edge> edges;
  for (const auto& e : detail::need(j, "edges")) edges.emplace_back(e.at(0).get<Vertex>(), e.at(1).get<Vertex>());
  return MetricGraph::from_edges(detail::need(j, "vertices").get<std::size_t>(), std::move(edges),
                                 j.value("labels", std::vector<std::string>{}));
}

inline Json to_json(const SubgroupSpec& h, const GroupModel& m) {
  std::vector<std::string> gens;
  for (const auto& w : h.generators) gens.push_back(m.format(w));
  return {{"label", h.label}, {"generators", gens}};
}

inline SubgroupSpec subgroup_from_json(const Json& j, const GroupModel& m) {
  SubgroupSpec h{detail::need(j, "label").get<std::string>(), {}};
  for (const auto& w : detail::need(j, "generators")) h.generators.push_back(m.normal_form(m.parse(w.get<std::string>())));
  return h;
}

/// Spaces shared between indices (or with X) are written once and referenced
/// by position, so sharing survives a reload.
inline Json to_json(const HHSInstance& inst) {
  std::map<const MetricGraph*, std::size_t> slot;
  Json spaces = Json::array();
  auto space_id = [&](const SpacePtr& p) {
    auto [it, fresh] = slot.emplace(p.get(), slot.size());
    if (fresh) spaces.push_back(to_json(*p));
    return it->second;
  };
  const std::size_t n = inst.size();
  Json j;
  j["total"] = space_id(inst.total);
  Json idx = Json::array();
  for (const auto& u : inst.indices) {
    idx.push_back({{"label", u.label}, {"space", space_id(u.space)}, {"provenance", u.provenance}, {"orbit", u.orbit_tag}});
  }
  j["indices"] = std::move(idx);
  j["spaces"] = std::move(spaces);
  Json rel = Json::array();
  for (std::size_t u = 0; u < n; ++u) {
    std::string row;
    for (std::size_t v = 0; v < n; ++v) row += detail::relation_code(inst.rel(u, v));
    rel.push_back(std::move(row));
  }
  j["relations"] = std::move(rel);
  j["top"] = inst.top;
  j["xi"] = inst.xi;
  Json pi = Json::array();
  for (const auto& t : inst.pi) pi.push_back(detail::table_json(t));
  j["pi"] = std::move(pi);
  Json up = Json::array();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      const auto& s = inst.rho(u, v);
      if (!s.empty()) up.push_back({u, v, s});
    }
  }
  j["rho_up"] = std::move(up);
  Json down = Json::array();
  for (const auto& [key, table] : inst.rho_down) {
    down.push_back({{"from", key / n}, {"to", key % n}, {"default", inst.default_rho.count(key) > 0},
                    {"rows", detail::table_json(table)}});
  }
  j["rho_down"] = std::move(down);
  if (inst.cayley) {
    const auto& b = *inst.cayley->ball;
    std::vector<std::string> gens;
    for (const auto& w : b.generators) gens.push_back(b.model.format(w));
    j["cayley"] = {{"group", to_json(b.model)}, {"generators", gens}, {"radius", b.radius},
                   {"top_is_cayley", inst.cayley->top_is_cayley}};
  }
  return j;
}

inline HHSInstance instance_from_json(const Json& j) {
  std::vector<SpacePtr> spaces;
  for (const auto& s : detail::need(j, "spaces")) spaces.push_back(std::make_shared<const MetricGraph>(graph_from_json(s)));
  auto space_at = [&](const Json& id) {
    auto k = id.get<std::size_t>();
    if (k >= spaces.size()) throw Error(ErrorKind::InvalidArgument, "space reference out of range");
    return spaces[k];
  };
  HHSInstance inst;
  inst.total = space_at(detail::need(j, "total"));
  for (const auto& u : detail::need(j, "indices")) {
    inst.indices.push_back(IndexElement{u.at("label").get<std::string>(), space_at(u.at("space")),
                                        u.at("provenance").get<std::string>(), u.at("orbit").get<std::string>()});
  }
  const std::size_t n = inst.size();
  for (const auto& row : detail::need(j, "relations")) {
    auto s = row.get<std::string>();
    if (s.size() != n) throw Error(ErrorKind::InvalidArgument, "relation row has the wrong length");
    for (char c : s) inst.relations.push_back(detail::relation_from_code(c));
  }
  inst.top = detail::need(j, "top").get<std::size_t>();
  inst.xi = detail::need(j, "xi").get<std::uint32_t>();
  for (const auto& t : detail::need(j, "pi")) inst.pi.push_back(detail::table_from(t));
  inst.rho_up.assign(n * n, {});
  for (const auto& e : detail::need(j, "rho_up")) {
    auto u = e.at(0).get<std::size_t>(), v = e.at(1).get<std::size_t>();
    if (u >= n || v >= n) throw Error(ErrorKind::InvalidArgument, "rho entry out of range");
    inst.rho_up[u * n + v] = detail::set_from(e.at(2));
  }
  for (const auto& e : detail::need(j, "rho_down")) {
    std::uint64_t key = e.at("from").get<std::uint64_t>() * n + e.at("to").get<std::uint64_t>();
    inst.rho_down.emplace(key, detail::table_from(e.at("rows")));
    if (e.at("default").get<bool>()) inst.default_rho.insert(key);
  }
  if (auto it = j.find("cayley"); it != j.end()) {
    auto m = group_from_json(it->at("group"));
    std::vector<Word> gens;
    for (const auto& w : it->at("generators")) gens.push_back(m.parse(w.get<std::string>()));
    auto ball = std::make_shared<const BallGraph>(cayley_ball(m, gens, it->at("radius").get<std::uint32_t>()));
    if (!(ball->graph == *inst.total) && it->at("top_is_cayley").get<bool>()) {
      throw Error(ErrorKind::StructureMismatch, "rebuilt Cayley ball differs from the stored total space");
    }
    inst.cayley = CayleyTag{ball, it->at("top_is_cayley").get<bool>()};
  }
  inst.finalize();
  return inst;
}

/// The persistent part of an augmented structure. Lookup tables derived from
/// it (coned top, ambient words) are not stored.
struct AugmentedBundle {
  HHSInstance base;
  std::vector<SubgroupStructure> subgroups;
  HHSInstance result;
  std::vector<LevelSet> levels;
  std::size_t unreached_rho = 0;

  bool operator==(const AugmentedBundle& o) const {
    if (!(base == o.base) || !(result == o.result) || unreached_rho != o.unreached_rho ||
        subgroups.size() != o.subgroups.size() || levels.size() != o.levels.size()) {
      return false;
    }
    for (std::size_t i = 0; i < subgroups.size(); ++i) {
      if (!(subgroups[i].subgroup == o.subgroups[i].subgroup) || !(subgroups[i].structure == o.subgroups[i].structure)) {
        return false;
      }
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const auto& a = levels[i];
      const auto& b = o.levels[i];
      if (a.subgroup != b.subgroup || a.offset != b.offset || a.member_h != b.member_h ||
          a.coset.representative != b.coset.representative || a.coset.rep_vertex != b.coset.rep_vertex ||
          a.coset.members != b.coset.members || a.coset.radius_limited != b.coset.radius_limited) {
        return false;
      }
    }
    return true;
  }
};

inline AugmentedBundle bundle_of(const AugmentedStructure& aug) {
  return {aug.base, aug.subgroups, aug.result, aug.levels, aug.unreached_rho};
}

inline Json to_json(const AugmentedBundle& b) {
  const GroupModel& m = b.base.cayley ? b.base.cayley->ball->model : GroupModel();
  Json subs = Json::array();
  for (const auto& s : b.subgroups) subs.push_back({{"subgroup", to_json(s.subgroup, m)}, {"structure", to_json(s.structure)}});
  Json levels = Json::array();
  for (const auto& l : b.levels) {
    levels.push_back({{"subgroup", l.subgroup},
                      {"offset", l.offset},
                      {"representative", m.format(l.coset.representative)},
                      {"rep_vertex", l.coset.rep_vertex},
                      {"members", l.coset.members},
                      {"radius_limited", l.coset.radius_limited},
                      {"member_h", l.member_h}});
  }
  return {{"format", "hhs-augmented-bundle"}, {"version", 1},        {"base", to_json(b.base)},
          {"subgroups", std::move(subs)},     {"result", to_json(b.result)}, {"levels", std::move(levels)},
          {"unreached_rho", b.unreached_rho}};
}

inline AugmentedBundle augmented_from_json(const Json& j) {
  if (j.value("format", "") != "hhs-augmented-bundle") throw Error(ErrorKind::InvalidArgument, "not an augmented bundle");
  AugmentedBundle b;
  b.base = instance_from_json(detail::need(j, "base"));
  if (!b.base.cayley) throw Error(ErrorKind::MissingStructure, "bundle base has no Cayley tag");
  const GroupModel& m = b.base.cayley->ball->model;
  for (const auto& s : detail::need(j, "subgroups")) {
    b.subgroups.push_back({subgroup_from_json(s.at("subgroup"), m), instance_from_json(s.at("structure"))});
  }
  b.result = instance_from_json(detail::need(j, "result"));
  for (const auto& l : detail::need(j, "levels")) {
    LevelSet level;
    level.subgroup = l.at("subgroup").get<std::size_t>();
    if (level.subgroup >= b.subgroups.size()) throw Error(ErrorKind::InvalidArgument, "level names an unknown subgroup");
    level.offset = l.at("offset").get<std::size_t>();
    level.coset.subgroup = b.subgroups[level.subgroup].subgroup;
    level.coset.representative = m.normal_form(m.parse(l.at("representative").get<std::string>()));
    level.coset.rep_vertex = l.at("rep_vertex").get<Vertex>();
    level.coset.members = l.at("members").get<VertexSet>();
    level.coset.radius_limited = l.at("radius_limited").get<bool>();
    level.member_h = l.at("member_h").get<std::vector<Vertex>>();
    b.levels.push_back(std::move(level));
  }
  b.unreached_rho = detail::need(j, "unreached_rho").get<std::size_t>();
  return b;
}

}  // namespace hhs
