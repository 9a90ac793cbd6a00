#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hhs/coneoff.hpp"
#include "hhs/embedding.hpp"
#include "hhs/factor_system.hpp"
#include "hhs/gog.hpp"
#include "hhs/hhs_checks.hpp"
#include "hhs/serialize.hpp"

namespace hhs {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Configuration failure. `field` is a JSON pointer into the config; syntax
/// errors carry a line and column instead.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(ErrorKind::ConfigError, where(field, line, column) + what),
        field_(std::move(field)),
        line_(line),
        column_(column) {}

  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string where(const std::string& field, std::size_t line, std::size_t column) {
    if (line > 0) return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
    return field.empty() ? std::string() : field + ": ";
  }

  std::string field_;
  std::size_t line_, column_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

/// Hash of the canonical (sorted keys, no whitespace) dump of a config.
inline std::string config_hash(const Json& config) { return "fnv1a64:" + hex64(fnv1a64(config.dump())); }

namespace detail {

/// Typed access to one config object; rejects keys outside `allowed`.
class Fields {
 public:
  Fields(const Json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) throw ConfigError(path_ + "/" + key, "unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "/" + key; }
  const std::string& path() const { return path_; }
  const Json& raw(const std::string& key) const { return j_.at(key); }

  template <class T>
  T need(const std::string& key) const {
    if (!has(key)) throw ConfigError(at(key), "required field is missing");
    return as<T>(j_.at(key), at(key));
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? as<T>(j_.at(key), at(key)) : fallback;
  }

  template <class T>
  static T as(const Json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(path, "expected a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
    } else {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      for (std::size_t i = 0; i < v.size(); ++i) as<typename T::value_type>(v[i], path + "/" + std::to_string(i));
    }
    return v.get<T>();
  }

 private:
  const Json& j_;
  std::string path_;
};

inline Word parse_word_at(const GroupModel& m, const std::string& text, const std::string& path) {
  try {
    return m.normal_form(m.parse(text));
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace detail

struct SubgroupEntry {
  std::string group;
  SubgroupSpec spec;
};

struct GogVertexSpec {
  std::string name, group;
  std::optional<std::uint32_t> radius;
};

struct GogEdgeSpec {
  std::string name, target, group;
  std::vector<std::string> near, target_images;
};

struct GogMoveSpec {
  MoveType type = MoveType::StarVertex;
  /// Star-vertex: new vertex name and group. Edge-join: source vertex name.
  std::string vertex, group;
  std::vector<GogEdgeSpec> edges;
};

/// One validated operation. Fields not used by `op` keep their defaults.
struct OperationSpec {
  std::string op, label, field;
  Json params;
  std::uint32_t radius = 4;
  std::uint64_t seed = 1;
  bool stability = false;
  std::string group;
  std::vector<std::string> subgroups;
  // delta, coneoff
  std::uint64_t samples = 2000000;
  std::uint64_t exhaustive_quadruples = 50000000;
  // factor-system, hhs-check, distance-formula, hqc
  std::optional<std::uint32_t> core_radius;
  std::vector<std::uint32_t> eps_grid{0, 1, 2};
  bool exhaustive = true;
  bool force = false;
  std::uint32_t s = 3;
  std::string y;
  std::vector<std::uint32_t> grid{0, 1, 2, 3};
  std::uint32_t slope = 1, intercept = 1;
  // embed
  std::vector<std::string> T;
  // construct
  std::optional<std::uint32_t> line_radius;
  bool verify = true;
  std::size_t equivariance_samples = 100;
  bool bundle = false;
  // gog
  std::vector<GogVertexSpec> vertices;
  std::vector<GogMoveSpec> moves;
  std::size_t closure_budget = 3;
  CombinationOptions combination{};
  std::optional<std::pair<std::uint32_t, std::uint32_t>> tree;
};

inline const std::set<std::string>& operation_names() {
  static const std::set<std::string> names{"delta", "coneoff", "factor-system", "hhs-check", "distance-formula",
                                           "hqc",   "embed",   "construct",     "gog"};
  return names;
}

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  std::uint32_t radius = 4;
  std::optional<std::size_t> budget;
  std::string output;
  bool stability = false;
  std::map<std::string, GroupModel> groups;
  std::map<std::string, SubgroupEntry> subgroups;
  std::vector<OperationSpec> operations;
  /// The validated config in canonical form; the provenance hash is taken over it.
  Json config;

  const GroupModel& group(const std::string& name) const { return groups.at(name); }
};

namespace detail {

inline GroupModel read_group(const Json& all, const std::string& name, std::set<std::string>& visiting,
                             std::map<std::string, GroupModel>& done);

inline GroupModel read_group_value(const Json& v, const std::string& path, const Json& all,
                                   std::set<std::string>& visiting, std::map<std::string, GroupModel>& done) {
  if (v.is_string()) {
    auto ref = v.get<std::string>();
    if (!all.contains(ref)) throw ConfigError(path, "undefined group '" + ref + "'");
    return read_group(all, ref, visiting, done);
  }
  Fields f(v, path, {"kind", "generators", "edges", "factors"});
  auto kind = f.need<std::string>("kind");
  if (kind == "free-product") {
    if (!f.has("factors") || !f.raw("factors").is_array()) throw ConfigError(f.at("factors"), "expected an array");
    std::vector<GroupModel> factors;
    const auto& arr = f.raw("factors");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      factors.push_back(read_group_value(arr[i], f.at("factors") + "/" + std::to_string(i), all, visiting, done));
    }
    try {
      return GroupModel::free_product(std::move(factors));
    } catch (const Error& e) {
      throw ConfigError(f.at("factors"), e.what());
    }
  }
  auto labels = f.need<std::vector<std::string>>("generators");
  try {
    if (kind == "free") return GroupModel::free(labels);
    if (kind == "free-abelian") return GroupModel::free_abelian(labels);
    if (kind != "raag") throw ConfigError(f.at("kind"), "unknown group kind '" + kind + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(f.at("generators"), e.what());
  }
  auto edges = f.get<std::vector<std::vector<std::string>>>("edges", {});
  std::vector<std::pair<std::uint32_t, std::uint32_t>> idx;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::string at = f.at("edges") + "/" + std::to_string(i);
    if (edges[i].size() != 2) throw ConfigError(at, "an edge joins exactly two generators");
    std::uint32_t ends[2];
    for (int k = 0; k < 2; ++k) {
      auto it = std::find(labels.begin(), labels.end(), edges[i][k]);
      if (it == labels.end()) throw ConfigError(at + "/" + std::to_string(k), "unknown generator '" + edges[i][k] + "'");
      ends[k] = static_cast<std::uint32_t>(it - labels.begin());
    }
    idx.emplace_back(ends[0], ends[1]);
  }
  try {
    return GroupModel::raag(labels, idx);
  } catch (const Error& e) {
    throw ConfigError(f.at("edges"), e.what());
  }
}

inline GroupModel read_group(const Json& all, const std::string& name, std::set<std::string>& visiting,
                             std::map<std::string, GroupModel>& done) {
  if (auto it = done.find(name); it != done.end()) return it->second;
  if (!visiting.insert(name).second) throw ConfigError("/groups/" + name, "group refers to itself");
  auto m = read_group_value(all.at(name), "/groups/" + name, all, visiting, done);
  visiting.erase(name);
  done.emplace(name, m);
  return m;
}

inline std::string subgroup_label(const std::vector<std::string>& gens) {
  std::string out = "<";
  for (std::size_t i = 0; i < gens.size(); ++i) out += (i ? ", " : "") + gens[i];
  return out + ">";
}

inline std::string group_ref(const Fields& f, const Scenario& sc, const std::string& key) {
  auto g = f.need<std::string>(key);
  if (!sc.groups.count(g)) throw ConfigError(f.at(key), "undefined group '" + g + "'");
  return g;
}

inline std::vector<std::string> subgroup_refs(const Fields& f, const Scenario& sc, const std::string& group) {
  auto subs = f.get<std::vector<std::string>>("subgroups", {});
  for (std::size_t i = 0; i < subs.size(); ++i) {
    std::string at = f.at("subgroups") + "/" + std::to_string(i);
    auto it = sc.subgroups.find(subs[i]);
    if (it == sc.subgroups.end()) throw ConfigError(at, "undefined subgroup '" + subs[i] + "'");
    if (it->second.group != group) {
      throw ConfigError(at, "subgroup '" + subs[i] + "' lives in group '" + it->second.group + "', not '" + group + "'");
    }
  }
  return subs;
}

inline GogEdgeSpec read_gog_edge(const Json& j, const std::string& path, const Scenario& sc) {
  Fields f(j, path, {"name", "target", "group", "near", "target_images"});
  GogEdgeSpec e;
  e.name = f.need<std::string>("name");
  e.target = f.need<std::string>("target");
  e.group = group_ref(f, sc, "group");
  e.near = f.need<std::vector<std::string>>("near");
  e.target_images = f.need<std::vector<std::string>>("target_images");
  return e;
}

/// Checks vertex references and image words of a gog operation in move order.
inline void check_gog_words(const OperationSpec& op, const Scenario& sc) {
  std::map<std::string, std::string> group_of;
  for (std::size_t i = 0; i < op.vertices.size(); ++i) {
    if (!group_of.emplace(op.vertices[i].name, op.vertices[i].group).second) {
      throw ConfigError(op.field + "/vertices/" + std::to_string(i) + "/name", "duplicate vertex name");
    }
  }
  auto check_images = [&](const std::vector<std::string>& words, const std::string& group, const std::string& path) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      parse_word_at(sc.group(group), words[i], path + "/" + std::to_string(i));
    }
  };
  for (std::size_t k = 0; k < op.moves.size(); ++k) {
    const auto& mv = op.moves[k];
    std::string mp = op.field + "/moves/" + std::to_string(k);
    std::string near_group;
    if (mv.type == MoveType::StarVertex) {
      if (!group_of.emplace(mv.vertex, mv.group).second) throw ConfigError(mp + "/vertex", "duplicate vertex name");
      near_group = mv.group;
    } else {
      auto it = group_of.find(mv.vertex);
      if (it == group_of.end()) throw ConfigError(mp + "/source", "unknown vertex '" + mv.vertex + "'");
      near_group = it->second;
    }
    for (std::size_t i = 0; i < mv.edges.size(); ++i) {
      const auto& e = mv.edges[i];
      std::string ep = mv.type == MoveType::StarVertex ? mp + "/edges/" + std::to_string(i) : mp + "/edge";
      auto it = group_of.find(e.target);
      if (it == group_of.end() || e.target == (mv.type == MoveType::StarVertex ? mv.vertex : std::string())) {
        throw ConfigError(ep + "/target", "unknown vertex '" + e.target + "'");
      }
      check_images(e.near, near_group, ep + "/near");
      check_images(e.target_images, it->second, ep + "/target_images");
    }
  }
}

inline OperationSpec read_operation(const Json& j, const std::string& path, const Scenario& sc) {
  if (!j.is_object() || !j.contains("op") || !j.at("op").is_string()) {
    throw ConfigError(path + "/op", "every operation needs an 'op' string");
  }
  OperationSpec op;
  op.op = j.at("op").get<std::string>();
  op.field = path;
  op.params = j;
  std::set<std::string> keys{"op", "label", "radius", "seed", "stability"};
  auto add = [&](std::initializer_list<const char*> more) { keys.insert(more.begin(), more.end()); };
  if (!operation_names().count(op.op)) throw ConfigError(path + "/op", "unknown operation '" + op.op + "'");
  if (op.op != "gog") add({"group"});
  if (op.op == "delta") add({"samples", "exhaustive_quadruples"});
  if (op.op == "coneoff") add({"subgroups", "samples", "exhaustive_quadruples"});
  if (op.op == "factor-system") add({"subgroups", "core_radius", "eps_grid"});
  if (op.op == "hhs-check" || op.op == "distance-formula" || op.op == "hqc") {
    add({"subgroups", "core_radius", "exhaustive", "force"});
  }
  if (op.op == "distance-formula") add({"s"});
  if (op.op == "hqc") add({"y", "grid", "slope", "intercept"});
  if (op.op == "embed") add({"subgroups", "T", "eps_grid", "samples"});
  if (op.op == "construct") add({"subgroups", "line_radius", "force", "verify", "samples", "exhaustive", "bundle"});
  if (op.op == "gog") add({"vertices", "moves", "closure_budget", "verify", "samples", "combination", "tree"});
  Fields f(j, path, keys);

  op.label = f.get<std::string>("label", op.op);
  if (op.label.empty() || op.label.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
                              std::string::npos) {
    throw ConfigError(f.at("label"), "labels use letters, digits, '.', '_' and '-'");
  }
  op.radius = f.get<std::uint32_t>("radius", sc.radius);
  op.seed = f.get<std::uint64_t>("seed", sc.seed);
  op.stability = f.get<bool>("stability", sc.stability);
  if (op.op != "gog") {
    op.group = group_ref(f, sc, "group");
    op.subgroups = subgroup_refs(f, sc, op.group);
  }
  op.samples = f.get<std::uint64_t>("samples", op.op == "construct" || op.op == "gog" ? 100 : op.samples);
  op.equivariance_samples = static_cast<std::size_t>(op.samples);
  op.exhaustive_quadruples = f.get<std::uint64_t>("exhaustive_quadruples", op.exhaustive_quadruples);
  if (f.has("core_radius")) op.core_radius = f.need<std::uint32_t>("core_radius");
  op.eps_grid = f.get<std::vector<std::uint32_t>>("eps_grid", op.eps_grid);
  op.exhaustive = f.get<bool>("exhaustive", op.exhaustive);
  op.force = f.get<bool>("force", op.force);
  op.s = f.get<std::uint32_t>("s", op.s);
  if (op.s < 1) throw ConfigError(f.at("s"), "threshold must be at least 1");
  op.grid = f.get<std::vector<std::uint32_t>>("grid", op.grid);
  op.slope = f.get<std::uint32_t>("slope", op.slope);
  op.intercept = f.get<std::uint32_t>("intercept", op.intercept);
  if (op.op == "hqc") {
    op.y = f.need<std::string>("y");
    auto it = sc.subgroups.find(op.y);
    if (it == sc.subgroups.end() || it->second.group != op.group) {
      throw ConfigError(f.at("y"), "undefined subgroup '" + op.y + "' of group '" + op.group + "'");
    }
  }
  if (op.op == "embed") {
    op.T = f.get<std::vector<std::string>>("T", {});
    for (std::size_t i = 0; i < op.T.size(); ++i) {
      parse_word_at(sc.group(op.group), op.T[i], f.at("T") + "/" + std::to_string(i));
    }
  }
  if (f.has("line_radius")) op.line_radius = f.need<std::uint32_t>("line_radius");
  op.verify = f.get<bool>("verify", op.verify);
  op.bundle = f.get<bool>("bundle", op.bundle);
  if (op.op == "construct") {
    for (std::size_t i = 0; i < op.subgroups.size(); ++i) {
      if (sc.subgroups.at(op.subgroups[i]).spec.generators.size() != 1) {
        throw ConfigError(f.at("subgroups") + "/" + std::to_string(i), "construct needs cyclic subgroups");
      }
    }
  }
  if (op.op == "gog") {
    if (!f.has("vertices") || !f.raw("vertices").is_array()) throw ConfigError(f.at("vertices"), "expected an array");
    const auto& vs = f.raw("vertices");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      Fields vf(vs[i], f.at("vertices") + "/" + std::to_string(i), {"name", "group", "radius"});
      GogVertexSpec v{vf.need<std::string>("name"), group_ref(vf, sc, "group"), std::nullopt};
      if (vf.has("radius")) v.radius = vf.need<std::uint32_t>("radius");
      op.vertices.push_back(std::move(v));
    }
    if (f.has("moves")) {
      if (!f.raw("moves").is_array()) throw ConfigError(f.at("moves"), "expected an array");
      const auto& ms = f.raw("moves");
      for (std::size_t k = 0; k < ms.size(); ++k) {
        std::string mp = f.at("moves") + "/" + std::to_string(k);
        if (!ms[k].is_object() || !ms[k].contains("type")) throw ConfigError(mp + "/type", "required field is missing");
        auto type = Fields::as<std::string>(ms[k].at("type"), mp + "/type");
        GogMoveSpec mv;
        if (type == "star-vertex") {
          Fields mf(ms[k], mp, {"type", "vertex", "group", "edges"});
          mv.vertex = mf.need<std::string>("vertex");
          mv.group = group_ref(mf, sc, "group");
          if (mf.has("edges")) {
            if (!mf.raw("edges").is_array()) throw ConfigError(mf.at("edges"), "expected an array");
            const auto& es = mf.raw("edges");
            for (std::size_t i = 0; i < es.size(); ++i) {
              mv.edges.push_back(read_gog_edge(es[i], mf.at("edges") + "/" + std::to_string(i), sc));
            }
          }
        } else if (type == "edge-join") {
          Fields mf(ms[k], mp, {"type", "source", "edge"});
          mv.type = MoveType::EdgeJoin;
          mv.vertex = mf.need<std::string>("source");
          if (!mf.has("edge")) throw ConfigError(mf.at("edge"), "required field is missing");
          mv.edges.push_back(read_gog_edge(mf.raw("edge"), mf.at("edge"), sc));
        } else {
          throw ConfigError(mp + "/type", "unknown move type '" + type + "'");
        }
        op.moves.push_back(std::move(mv));
      }
    }
    op.closure_budget = f.get<std::size_t>("closure_budget", op.closure_budget);
    if (f.has("combination")) {
      Fields cf(f.raw("combination"), f.at("combination"), {"grid", "k0", "slope", "intercept", "full_xi", "bounded_cutoff"});
      auto& c = op.combination;
      c.hqc_grid = cf.get<std::vector<std::uint32_t>>("grid", c.hqc_grid);
      c.hqc_k0 = cf.get<std::uint32_t>("k0", c.hqc_k0);
      c.hqc_slope = cf.get<std::uint32_t>("slope", c.hqc_slope);
      c.hqc_intercept = cf.get<std::uint32_t>("intercept", c.hqc_intercept);
      c.full_xi = cf.get<std::uint32_t>("full_xi", c.full_xi);
      c.bounded_cutoff = cf.get<std::uint32_t>("bounded_cutoff", c.bounded_cutoff);
    }
    if (f.has("tree")) {
      Fields tf(f.raw("tree"), f.at("tree"), {"depth", "radius"});
      op.tree = std::make_pair(tf.need<std::uint32_t>("depth"), tf.get<std::uint32_t>("radius", 3));
    }
    check_gog_words(op, sc);
  }
  return op;
}

inline std::size_t offset_to_line(std::string_view text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace detail

/// Validates a parsed config. Every error names the offending field.
inline Scenario scenario_from_json(const Json& config) {
  using detail::Fields;
  Fields f(config, "", {"name", "seed", "radius", "budget", "output", "stability", "groups", "subgroups", "operations"});
  Scenario sc;
  sc.config = config;
  sc.name = f.need<std::string>("name");
  if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("/name", "name must be non-empty and contain no path separators");
  }
  sc.seed = f.get<std::uint64_t>("seed", 1);
  sc.radius = f.get<std::uint32_t>("radius", 4);
  if (f.has("budget")) sc.budget = f.need<std::size_t>("budget");
  sc.output = f.get<std::string>("output", "reports/" + sc.name);
  sc.stability = f.get<bool>("stability", false);

  const Json groups = f.has("groups") ? f.raw("groups") : Json::object();
  if (!groups.is_object()) throw ConfigError("/groups", "expected an object");
  std::set<std::string> visiting;
  for (const auto& [name, value] : groups.items()) detail::read_group(groups, name, visiting, sc.groups);

  const Json subs = f.has("subgroups") ? f.raw("subgroups") : Json::object();
  if (!subs.is_object()) throw ConfigError("/subgroups", "expected an object");
  for (const auto& [name, value] : subs.items()) {
    Fields sf(value, "/subgroups/" + name, {"group", "generators", "label"});
    auto g = detail::group_ref(sf, sc, "group");
    auto words = sf.need<std::vector<std::string>>("generators");
    SubgroupSpec spec{sf.get<std::string>("label", detail::subgroup_label(words)), {}};
    for (std::size_t i = 0; i < words.size(); ++i) {
      Word w = detail::parse_word_at(sc.group(g), words[i], sf.at("generators") + "/" + std::to_string(i));
      if (!w.empty()) spec.generators.push_back(std::move(w));
    }
    sc.subgroups.emplace(name, SubgroupEntry{g, std::move(spec)});
  }

  if (!f.has("operations") || !f.raw("operations").is_array() || f.raw("operations").empty()) {
    throw ConfigError("/operations", "expected a non-empty array");
  }
  const auto& ops = f.raw("operations");
  for (std::size_t i = 0; i < ops.size(); ++i) {
    sc.operations.push_back(detail::read_operation(ops[i], "/operations/" + std::to_string(i), sc));
  }
  return sc;
}

inline Scenario parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t column = 0;
    std::size_t line = detail::offset_to_line(text, e.byte == 0 ? 0 : e.byte - 1, column);
    std::string msg = e.what();
    auto colon = msg.rfind(": ");
    throw ConfigError("", colon == std::string::npos ? msg : msg.substr(colon + 2), line, column);
  }
  return scenario_from_json(j);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline Json count(std::uint32_t v) { return v == kUnreached ? Json(nullptr) : Json(v); }

inline Json hyperbolicity_json(const HyperbolicityReport& r, const MetricGraph& g) {
  Json w = Json::array();
  for (Vertex v : r.witness) w.push_back(v < g.vertex_count() ? g.label(v) : std::to_string(v));
  return {{"twice_delta", r.twice_delta}, {"delta", r.delta()},         {"quadruples", r.quadruples},
          {"exhaustive", r.exhaustive},   {"seed", r.seed},             {"witness", std::move(w)}};
}

inline Json constants_json(const ConstantsBundle& c) {
  Json theta = Json::array();
  for (auto [k, t] : c.theta_u) theta.push_back({k, count(t)});
  return {{"delta", c.delta}, {"xi", c.xi},       {"K", c.K},         {"kappa0", c.kappa0}, {"n", c.n},
          {"lambda", c.lambda}, {"E_ll", c.E_ll}, {"E_bgi", c.E_bgi}, {"alpha", c.alpha},   {"theta_u", std::move(theta)},
          {"s", c.s},         {"K_df", c.K_df},   {"C_df", c.C_df},   {"D0", c.D0}};
}

inline Json structural_json(const StructuralReport& s) {
  return {{"pass", s.pass()},
          {"complexity", s.complexity},
          {"orthogonal_pairs", s.orthogonal_pairs},
          {"container_cases", s.container_cases},
          {"max_projection_diameter", s.max_projection_diameter},
          {"max_rho_diameter", s.max_rho_diameter},
          {"missing_rho", s.missing_rho},
          {"violations", s.violations}};
}

inline Json battery_json(const AxiomReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"axiom", e.axiom}, {"value", e.value}, {"witness", e.witness}, {"exhaustive", e.exhaustive},
                       {"seed", e.seed}, {"items", e.items}, {"pass", e.pass}});
  }
  return {{"pass", r.pass()}, {"entries", std::move(entries)}, {"constants", constants_json(r.constants)},
          {"structural", structural_json(r.structural)}};
}

inline Json battery_constants(const AxiomReport& r) {
  return {{"structural", r.structural.pass()}, {"kappa0", r.constants.kappa0}, {"E_bgi", r.constants.E_bgi},
          {"E_ll", r.constants.E_ll},           {"lambda", r.constants.lambda}, {"xi", r.constants.xi}};
}

inline Json instance_summary(const HHSInstance& inst) {
  std::map<std::string, std::size_t> provenance;
  for (const auto& u : inst.indices) ++provenance[u.provenance];
  return {{"indices", inst.size()}, {"points", inst.X().vertex_count()}, {"xi", inst.xi}, {"provenance", provenance}};
}

inline Json verdict_json(const Verdict& v) { return {{"pass", v.pass}, {"witness", v.witness}}; }

inline Json hqc_json(const HQCReport& r, const MetricGraph& x) {
  Json table = Json::array();
  for (const auto& row : r.table) table.push_back({{"r", row.r}, {"k", count(row.k)}, {"witness", x.label(row.witness)}});
  return {{"q", r.q}, {"k0", r.k0}, {"k0_index", r.k0_index}, {"per_index", r.per_index},
          {"table", std::move(table)}, {"exhaustive", r.exhaustive}};
}

}  // namespace detail

/// Outcome of one operation at one radius.
struct OperationOutcome {
  Json report;
  bool pass = true;
  /// Extra files written next to the report, by file name.
  std::map<std::string, std::string> artifacts;
};

namespace detail {

struct OpContext {
  const Scenario& sc;
  const OperationSpec& op;
  std::uint32_t radius;
  std::size_t index;
};

inline std::vector<SubgroupSpec> specs_of(const Scenario& sc, const std::vector<std::string>& names) {
  std::vector<SubgroupSpec> out;
  for (const auto& n : names) out.push_back(sc.subgroups.at(n).spec);
  return out;
}

inline CheckOptions check_options(const OperationSpec& op) {
  CheckOptions opt = op.exhaustive ? CheckOptions::exhaustive() : CheckOptions{};
  opt.points.seed = opt.pairs.seed = op.seed;
  opt.delta_budget.seed = op.seed;
  return opt;
}

inline FactorSystemOptions factor_options(const OperationSpec& op) {
  FactorSystemOptions fo;
  fo.delta_budget.seed = op.seed;
  return fo;
}

/// Factor-system instance on the operation's ball, or the one-index Cayley
/// structure when no subgroups are named.
inline HHSInstance factor_instance(const OpContext& c, const BallGraph& ball) {
  if (c.op.subgroups.empty()) return cayley_instance(ball);
  auto cand = coset_candidate(ball, specs_of(c.sc, c.op.subgroups), c.op.core_radius.value_or(default_core_radius(c.radius)));
  return build_hhs_from_factor_system(cand, c.op.force, factor_options(c.op));
}

inline OperationOutcome run_delta(const OpContext& c) {
  auto ball = cayley_ball(c.sc.group(c.op.group), c.radius);
  DistanceMatrix d(ball.graph);
  auto rep = delta_with_budget(ball.graph, d, c.op.exhaustive_quadruples, {c.op.samples, c.op.seed});
  OperationOutcome out;
  out.report["details"] = {{"vertices", ball.size()}, {"edges", ball.graph.edge_count()},
                           {"hyperbolicity", hyperbolicity_json(rep, ball.graph)}};
  out.report["constants"] = {{"twice_delta", rep.twice_delta}};
  return out;
}

inline OperationOutcome run_coneoff(const OpContext& c) {
  auto ball = cayley_ball(c.sc.group(c.op.group), c.radius);
  auto fam = coset_family(ball, specs_of(c.sc, c.op.subgroups));
  auto cg = build_coneoff(ball.graph, fam.members);
  KapovichRafiOptions ko;
  ko.exhaustive_quadruples = c.op.exhaustive_quadruples;
  ko.quadruple_budget = {c.op.samples, c.op.seed};
  auto rep = kapovich_rafi_report(cg, ko);
  OperationOutcome out;
  out.report["details"] = {{"vertices", ball.size()},
                           {"family_size", rep.family_size},
                           {"cone_edges", cg.cone_edges.size()},
                           {"apex_approximation", rep.apex_approximation},
                           {"delta_base", hyperbolicity_json(rep.delta_base, ball.graph)},
                           {"delta_coned", hyperbolicity_json(rep.delta_coned, cg.coned)},
                           {"hausdorff_H", rep.hausdorff_H},
                           {"witness", {cg.coned.label(rep.witness_u), cg.coned.label(rep.witness_v)}},
                           {"pairs", rep.pairs},
                           {"exhaustive", rep.exhaustive}};
  out.report["constants"] = {{"twice_delta_coned", rep.delta_coned.twice_delta}, {"hausdorff_H", rep.hausdorff_H}};
  return out;
}

inline OperationOutcome run_factor_system(const OpContext& c) {
  auto ball = cayley_ball(c.sc.group(c.op.group), c.radius);
  auto cand = coset_candidate(ball, specs_of(c.sc, c.op.subgroups), c.op.core_radius.value_or(default_core_radius(c.radius)));
  auto rep = verify_factor_system(cand, factor_options(c.op));
  auto simple = simple_family_check(cand, c.op.eps_grid);
  OperationOutcome out;
  Json axioms = Json::array();
  for (std::size_t a = 0; a < 5; ++a) axioms.push_back({{"axiom", a + 1}, {"pass", rep.pass[a]}, {"witness", rep.witness[a]}});
  Json rows = Json::array();
  std::optional<std::uint32_t> r0;
  for (const auto& row : simple.rows) {
    rows.push_back({{"epsilon", row.epsilon}, {"R", row.R}, {"pair", {cand.family[row.h1].label, cand.family[row.h2].label}}});
    if (row.epsilon == 0) r0 = row.R;
  }
  out.report["details"] = {{"members", rep.members},
                           {"axioms", std::move(axioms)},
                           {"K", rep.K},
                           {"xi", rep.xi},
                           {"xi_candidate", rep.xi_candidate},
                           {"B", rep.B},
                           {"B3_limit", count(rep.B3_limit)},
                           {"c", rep.c},
                           {"hausdorff_proxy", rep.hausdorff_proxy},
                           {"delta", hyperbolicity_json(rep.delta, ball.graph)},
                           {"radius_limited", rep.radius_limited},
                           {"simple_family", {{"rows", std::move(rows)}, {"unbounded_proxy", simple.unbounded_proxy},
                                              {"violations", simple.violations}}}};
  out.report["constants"] = {{"K", rep.K}, {"xi", rep.xi}, {"c", rep.c}, {"R0", r0 ? Json(*r0) : Json(nullptr)},
                             {"all_pass", rep.all_pass()}};
  out.pass = rep.all_pass();
  return out;
}

inline OperationOutcome run_hhs_check(const OpContext& c) {
  auto ball = cayley_ball(c.sc.group(c.op.group), c.radius);
  auto inst = factor_instance(c, ball);
  auto rep = run_battery(inst, check_options(c.op));
  OperationOutcome out;
  out.report["details"] = {{"instance", instance_summary(inst)}, {"battery", battery_json(rep)}};
  out.report["constants"] = battery_constants(rep);
  out.pass = rep.pass();
  return out;
}

inline OperationOutcome run_distance_formula(const OpContext& c) {
  auto ball = cayley_ball(c.sc.group(c.op.group), c.radius);
  auto inst = factor_instance(c, ball);
  auto rep = distance_formula_fit(inst, c.op.s, check_options(c.op));
  OperationOutcome out;
  Json table = Json::array();
  for (auto [k, cc] : rep.table) table.push_back({k, count(cc)});
  out.report["details"] = {{"instance", instance_summary(inst)},
                           {"s", rep.s},
                           {"K", rep.K},
                           {"C", rep.C},
                           {"violations", rep.violations},
                           {"worst", {{"x", ball.label(rep.x)}, {"y", ball.label(rep.y)}, {"distance", rep.worst_distance},
                                      {"sum", rep.worst_sum}}},
                           {"pairs", rep.pairs},
                           {"exhaustive", rep.exhaustive},
                           {"seed", rep.seed},
                           {"table", std::move(table)}};
  out.report["constants"] = {{"K", rep.K}, {"C", rep.C}, {"violations", rep.violations}};
  out.pass = rep.violations == 0;
  return out;
}

inline OperationOutcome run_hqc(const OpContext& c) {
  auto ball = cayley_ball(c.sc.group(c.op.group), c.radius);
  auto inst = factor_instance(c, ball);
  VertexSet y;
  for (const auto& cos : enumerate_cosets(ball, c.sc.subgroups.at(c.op.y).spec)) {
    if (cos.rep_vertex == 0) y = cos.members;
  }
  auto rep = check_hqc(inst, y, c.op.grid, check_options(c.op));
  OperationOutcome out;
  std::string witness;
  for (const auto& row : rep.table) {
    if (row.k == kUnreached || row.k > c.op.slope * row.r + c.op.intercept) {
      witness = "k(" + std::to_string(row.r) + ") = " + (row.k == kUnreached ? "unbounded" : std::to_string(row.k)) +
                " at " + ball.label(row.witness);
      break;
    }
  }
  Json ks = Json::array();
  for (const auto& row : rep.table) ks.push_back(count(row.k));
  out.report["details"] = {{"instance", instance_summary(inst)},
                           {"y", {{"subgroup", c.sc.subgroups.at(c.op.y).spec.label}, {"points", y.size()}}},
                           {"hqc", hqc_json(rep, ball.graph)},
                           {"bound", {{"slope", c.op.slope}, {"intercept", c.op.intercept}}},
                           {"witness", witness}};
  out.report["constants"] = {{"q", rep.q}, {"k0", rep.k0}, {"k", std::move(ks)}};
  out.pass = witness.empty();
  return out;
}

inline OperationOutcome run_embed(const OpContext& c) {
  const auto& m = c.sc.group(c.op.group);
  std::vector<Word> T;
  for (const auto& w : c.op.T) T.push_back(m.normal_form(m.parse(w)));
  if (T.empty()) T = standard_generators(m);
  auto rep = check_hyperbolically_embedded(m, T, specs_of(c.sc, c.op.subgroups), c.radius, c.op.eps_grid,
                                           FourPointBudget{c.op.samples, c.op.seed});
  OperationOutcome out;
  Json subs = Json::array();
  Json flags = Json::object();
  for (const auto& s : rep.subgroups) {
    subs.push_back({{"subgroup", s.subgroup.label},
                    {"hyperbolic", s.hyperbolic()},
                    {"proper", s.proper()},
                    {"qi_embedded", s.qi_embedded()},
                    {"twice_delta", {s.delta.twice_delta, s.delta_smaller.twice_delta}},
                    {"profile", {s.profile, s.profile_smaller}},
                    {"unreached", s.unreached},
                    {"qi_K", {s.qi_K, s.qi_K_smaller}}});
    flags[s.subgroup.label] = s.hyperbolic() && s.proper() && s.qi_embedded();
  }
  Json rows = Json::array();
  for (const auto& row : rep.separation.rows) rows.push_back({{"epsilon", row.epsilon}, {"R", row.R}});
  std::vector<std::string> tl;
  for (const auto& w : rep.T) tl.push_back(m.format(w));
  out.report["details"] = {{"T", tl},
                           {"radius", rep.radius},
                           {"smaller_radius", rep.smaller_radius},
                           {"coned_twice_delta", rep.coned_delta.twice_delta},
                           {"subgroups", std::move(subs)},
                           {"separation", {{"pass", rep.separation.pass}, {"rows", std::move(rows)},
                                           {"witness", rep.separation.witness}}},
                           {"radius_limited", rep.radius_limited}};
  out.report["constants"] = {{"subgroups", std::move(flags)}, {"separation", rep.separation.pass}};
  out.pass = rep.pass();
  return out;
}

inline OperationOutcome run_construct(const OpContext& c) {
  const auto& m = c.sc.group(c.op.group);
  auto base = cayley_instance(cayley_ball(m, c.radius));
  std::vector<SubgroupStructure> structs;
  for (const auto& name : c.op.subgroups) {
    structs.push_back({c.sc.subgroups.at(name).spec, line_instance("t", c.op.line_radius.value_or(2 * c.radius))});
  }
  auto aug = build_augmented_structure(base, structs, c.op.force);
  OperationOutcome out;
  std::map<std::string, std::size_t> levels;
  for (const auto& l : aug.levels) ++levels[aug.subgroups[l.subgroup].subgroup.label];
  Json details = {{"instance", instance_summary(aug.result)},
                  {"base_indices", aug.base_size()},
                  {"levels", levels},
                  {"unreached_rho", aug.unreached_rho}};
  Json constants = {{"indices", aug.result.size()}};
  if (c.op.verify) {
    auto ver = verify_augmented(aug, check_options(c.op), c.op.equivariance_samples, c.op.seed);
    Json homs = Json::array();
    for (const auto& h : ver.homomorphisms) {
      homs.push_back({{"subgroup", aug.subgroups[h.subgroup].subgroup.label},
                      {"pass", h.pass()},
                      {"index_map_injective", h.index_map_injective},
                      {"relations_preserved", h.relations_preserved},
                      {"pi_commute_error", h.pi_commute_error},
                      {"rho_commute_error", h.rho_commute_error},
                      {"equivariance_error", h.equivariance_error},
                      {"samples", h.samples},
                      {"skipped", h.skipped},
                      {"seed", h.seed},
                      {"bound", h.bound},
                      {"witness", h.witness}});
    }
    details["battery"] = battery_json(ver.axioms);
    details["base_constants"] = constants_json(ver.base_constants);
    details["homomorphisms"] = std::move(homs);
    constants.update(battery_constants(ver.axioms));
    bool homs_pass = true;
    for (const auto& h : ver.homomorphisms) homs_pass = homs_pass && h.pass();
    constants["homomorphisms"] = homs_pass;
    out.pass = ver.pass();
  }
  if (c.op.bundle) {
    auto bundle = bundle_of(aug);
    std::string text = to_json(bundle).dump();
    bool equal = augmented_from_json(Json::parse(text)) == bundle;
    char prefix[8];
    std::snprintf(prefix, sizeof prefix, "%02zu-", c.index);
    std::string file = prefix + c.op.label + ".bundle.json";
    details["bundle"] = {{"file", file}, {"bytes", text.size()}, {"round_trip", equal}};
    out.artifacts.emplace(file, text + "\n");
    out.pass = out.pass && equal;
  }
  out.report["details"] = std::move(details);
  out.report["constants"] = std::move(constants);
  return out;
}

inline GraphOfGroups gog_input(const OpContext& c) {
  GraphOfGroups g;
  for (const auto& v : c.op.vertices) {
    const auto& m = c.sc.group(v.group);
    g.add_base_vertex(v.name, m, std::make_shared<const HHSInstance>(cayley_instance(cayley_ball(m, v.radius.value_or(c.radius)))));
  }
  auto edge_of = [&](const GogEdgeSpec& e) {
    return MoveEdge{e.name, *g.find_vertex(e.target), c.sc.group(e.group), e.near, e.target_images};
  };
  for (const auto& mv : c.op.moves) {
    if (mv.type == MoveType::StarVertex) {
      std::vector<MoveEdge> edges;
      for (const auto& e : mv.edges) edges.push_back(edge_of(e));
      g = apply_star_move(g, MoveRecord::star_vertex(mv.vertex, c.sc.group(mv.group), std::move(edges)));
    } else {
      g = apply_star_move(g, MoveRecord::edge_join(*g.find_vertex(mv.vertex), edge_of(mv.edges[0])));
    }
  }
  return g;
}

inline OperationOutcome run_gog(const OpContext& c) {
  auto input = gog_input(c);
  PipelineOptions po;
  po.radius = c.radius;
  po.closure_budget = c.op.closure_budget;
  po.verify_augmented = c.op.verify;
  po.equivariance_samples = c.op.equivariance_samples;
  po.seed = c.op.seed;
  po.combination = c.op.combination;
  po.combination.checks = check_options(c.op);
  auto res = run_main_pipeline(input, po);
  const auto& g = res.graph;

  Json obt = Json::array();
  for (const auto& v : res.obtainability.vertices) {
    std::vector<std::string> labels;
    for (const auto& s : v.subgroups) labels.push_back(s.label);
    obt.push_back({{"vertex", g.vertices[v.vertex].name}, {"subgroups", labels}, {"pass", v.pass}, {"witness", v.witness}});
  }
  Json stages = Json::array();
  for (const auto& s : res.stages) {
    Json st = {{"vertex", g.vertices[s.vertex].name},
               {"step", s.step},
               {"indices", g.vertices[s.vertex].structure ? g.vertices[s.vertex].structure->size() : 0},
               {"structural", structural_json(s.structural)}};
    if (s.closure) {
      st["closure"] = {{"converged", s.closure->converged}, {"iterations", s.closure->iterations},
                       {"members", s.closure->candidate.family.size()}, {"merged", s.closure->merged},
                       {"added", s.closure->added}};
    }
    if (s.verification) {
      bool homs = true;
      for (const auto& h : s.verification->homomorphisms) homs = homs && h.pass();
      st["verification"] = {{"pass", s.verification->pass()}, {"homomorphisms", homs},
                            {"battery", battery_json(s.verification->axioms)}};
    }
    stages.push_back(std::move(st));
  }
  Json edges = Json::array();
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    edges.push_back({{"edge", g.edges[e].name},
                     {"origin", g.edges[e].origin},
                     {"ends", {g.vertices[g.edges[e].side[0].vertex].name, g.vertices[g.edges[e].side[1].vertex].name}},
                     {"structural", e < res.edge_structural.size() ? Json(res.edge_structural[e].pass()) : Json(nullptr)}});
  }
  Json details = {{"obtainability", {{"pass", res.obtainability.pass()}, {"vertices", std::move(obt)}}},
                  {"refused", res.refused},
                  {"stages", std::move(stages)},
                  {"edges", std::move(edges)}};
  Json constants = {{"refused", res.refused}};
  if (res.combination) {
    const auto& cr = *res.combination;
    Json sides = Json::array();
    for (const auto& s : cr.sides) {
      const auto& x = g.vertices[s.vertex].structure->X();
      sides.push_back({{"edge", g.edges[s.edge].name},
                       {"side", s.side},
                       {"vertex", g.vertices[s.vertex].name},
                       {"hqc", hqc_json(s.hqc, x)},
                       {"hqc_pass", s.hqc_pass},
                       {"hqc_witness", s.hqc_witness},
                       {"xi", s.xi},
                       {"qi_xi", s.qi_xi},
                       {"undefined_points", s.undefined_points},
                       {"index_injective", s.index_injective},
                       {"relations_preserved", s.relations_preserved},
                       {"nesting_surjective", s.nesting_surjective},
                       {"bounded_exempt", s.bounded_exempt},
                       {"full_pass", s.full_pass},
                       {"full_witness", s.full_witness},
                       {"non_orthogonal", s.non_orthogonal},
                       {"orthogonal_witness", s.orthogonal_witness}});
    }
    details["combination"] = {{"pass", cr.pass()},
                              {"hqc", verdict_json(cr.hqc)},
                              {"full", verdict_json(cr.full)},
                              {"non_orthogonal", verdict_json(cr.non_orthogonal)},
                              {"bounded_supports", verdict_json(cr.bounded_supports)},
                              {"sides", std::move(sides)}};
    constants["hqc"] = cr.hqc.pass;
    constants["full"] = cr.full.pass;
    constants["non_orthogonal"] = cr.non_orthogonal.pass;
    constants["bounded_supports"] = cr.bounded_supports.pass;
  }
  if (c.op.tree) {
    auto t = build_tree_of_spaces(g, c.op.tree->first, c.op.tree->second);
    details["tree_of_spaces"] = {{"depth", c.op.tree->first}, {"radius", c.op.tree->second},
                                 {"vertices", t.graph.vertex_count()}, {"edges", t.graph.edge_count()},
                                 {"copies", t.copies.size()}, {"identified", t.identified},
                                 {"connected", t.graph.connected()}};
  }
  OperationOutcome out;
  out.report["details"] = std::move(details);
  out.report["constants"] = std::move(constants);
  out.pass = res.pass();
  return out;
}

inline OperationOutcome run_once(const Scenario& sc, const OperationSpec& op, std::uint32_t radius, std::size_t index) {
  OpContext c{sc, op, radius, index};
  if (op.op == "delta") return run_delta(c);
  if (op.op == "coneoff") return run_coneoff(c);
  if (op.op == "factor-system") return run_factor_system(c);
  if (op.op == "hhs-check") return run_hhs_check(c);
  if (op.op == "distance-formula") return run_distance_formula(c);
  if (op.op == "hqc") return run_hqc(c);
  if (op.op == "embed") return run_embed(c);
  if (op.op == "construct") return run_construct(c);
  return run_gog(c);
}

/// Keys of two constants objects whose values differ.
inline Json constants_diff(const Json& a, const Json& b) {
  Json diff = Json::object();
  for (const auto& [key, value] : a.items()) {
    if (!b.contains(key) || b.at(key) != value) diff[key] = {value, b.contains(key) ? b.at(key) : Json(nullptr)};
  }
  for (const auto& [key, value] : b.items()) {
    if (!a.contains(key)) diff[key] = {nullptr, value};
  }
  return diff;
}

/// Sets HHS_BUDGET for the lifetime of the guard unless the environment already does.
class BudgetScope {
 public:
  explicit BudgetScope(std::optional<std::size_t> budget) {
    if (!budget || std::getenv("HHS_BUDGET")) return;
    setenv("HHS_BUDGET", std::to_string(*budget).c_str(), 1);
    active_ = true;
  }
  ~BudgetScope() {
    if (active_) unsetenv("HHS_BUDGET");
  }
  BudgetScope(const BudgetScope&) = delete;
  BudgetScope& operator=(const BudgetScope&) = delete;

 private:
  bool active_ = false;
};

}  // namespace detail

/// Runs one operation, at radius r and, with stability on, again at r + 2.
inline OperationOutcome run_operation(const Scenario& sc, std::size_t index, std::ostream* log = nullptr) {
  const auto& op = sc.operations[index];
  auto started = std::chrono::steady_clock::now();
  auto out = detail::run_once(sc, op, op.radius, index);
  Json report = {{"index", index}, {"op", op.op}, {"label", op.label}, {"radius", op.radius}, {"seed", op.seed},
                 {"params", op.params}};
  report["details"] = std::move(out.report["details"]);
  report["constants"] = std::move(out.report["constants"]);
  if (op.stability) {
    auto wider = detail::run_once(sc, op, op.radius + 2, index);
    Json diff = detail::constants_diff(report["constants"], wider.report["constants"]);
    bool stable = diff.empty();
    report["stability"] = {{"radii", {op.radius, op.radius + 2}}, {"constants", wider.report["constants"]},
                           {"diff", std::move(diff)}, {"pass", stable}};
    out.pass = out.pass && stable;
  }
  report["pass"] = out.pass;
  out.report = std::move(report);
  if (log) {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    *log << "[" << index << "] " << op.label << " (" << op.op << ", r = " << op.radius << "): "
         << (out.pass ? "pass" : "FAIL") << " in " << std::fixed << std::setprecision(2) << secs << " s\n";
  }
  return out;
}

/// Provenance, per-operation reports and a constants table. Contains no
/// timings, so equal configs give byte-identical bundles.
struct ReportBundle {
  Json provenance;
  std::vector<Json> reports;
  std::map<std::string, std::string> artifacts;

  bool pass() const {
    for (const auto& r : reports) {
      if (!r.at("pass").get<bool>()) return false;
    }
    return true;
  }

  static std::string csv_cell(const Json& v) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }

  /// One row per (operation, constant); `index` names the operation report.
  std::string summary_csv() const {
    std::string out = "index,op,label,radius,key,value\n";
    for (const auto& r : reports) {
      std::string prefix = std::to_string(r.at("index").get<std::size_t>()) + "," + csv_cell(r.at("op")) + "," +
                           csv_cell(r.at("label")) + "," + r.at("radius").dump() + ",";
      out += prefix + "pass," + csv_cell(r.at("pass")) + "\n";
      for (const auto& [key, value] : r.at("constants").items()) out += prefix + csv_cell(Json(key)) + "," + csv_cell(value) + "\n";
    }
    return out;
  }

  static std::string report_name(const Json& r) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", r.at("index").get<std::size_t>());
    return std::string(buf) + "-" + r.at("label").get<std::string>() + ".json";
  }

  void write(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "operations");
    auto put = [](const fs::path& p, const std::string& text) {
      std::ofstream f(p, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write '" + p.string() + "'");
      f << text;
    };
    put(dir / "provenance.json", provenance.dump(2) + "\n");
    put(dir / "summary.csv", summary_csv());
    for (const auto& r : reports) put(dir / "operations" / report_name(r), r.dump(2) + "\n");
    if (!artifacts.empty()) fs::create_directories(dir / "artifacts");
    for (const auto& [name, text] : artifacts) put(dir / "artifacts" / name, text);
  }
};

inline ReportBundle run_scenario(const Scenario& sc, std::ostream* log = nullptr) {
  detail::BudgetScope budget(sc.budget);
  ReportBundle b;
  b.provenance = {{"artifact", "hhs"},
                  {"version", kArtifactVersion},
                  {"scenario", sc.name},
                  {"seed", sc.seed},
                  {"budget", vertex_budget()},
                  {"config_hash", config_hash(sc.config)},
                  {"config", sc.config},
                  {"operations", sc.operations.size()}};
  for (std::size_t i = 0; i < sc.operations.size(); ++i) {
    auto out = run_operation(sc, i, log);
    b.reports.push_back(std::move(out.report));
    for (auto& [name, text] : out.artifacts) b.artifacts.emplace(name, std::move(text));
  }
  b.provenance["pass"] = b.pass();
  return b;
}

}  // namespace hhs
