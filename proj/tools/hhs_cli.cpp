#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hhs/graph_io.hpp"
#include "hhs/scenario.hpp"

using hhs::Json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

struct Globals {
  std::optional<std::uint32_t> radius;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::string out;
  bool stability = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

/// "free:a,b", "free-abelian:a,b" or "raag:a,b,c;a-b,b-c".
Json group_arg(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw hhs::ConfigError("", "group '" + spec + "' is not of the form kind:generators");
  std::string kind = spec.substr(0, colon);
  std::string rest = spec.substr(colon + 1);
  std::string edges;
  if (auto semi = rest.find(';'); semi != std::string::npos) {
    edges = rest.substr(semi + 1);
    rest.resize(semi);
  }
  Json g{{"kind", kind}, {"generators", split(rest, ',')}};
  if (!edges.empty()) {
    Json e = Json::array();
    for (const auto& pair : split(edges, ',')) e.push_back(split(pair, '-'));
    g["edges"] = std::move(e);
  }
  return g;
}

/// Config for a single operation named on the command line. Subgroups are
/// given as comma-separated generator words and named H0, H1, ...
Json single_config(const std::string& op, const Globals& gl, const std::string& group,
                   const std::vector<std::string>& subgroups, Json params) {
  Json cfg{{"name", op}, {"operations", Json::array()}};
  if (gl.seed) cfg["seed"] = *gl.seed;
  if (gl.radius) cfg["radius"] = *gl.radius;
  if (gl.budget) cfg["budget"] = *gl.budget;
  if (gl.stability) cfg["stability"] = true;
  if (!group.empty()) cfg["groups"] = {{"G", group_arg(group)}};
  if (!subgroups.empty()) {
    Json subs = Json::object();
    Json names = Json::array();
    for (std::size_t i = 0; i < subgroups.size(); ++i) {
      std::string name = "H" + std::to_string(i);
      subs[name] = {{"group", "G"}, {"generators", split(subgroups[i], ',')}};
      names.push_back(name);
    }
    cfg["subgroups"] = std::move(subs);
    params["subgroups"] = std::move(names);
  }
  params["op"] = op;
  if (!group.empty() && op != "gog") params["group"] = "G";
  cfg["operations"].push_back(std::move(params));
  return cfg;
}

int finish(const hhs::ReportBundle& bundle, const std::string& out, bool print_reports) {
  if (!out.empty()) {
    bundle.write(out);
    std::cerr << "wrote " << out << "\n";
  }
  if (print_reports) {
    for (const auto& r : bundle.reports) std::cout << r.dump(2) << "\n";
  } else {
    std::cout << bundle.summary_csv();
  }
  return bundle.pass() ? kExitPass : kExitCheckFailed;
}

int run_single(const std::string& op, const Globals& gl, const std::string& group,
               const std::vector<std::string>& subgroups, Json params) {
  auto sc = hhs::scenario_from_json(single_config(op, gl, group, subgroups, std::move(params)));
  return finish(hhs::run_scenario(sc, &std::cerr), gl.out, true);
}

int run_config(const std::string& path, const Globals& gl) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hhs::ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  // parse first so syntax errors keep their line numbers
  auto sc = hhs::parse_scenario(buf.str());
  Json cfg = sc.config;
  if (gl.seed) cfg["seed"] = *gl.seed;
  if (gl.budget) cfg["budget"] = *gl.budget;
  if (gl.stability) cfg["stability"] = true;
  if (gl.radius) {
    for (auto& op : cfg["operations"]) op["radius"] = *gl.radius;
  }
  if (cfg != sc.config) sc = hhs::scenario_from_json(cfg);
  std::string out = gl.out.empty() ? sc.output : gl.out;
  return finish(hhs::run_scenario(sc, &std::cerr), out, false);
}

void write_to(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw hhs::Error(hhs::ErrorKind::InvalidArgument, "cannot write '" + out + "'");
  f << text;
}

int run_export(const Globals& gl, const std::string& group, const std::vector<std::string>& subgroups,
               const std::string& format) {
  // validate the fixture through the config path so errors name the field
  Json params{{"label", "export"}};
  auto sc = hhs::scenario_from_json(single_config("construct", gl, group, subgroups, params));
  const auto& op = sc.operations[0];
  hhs::detail::BudgetScope budget(sc.budget);
  const auto& m = sc.group(op.group);
  auto ball = hhs::cayley_ball(m, op.radius);
  std::vector<hhs::SubgroupSpec> specs;
  for (const auto& n : op.subgroups) specs.push_back(sc.subgroups.at(n).spec);

  if (format == "bundle") {
    std::vector<hhs::SubgroupStructure> structs;
    for (const auto& h : specs) structs.push_back({h, hhs::line_instance("t", 2 * op.radius)});
    auto bundle = hhs::bundle_of(hhs::build_augmented_structure(hhs::cayley_instance(ball), structs));
    std::string text = hhs::to_json(bundle).dump() + "\n";
    write_to(gl.out, text);
    bool equal = hhs::augmented_from_json(Json::parse(text)) == bundle;
    std::cerr << "bundle: " << bundle.result.size() << " indices, reload " << (equal ? "equal" : "DIFFERS") << "\n";
    return equal ? kExitPass : kExitCheckFailed;
  }
  std::ostringstream text;
  if (specs.empty()) {
    if (format == "dot") {
      hhs::write_dot(text, ball.graph);
    } else {
      hhs::write_edge_list(text, ball.graph);
    }
  } else {
    auto cg = hhs::build_coneoff(ball.graph, hhs::coset_family(ball, specs).members);
    if (format == "dot") {
      hhs::write_dot(text, cg.coned, cg.cone_edge_set());
    } else {
      hhs::write_edge_list(text, cg.coned);
    }
  }
  write_to(gl.out, text.str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-geometric invariants and hierarchically hyperbolic structures on Cayley balls"};
  app.require_subcommand(1);
  Globals gl;
  app.add_option("--radius", gl.radius, "Ball radius (overrides every operation's radius)");
  app.add_option("--seed", gl.seed, "Seed for sampled checks");
  app.add_option("--budget", gl.budget, "Vertex budget for any single ball (HHS_BUDGET wins when set)");
  app.add_option("--out", gl.out, "Output directory for report bundles, or file for export");
  app.add_flag("--stability", gl.stability, "Also run at radius + 2 and fail on any change of constants");

  std::string group;
  std::vector<std::string> subgroups;
  auto fixture = [&](CLI::App* sub, bool need_group = true) {
    sub->fallthrough();
    auto g = sub->add_option("--group", group, "Group: free:a,b | free-abelian:a,b | raag:a,b,c;a-b,b-c");
    if (need_group) g->required();
    sub->add_option("--subgroup", subgroups, "Subgroup as comma-separated generator words (repeatable)");
  };
  Json params = Json::object();
  std::uint64_t samples = 0;
  bool sampled = false, force = false, no_verify = false, bundle = false;
  std::uint32_t s = 3, slope = 1, intercept = 1;
  std::string y;
  std::vector<std::string> T;

  auto* delta = app.add_subcommand("delta", "Four-point hyperbolicity constant of a Cayley ball");
  fixture(delta);
  delta->add_option("--samples", samples, "Quadruples drawn when the ball is too large for an exhaustive scan");
  auto* coneoff = app.add_subcommand("coneoff", "Cone off subgroup cosets and compare hyperbolicity and geodesics");
  fixture(coneoff);
  auto* factor = app.add_subcommand("factor-system", "Verify the coset family of the given subgroups as a factor system");
  fixture(factor);
  auto* check = app.add_subcommand("hhs-check", "Build the induced hierarchy structure and run the axiom battery");
  fixture(check);
  auto* df = app.add_subcommand("distance-formula", "Fit distance formula constants on the induced structure");
  fixture(df);
  df->add_option("--s", s, "Threshold");
  auto* hqc = app.add_subcommand("hqc", "Hierarchical quasi-convexity of a subgroup's identity coset");
  fixture(hqc);
  hqc->add_option("--y", y, "Subgroup tested, as comma-separated generator words")->required();
  hqc->add_option("--slope", slope, "Pass bound k(r) <= slope * r + intercept");
  hqc->add_option("--intercept", intercept, "Pass bound k(r) <= slope * r + intercept");
  auto* embed = app.add_subcommand("embed", "Hyperbolic embedding verdict for the given subgroups");
  fixture(embed);
  embed->add_option("--T", T, "Relative generating set (defaults to the group's generators)");
  auto* construct = app.add_subcommand("construct", "Augment the Cayley structure with cyclic subgroup levels");
  fixture(construct);
  construct->add_flag("--no-verify", no_verify, "Skip the axiom battery and homomorphism checks");
  construct->add_flag("--bundle", bundle, "Emit the augmented structure as a reloadable bundle");
  for (auto* sub : {check, df, hqc}) {
    sub->add_flag("--sampled", sampled, "Sample points and pairs instead of scanning them all");
    sub->add_flag("--force", force, "Build the structure even when the factor system check fails");
  }

  auto* gog = app.add_subcommand("gog", "Star-vertex move onto one base vertex, then the combination pipeline");
  gog->fallthrough();
  std::string base, vertex;
  std::vector<std::string> edges;
  std::uint32_t tree_depth = 0;
  gog->add_option("--base", base, "Base vertex group")->required();
  gog->add_option("--vertex", vertex, "New vertex group")->required();
  gog->add_option("--edge", edges, "Cyclic edge near=target, e.g. c=a (repeatable)")->required();
  gog->add_option("--tree-depth", tree_depth, "Also glue a tree of spaces of this depth (radius 3)");
  gog->add_flag("--no-verify", no_verify, "Skip augmented structure verification");

  auto* run = app.add_subcommand("run", "Run a scenario config and write its report bundle");
  run->fallthrough();
  std::string config;
  run->add_option("config", config, "Scenario config (JSON)")->required();

  auto* exp = app.add_subcommand("export", "Export a Cayley ball, its cone-off, or an augmented bundle");
  fixture(exp);
  std::string format = "edge-list";
  exp->add_option("--format", format, "edge-list | dot | bundle")->check(CLI::IsMember({"edge-list", "dot", "bundle"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    if (*run) return run_config(config, gl);
    if (*exp) return run_export(gl, group, subgroups, format);
    if (*delta) {
      if (samples) params["samples"] = samples;
      return run_single("delta", gl, group, subgroups, params);
    }
    if (*coneoff) return run_single("coneoff", gl, group, subgroups, params);
    if (*factor) return run_single("factor-system", gl, group, subgroups, params);
    if (sampled) params["exhaustive"] = false;
    if (force) params["force"] = true;
    if (*check) return run_single("hhs-check", gl, group, subgroups, params);
    if (*df) {
      params["s"] = s;
      return run_single("distance-formula", gl, group, subgroups, params);
    }
    if (*hqc) {
      // the tested subgroup joins the list last; only the others shape the structure
      auto all = subgroups;
      all.push_back(y);
      auto cfg = single_config("hqc", gl, group, all, params);
      auto& op = cfg["operations"][0];
      op["y"] = op["subgroups"].back();
      op["subgroups"].erase(op["subgroups"].size() - 1);
      op["slope"] = slope;
      op["intercept"] = intercept;
      if (op["subgroups"].empty()) op.erase("subgroups");
      return finish(hhs::run_scenario(hhs::scenario_from_json(cfg), &std::cerr), gl.out, true);
    }
    if (*embed) {
      if (!T.empty()) params["T"] = T;
      return run_single("embed", gl, group, subgroups, params);
    }
    if (*construct) {
      params.erase("exhaustive");
      params.erase("force");
      if (no_verify) params["verify"] = false;
      if (bundle) params["bundle"] = true;
      return run_single("construct", gl, group, subgroups, params);
    }
    if (*gog) {
      Json cfg{{"name", "gog"}, {"groups", {{"Q", group_arg(base)}, {"V", group_arg(vertex)}, {"Z", group_arg("free:t")}}}};
      if (gl.seed) cfg["seed"] = *gl.seed;
      if (gl.radius) cfg["radius"] = *gl.radius;
      if (gl.budget) cfg["budget"] = *gl.budget;
      if (gl.stability) cfg["stability"] = true;
      Json move_edges = Json::array();
      for (std::size_t i = 0; i < edges.size(); ++i) {
        auto parts = split(edges[i], '=');
        if (parts.size() != 2) throw hhs::ConfigError("--edge", "expected near=target, got '" + edges[i] + "'");
        move_edges.push_back({{"name", "e" + std::to_string(i)}, {"target", "Q"}, {"group", "Z"},
                              {"near", {parts[0]}}, {"target_images", {parts[1]}}});
      }
      Json op{{"op", "gog"},
              {"vertices", {{{"name", "Q"}, {"group", "Q"}}}},
              {"moves", {{{"type", "star-vertex"}, {"vertex", "G"}, {"group", "V"}, {"edges", std::move(move_edges)}}}}};
      if (no_verify) op["verify"] = false;
      if (tree_depth) op["tree"] = {{"depth", tree_depth}};
      cfg["operations"] = {std::move(op)};
      return finish(hhs::run_scenario(hhs::scenario_from_json(cfg), &std::cerr), gl.out, true);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
