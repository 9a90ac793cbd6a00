// Prints one PASS/FAIL line per acceptance criterion. Exit status is the
// number of failing criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "hhs/scenario.hpp"

using namespace hhs;

namespace {

// Pinned tolerances.
constexpr double kDeltaSecondsR6 = 5.0;
constexpr double kConeoffSecondsR6 = 60.0;
constexpr std::uint32_t kFactorXiMax = 2;
constexpr std::uint32_t kFactorChain = 1;
constexpr double kBatterySecondsR6 = 600.0;
constexpr std::uint32_t kStabilityTolerance = 0;
constexpr std::uint32_t kHqcSlope = 1, kHqcIntercept = 1;
constexpr double kEmbedSeconds = 60.0;
constexpr std::size_t kEquivarianceSamples = 100;
constexpr double kPipelineSeconds = 900.0;

struct Line {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

SubgroupSpec axis(const GroupModel& m, const char* g) { return make_subgroup(m, std::string("<") + g + ">", {g}); }

std::vector<SubgroupSpec> axes(const GroupModel& m) { return {axis(m, "a"), axis(m, "b")}; }

FactorSystemCandidate free_axes(std::uint32_t r) {
  auto m = fixtures::free2();
  return coset_candidate(cayley_ball(m, r), axes(m), default_core_radius(r));
}

Line hyperbolicity() {
  Line l;
  for (int seed = 1; seed <= 5; ++seed) {
    auto e = fixtures::random_tree(40, seed);
    auto g = fixtures::graph_of(40, e);
    l.require(four_point_delta(g).twice_delta == 0, "random tree " + std::to_string(seed));
  }
  auto ball4 = cayley_ball(fixtures::free2(), 4);
  l.require(four_point_delta(ball4.graph).twice_delta == 0, "F(a,b) r=4 exhaustive");
  auto c4 = fixtures::graph_of(4, oracle::cycle_edges(4));
  auto lib = four_point_delta(c4);
  int brute = oracle::twice_delta(oracle::floyd_warshall(4, oracle::cycle_edges(4)));
  l.require(lib.delta() == 1.0 && lib.twice_delta == static_cast<std::uint32_t>(brute), "4-cycle delta = 1");
  auto t0 = std::chrono::steady_clock::now();
  auto ball6 = cayley_ball(fixtures::free2(), 6);
  auto rep = four_point_delta(ball6.graph, FourPointBudget{2000000, 1});
  double secs = seconds_since(t0);
  l.require(rep.twice_delta == 0 && !rep.exhaustive, "F(a,b) r=6 sampled delta 0");
  l.require(secs < kDeltaSecondsR6, "r=6 under " + fmt(kDeltaSecondsR6) + " s");
  l.note("trees 0, C4 " + std::to_string(lib.twice_delta) + "/2 (brute " + std::to_string(brute) + "/2), r=6 " +
         std::to_string(ball6.size()) + " vertices " + fmt(secs) + " s");
  return l;
}

Line coneoff_stability() {
  Line l;
  auto m = fixtures::free2();
  KapovichRafiReport reps[2];
  double secs = 0;
  std::uint32_t radii[2] = {4, 6};
  for (int i = 0; i < 2; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    auto ball = cayley_ball(m, radii[i]);
    auto cg = build_coneoff(ball.graph, coset_family(ball, axes(m)).members);
    reps[i] = kapovich_rafi_report(cg);
    secs = seconds_since(t0);
  }
  l.require(reps[0].delta_coned.twice_delta == reps[1].delta_coned.twice_delta, "coned delta equal");
  l.require(reps[0].hausdorff_H == reps[1].hausdorff_H, "H equal");
  l.require(reps[1].exhaustive, "exhaustive pair scan at r=6");
  l.require(secs < kConeoffSecondsR6, "r=6 under " + fmt(kConeoffSecondsR6) + " s");
  l.note("(2delta, H) = (" + std::to_string(reps[0].delta_coned.twice_delta) + ", " + std::to_string(reps[0].hausdorff_H) +
         ") at r=4 and (" + std::to_string(reps[1].delta_coned.twice_delta) + ", " + std::to_string(reps[1].hausdorff_H) +
         ") at r=6, " + fmt(secs) + " s");
  return l;
}

Line factor_system() {
  Line l;
  auto cand = free_axes(8);
  const auto& g = *cand.graph;
  const auto& fam = cand.family;
  // brute-force oracle first: pairwise intersections, projections, inclusions
  std::uint32_t oracle_r0 = 0, oracle_xi = 0;
  bool nested = false;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    for (std::size_t j = 0; j < fam.size(); ++j) {
      if (i == j) continue;
      const auto& a = fam[i].vertices;
      const auto& b = fam[j].vertices;
      VertexSet inter;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
      if (inter.size() == b.size()) nested = true;
      if (inter.size() > 1) oracle_r0 = std::max(oracle_r0, set_diameter(g, inter));
      VertexSet proj;
      for (Vertex y : b) {
        auto p = closest_point_projection(g, a, y);
        proj.insert(proj.end(), p.begin(), p.end());
      }
      proj = make_set(std::move(proj));
      oracle_xi = std::max(oracle_xi, set_diameter(g, proj));
    }
  }
  auto rep = verify_factor_system(cand);
  auto simple = simple_family_check(cand, {0, 1, 2});
  std::optional<std::uint32_t> r0;
  for (const auto& row : simple.rows) {
    if (row.epsilon == 0) r0 = row.R;
  }
  l.require(rep.all_pass(), "all five axioms");
  l.require(rep.xi <= kFactorXiMax, "xi <= " + std::to_string(kFactorXiMax));
  l.require(rep.c == kFactorChain && !nested, "chain bound c = 1 (oracle: no inclusions)");
  l.require(r0 && *r0 == 0 && oracle_r0 == 0, "R(0) = 0 (oracle " + std::to_string(oracle_r0) + ")");
  l.require(rep.xi <= oracle_xi, "xi within the all-pairs projection oracle");
  l.note(std::to_string(fam.size()) + " members, xi " + std::to_string(rep.xi) + " (oracle max " + std::to_string(oracle_xi) +
         "), c " + std::to_string(rep.c) + ", R(0) " + (r0 ? std::to_string(*r0) : "n/a"));
  return l;
}

Line battery() {
  Line l;
  AxiomReport reps[2];
  double secs = 0;
  std::uint32_t radii[2] = {4, 6};
  for (int i = 0; i < 2; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    auto inst = build_hhs_from_factor_system(free_axes(radii[i]));
    reps[i] = run_battery(inst, CheckOptions::exhaustive());
    secs = seconds_since(t0);
    l.require(reps[i].structural.pass(), "structural checks at r=" + std::to_string(radii[i]));
  }
  const auto& a = reps[0].constants;
  const auto& b = reps[1].constants;
  auto same = [](std::uint32_t x, std::uint32_t y) { return (x > y ? x - y : y - x) <= kStabilityTolerance; };
  l.require(same(a.kappa0, b.kappa0) && same(a.E_bgi, b.E_bgi) && same(a.E_ll, b.E_ll), "constants stable");
  l.require(secs < kBatterySecondsR6, "r=6 battery under " + fmt(kBatterySecondsR6) + " s");
  l.note("(kappa0, E_bgi, E_ll) = (" + std::to_string(a.kappa0) + ", " + std::to_string(a.E_bgi) + ", " +
         std::to_string(a.E_ll) + ") at r=4 and (" + std::to_string(b.kappa0) + ", " + std::to_string(b.E_bgi) + ", " +
         std::to_string(b.E_ll) + ") at r=6, r=6 " + fmt(secs) + " s");
  return l;
}

Line distance_formula() {
  Line l;
  auto inst = build_hhs_from_factor_system(free_axes(6));
  auto df = distance_formula_fit(inst, 3, CheckOptions::exhaustive());
  l.require(df.violations == 0 && df.exhaustive, "no violations on the exhaustive r=6 scan");
  auto trivial = cayley_instance(cayley_ball(fixtures::free2(), 6));
  auto dt = distance_formula_fit(trivial, 1, CheckOptions::exhaustive());
  l.require(dt.K == 1 && dt.C == 0 && dt.violations == 0, "degenerate instance fits (1, 0)");
  l.note("factor system s=3: (K, C) = (" + std::to_string(df.K) + ", " + std::to_string(df.C) + ") over " +
         std::to_string(df.pairs) + " pairs; degenerate (" + std::to_string(dt.K) + ", " + std::to_string(dt.C) + ")");
  return l;
}

Line hqc() {
  Line l;
  auto m = fixtures::free2();
  auto ball = cayley_ball(m, 6);
  auto inst = build_hhs_from_factor_system(coset_candidate(ball, axes(m), default_core_radius(6)));
  VertexSet y;
  for (const auto& c : enumerate_cosets(ball, axis(m, "a"))) {
    if (c.rep_vertex == 0) y = c.members;
  }
  auto rep = check_hqc(inst, y, {0, 1, 2, 3}, CheckOptions::exhaustive());
  l.require(rep.q == 0, "q = 0");
  std::string ks;
  for (const auto& row : rep.table) {
    if (row.r == 0) l.require(row.k == 0, "k(0) = 0");
    bool ok = row.k != kUnreached && row.k <= kHqcSlope * row.r + kHqcIntercept;
    l.require(ok, "k(" + std::to_string(row.r) + ") = " + std::to_string(row.k) + " > " +
                      std::to_string(kHqcSlope * row.r + kHqcIntercept) + " at x = " + ball.label(row.witness));
    ks += (ks.empty() ? "" : ", ") + std::to_string(row.k);
  }
  l.note("q " + std::to_string(rep.q) + ", k = (" + ks + ") on r in {0,1,2,3}, exhaustive");
  return l;
}

Line embedding() {
  Line l;
  auto m = fixtures::free2();
  auto t0 = std::chrono::steady_clock::now();
  auto good = check_hyperbolically_embedded(m, standard_generators(m), {axis(m, "a")}, 6);
  double s1 = seconds_since(t0);
  bool four = !good.subgroups.empty() && good.subgroups[0].hyperbolic() && good.subgroups[0].proper() &&
              good.subgroups[0].qi_embedded() && good.separation.pass;
  l.require(good.pass() && four, "<a> in F(a,b) passes all four sub-checks");
  auto z = fixtures::z2();
  t0 = std::chrono::steady_clock::now();
  auto bad = check_hyperbolically_embedded(z, standard_generators(z), {axis(z, "a")}, 6);
  double s2 = seconds_since(t0);
  l.require(!bad.pass() && !bad.separation.pass && !bad.separation.witness.empty(), "<a> in Z^2 fails with a separation witness");
  l.require(s1 < kEmbedSeconds && s2 < kEmbedSeconds, "each verdict under " + fmt(kEmbedSeconds) + " s");
  l.note("Z^2 witness \"" + bad.separation.witness + "\", " + fmt(s1) + " s / " + fmt(s2) + " s");
  return l;
}

Line augmentation() {
  Line l;
  auto m = fixtures::free2();
  // full battery at r = 6 takes minutes on one core; stability is read between 4 and 5
  std::uint32_t radii[2] = {4, 5};
  ConstantsBundle c[2];
  for (int i = 0; i < 2; ++i) {
    std::uint32_t r = radii[i];
    auto ball = cayley_ball(m, r);
    auto aug = build_augmented_structure(cayley_instance(ball), {SubgroupStructure{axis(m, "a"), line_instance("a", 2 * r)}});
    std::size_t cosets = enumerate_cosets(ball, axis(m, "a")).size();
    l.require(aug.result.size() == 1 + cosets, "index count 1 + cosets at r=" + std::to_string(r));
    auto ver = verify_augmented(aug, CheckOptions::exhaustive(), kEquivarianceSamples, 1);
    l.require(ver.axioms.pass(), "battery at r=" + std::to_string(r));
    bool eq = !ver.homomorphisms.empty();
    for (const auto& h : ver.homomorphisms) eq = eq && h.pass() && h.samples == kEquivarianceSamples;
    l.require(eq, "equivariance on " + std::to_string(kEquivarianceSamples) + " samples at r=" + std::to_string(r));
    c[i] = ver.axioms.constants;
    l.note("r=" + std::to_string(r) + ": " + std::to_string(aug.result.size()) + " indices = 1 + " + std::to_string(cosets));
  }
  l.require(c[0].kappa0 == c[1].kappa0 && c[0].E_bgi == c[1].E_bgi && c[0].E_ll == c[1].E_ll && c[0].lambda == c[1].lambda,
            "constants stable between r=4 and r=5");
  l.note("(kappa0, E_bgi, E_ll, lambda) = (" + std::to_string(c[1].kappa0) + ", " + std::to_string(c[1].E_bgi) + ", " +
         std::to_string(c[1].E_ll) + ", " + std::to_string(c[1].lambda) + ")");
  return l;
}

GraphOfGroups amalgam_over(const GroupModel& base, std::uint32_t r) {
  GraphOfGroups g;
  g.add_base_vertex("Q", base, std::make_shared<const HHSInstance>(cayley_instance(cayley_ball(base, r))));
  return apply_star_move(g, MoveRecord::star_vertex("G", fixtures::free_cd(),
                                                    {MoveEdge{"e", 0, GroupModel::free({"t"}), {"c"}, {"a"}}}));
}

Line pipeline() {
  Line l;
  const std::uint32_t r = 5;
  auto t0 = std::chrono::steady_clock::now();
  PipelineOptions opt;
  opt.radius = r;
  auto res = run_main_pipeline(amalgam_over(fixtures::free2(), r), opt);
  double secs = seconds_since(t0);
  l.require(res.pass() && res.combination && res.combination->pass(), "amalgam all-pass");
  l.require(secs < kPipelineSeconds, "under " + fmt(kPipelineSeconds) + " s");

  // non-HQC edge image: send the edge ball onto the radius-r sphere of the target
  auto graph = res.graph;
  auto& side = graph.edges[0].side[0];
  const auto& ball = *graph.vertices[side.vertex].structure->cayley->ball;
  VertexSet sphere;
  for (Vertex x = 0; x < ball.size(); ++x) {
    if (ball.words[x].size() == r) sphere.push_back(x);
  }
  auto forced = std::make_shared<Hieromorphism>(*side.map);
  for (std::size_t i = 0; i < forced->point_map.size(); ++i) forced->point_map[i] = sphere[i % sphere.size()];
  side.map = forced;
  auto c = check_combination_hypotheses(graph, opt.combination);
  l.require(!c.hqc.pass && c.full.pass && c.non_orthogonal.pass && c.bounded_supports.pass && !c.hqc.witness.empty(),
            "sphere image fails HQC only");

  auto z = run_main_pipeline(amalgam_over(fixtures::z2(), r), opt);
  l.require(z.refused && !z.obtainability.pass() && !z.combination, "Z^2 base is refused");
  std::string zw;
  for (const auto& v : z.obtainability.vertices) {
    if (!v.pass) zw = v.witness;
  }
  l.require(!zw.empty(), "Z^2 witness present");
  l.note("amalgam r=5 " + fmt(secs) + " s; sphere: \"" + c.hqc.witness + "\"; Z^2: \"" + zw + "\"");
  return l;
}

bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b, std::string& why) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> files[2];
  const fs::path roots[2] = {a, b};
  for (int i = 0; i < 2; ++i) {
    for (const auto& e : fs::recursive_directory_iterator(roots[i])) {
      if (!e.is_regular_file()) continue;
      std::ifstream in(e.path(), std::ios::binary);
      std::stringstream s;
      s << in.rdbuf();
      files[i][fs::relative(e.path(), roots[i]).string()] = s.str();
    }
  }
  if (files[0].size() != files[1].size()) {
    why = "file sets differ";
    return false;
  }
  for (const auto& [name, text] : files[0]) {
    auto it = files[1].find(name);
    if (it == files[1].end() || it->second != text) {
      why = name + " differs";
      return false;
    }
  }
  return !files[0].empty();
}

Line determinism() {
  Line l;
  namespace fs = std::filesystem;
  fs::path tmp = fs::temp_directory_path() / ("hhs-acceptance-" + std::to_string(::getpid()));
  for (const char* name : {"tree-factor-system", "amalgam-pipeline"}) {
    auto sc = load_scenario(fs::path(HHS_SCENARIO_DIR) / (std::string(name) + ".json"));
    for (int run = 0; run < 2; ++run) run_scenario(sc).write(tmp / name / std::to_string(run));
    std::string why;
    bool same = same_tree(tmp / name / "0", tmp / name / "1", why);
    l.require(same, std::string(name) + ": " + why);
    if (same) l.note(std::string(name) + " byte-identical");
  }
  fs::remove_all(tmp);
  return l;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Line()>> criteria[] = {
      {"hyperbolicity oracle", hyperbolicity},
      {"cone-off stability", coneoff_stability},
      {"factor system", factor_system},
      {"axiom battery", battery},
      {"distance formula", distance_formula},
      {"hierarchical quasi-convexity", hqc},
      {"embedding verdicts", embedding},
      {"augmentation", augmentation},
      {"combination pipeline", pipeline},
      {"determinism", determinism},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Line line;
    auto t0 = std::chrono::steady_clock::now();
    try {
      line = run();
    } catch (const std::exception& e) {
      line.pass = false;
      line.detail = std::string("error: ") + e.what();
    }
    if (!line.pass) ++failed;
    std::cout << (line.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << ", " << fmt(seconds_since(t0))
              << " s): " << line.detail << std::endl;
  }
  std::cout << (n - failed) << "/" << n << " criteria pass" << std::endl;
  return failed;
}
