#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hhs/hhs_checks.hpp"

using namespace hhs;

namespace {

std::shared_ptr<const MetricGraph> shared(MetricGraph g) { return std::make_shared<const MetricGraph>(std::move(g)); }

HHSInstance z2_product(std::uint32_t r) { return product_hhs(line_instance("a", r), line_instance("b", r)); }

Vertex at(const HHSInstance& inst, const std::string& label) {
  auto v = inst.X().find_label(label);
  if (!v) throw std::runtime_error("no vertex " + label);
  return *v;
}

}  // namespace

TEST(HHSInstance, SingleIndexIsTrivialAndPasses) {
  auto g = fixtures::graph_of(6, fixtures::random_tree(6, 3));
  auto inst = trivial_instance(shared(g));
  auto rep = run_battery(inst, CheckOptions::exhaustive());
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.structural.complexity, 1u);
  EXPECT_EQ(rep.constants.kappa0, 0u);
  EXPECT_EQ(rep.constants.K, 1u);
  auto df = distance_formula_fit(inst, 1, CheckOptions::exhaustive());
  EXPECT_EQ(df.K, 1u);
  EXPECT_EQ(df.C, 0u);
}

TEST(HHSInstance, ProductRelationsAreOrthogonalUnderAPointTop) {
  auto p = z2_product(2);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.X().vertex_count(), 25u);
  EXPECT_TRUE(p.orthogonal(0, 1));
  EXPECT_TRUE(p.properly_nested(0, p.top));
  EXPECT_TRUE(p.properly_nested(1, p.top));
  EXPECT_EQ(p.space(p.top).vertex_count(), 1u);
}

TEST(HHSInstance, ProductDistancesMatchGridOracle) {
  auto p = z2_product(3);
  auto fw = oracle::floyd_warshall(static_cast<int>(p.X().vertex_count()), fixtures::to_oracle(p.X()));
  for (Vertex x = 0; x < p.X().vertex_count(); x += 3) {
    for (Vertex y = 0; y < p.X().vertex_count(); ++y) {
      EXPECT_EQ(static_cast<int>(distance_formula_sum(p, x, y, 1)), fw[x][y]);
    }
  }
}

TEST(HHSInstance, ProductBatteryPassesExhaustively) {
  auto p = z2_product(3);
  auto rep = run_battery(p, CheckOptions::exhaustive());
  for (const auto& e : rep.entries) EXPECT_TRUE(e.pass) << e.axiom << " " << e.value << " " << e.witness;
  EXPECT_EQ(rep.structural.complexity, 2u);
  EXPECT_EQ(rep.constants.kappa0, 0u);
  EXPECT_EQ(rep.constants.E_bgi, 0u);
}

TEST(HHSInstance, PartialRealizationOfCoordinatesIsExact) {
  auto p = z2_product(3);
  auto rep = check_partial_realization(p, CheckOptions::exhaustive());
  EXPECT_EQ(rep.alpha, 0u);
  EXPECT_EQ(rep.no_realizer, 0u);
  EXPECT_EQ(rep.largest_family, 2u);
  // coordinates (3, -2) taken from two different points
  Vertex x = at(p, "a a a"), y = at(p, "b' b'");
  Vertex target = at(p, "a a a b' b'");
  EXPECT_EQ(p.d_index(0, target, x), 0u);
  EXPECT_EQ(p.d_index(1, target, y), 0u);
}

TEST(HHSInstance, CollapsedProjectionMakesUniquenessUnbounded) {
  auto g = fixtures::graph_of(7, oracle::cycle_edges(7));
  auto inst = trivial_instance(shared(g));
  SetTable collapsed;
  Vertex zero = 0;
  for (Vertex v = 0; v < 7; ++v) collapsed.push_back(std::span<const Vertex>(&zero, 1));
  inst.pi[0] = collapsed;
  inst.finalize();
  auto u = check_uniqueness(inst, CheckOptions::exhaustive());
  EXPECT_EQ(u.max_index, 0u);
  EXPECT_TRUE(u.unbounded());
  EXPECT_EQ(u.rows.front().theta, 3u);
  EXPECT_FALSE(run_battery(inst, CheckOptions::exhaustive()).pass());
}

TEST(HHSInstance, ProductUniquenessIsBounded) {
  auto p = z2_product(3);
  auto u = check_uniqueness(p, CheckOptions::exhaustive());
  EXPECT_FALSE(u.unbounded());
  // pairs with both coordinate gaps below kappa are at distance <= 2 (kappa - 1)
  for (const auto& row : u.rows) EXPECT_LE(row.theta, 2 * (row.kappa - 1));
}

TEST(HHSInstance, ContradictoryRelationsAreRejected) {
  auto p = z2_product(1);
  p.relations[0 * p.size() + 1] = Relation::Nested;
  p.relations[1 * p.size() + 0] = Relation::Nested;
  auto s = check_structural(p);
  EXPECT_FALSE(s.pass());
}

TEST(HHSInstance, TreeProductSatisfiesContainer) {
  auto t = fixtures::graph_of(8, fixtures::random_tree(8, 5));
  auto p = product_hhs(trivial_instance(shared(t), "T1"), trivial_instance(shared(t), "T2"));
  auto s = check_structural(p);
  EXPECT_TRUE(s.container);
  EXPECT_EQ(s.orthogonal_pairs, 1u);
  EXPECT_EQ(s.container_cases, 2u);
}

TEST(DistanceFormula, ProductOfLinesIsExact) {
  auto p = z2_product(3);
  auto df = distance_formula_fit(p, 1, CheckOptions::exhaustive());
  EXPECT_EQ(df.K, 1u);
  EXPECT_EQ(df.C, 0u);
  EXPECT_EQ(df.violations, 0u);
}

TEST(DistanceFormula, ThresholdMustBePositive) {
  auto p = z2_product(1);
  EXPECT_THROW(distance_formula_fit(p, 0), Error);
}

TEST(HierarchyPath, ConstantPathHasConstantOne) {
  auto p = z2_product(2);
  auto res = find_hierarchy_path(p, 4, 4, 4);
  EXPECT_EQ(res.D, 1.0);
  EXPECT_EQ(res.path.vertices.size(), 1u);
}

TEST(HierarchyPath, ProductGeodesicsProjectToGeodesics) {
  auto p = z2_product(2);
  Vertex x = at(p, "a' a' b' b'"), y = at(p, "a a b b");
  auto res = find_hierarchy_path(p, x, y, 4);
  EXPECT_TRUE(res.within_budget);
  EXPECT_EQ(res.path.vertices.size(), 9u);
  EXPECT_LE(res.D, 4.0);
}

TEST(UnparameterizedConstant, RepeatsCollapse) {
  auto g = fixtures::graph_of(5, oracle::cycle_edges(5));
  // straight path in the cycle
  DistanceMatrix d(g);
  auto dist = [&](Vertex a, Vertex b) { return d(a, b); };
  EXPECT_EQ(unparameterized_qg_constant({0, 1, 1, 2}, dist), 1.0);
  // backtracking costs: 0,1,0 spans index gap 2 at distance 0
  EXPECT_GT(unparameterized_qg_constant({0, 1, 0}, dist), 1.0);
}

TEST(HQC, GeodesicInTreeIsConvexInEveryIndex) {
  oracle::Edges e = fixtures::random_tree(12, 9);
  auto g = fixtures::graph_of(12, e);
  auto inst = trivial_instance(shared(g));
  auto path = shortest_path(g, 0, 11);
  auto rep = check_hqc(inst, path.vertices, {0, 1, 2}, CheckOptions::exhaustive());
  std::vector<int> y(path.vertices.begin(), path.vertices.end());
  EXPECT_EQ(static_cast<int>(rep.q), oracle::quasiconvexity(12, e, y));
  EXPECT_EQ(rep.k0, 0u);
  EXPECT_EQ(rep.table.front().k, 0u);
}

TEST(Normalize, SpurOutsideTheImageIsRemoved) {
  // X is the path 0-1-2; CS adds a spur vertex 3 at 1
  auto x = shared(fixtures::graph_of(3, {{0, 1}, {1, 2}}));
  auto cs = shared(fixtures::graph_of(4, {{0, 1}, {1, 2}, {1, 3}}));
  HHSInstance inst;
  inst.total = x;
  inst.indices.push_back(IndexElement{"S", cs, "base", "S"});
  inst.relations = {Relation::Equal};
  SetTable id;
  for (Vertex v = 0; v < 3; ++v) id.push_back(std::span<const Vertex>(&v, 1));
  inst.pi.push_back(id);
  inst.finalize();
  auto out = normalize(inst);
  EXPECT_FALSE(out.record.identity());
  EXPECT_EQ(out.instance.space(0).vertex_count(), 3u);
  EXPECT_TRUE(run_battery(out.instance, CheckOptions::exhaustive()).pass());
  auto again = normalize(out.instance);
  EXPECT_TRUE(again.record.identity());
}

TEST(Normalize, IdentityWhenProjectionIsOnto) {
  auto p = z2_product(2);
  EXPECT_TRUE(normalize(p).record.identity());
}
