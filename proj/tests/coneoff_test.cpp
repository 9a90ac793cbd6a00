#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hhs/coneoff.hpp"

using namespace hhs;
using fixtures::graph_of;

namespace {

std::vector<SubgroupSpec> axes(const GroupModel& f, const std::string& which) {
  std::vector<SubgroupSpec> out;
  for (char c : which) out.push_back(make_subgroup(f, std::string("<") + c + ">", {std::string(1, c)}));
  return out;
}

ConedGraph coned_free(std::uint32_t r, const std::string& which, BallGraph* keep = nullptr) {
  auto f = fixtures::free2();
  auto ball = cayley_ball(f, r);
  auto fam = coset_family(ball, axes(f, which));
  auto cg = build_coneoff(ball.graph, fam.members);
  if (keep) *keep = std::move(ball);
  return cg;
}

/// Library vertex id for each oracle word index.
std::vector<Vertex> to_library(const oracle::FreeCone& fc, const BallGraph& ball) {
  std::vector<Vertex> out;
  for (const auto& w : fc.words) out.push_back(ball.vertex(oracle::tokens(w)));
  return out;
}

}  // namespace

TEST(Coneoff, EmptyFamilyIsBase) {
  auto g = graph_of(6, oracle::cycle_edges(6));
  auto cg = build_coneoff(g, {});
  EXPECT_EQ(cg.coned, g);
  auto rep = kapovich_rafi_report(cg);
  EXPECT_EQ(rep.hausdorff_H, 0u);
  auto tau = tau_quasigeodesic_check(cg, 0, 3);
  EXPECT_DOUBLE_EQ(tau.tau1, 1.0);
  EXPECT_DOUBLE_EQ(tau.tau2, 1.0);
}

TEST(Coneoff, PathFullyConed) {
  oracle::Edges path{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  auto g = graph_of(5, path);
  auto cg = build_coneoff(g, {make_subgraph(g, {0, 1, 2, 3, 4}, "P5")});
  EXPECT_EQ(diameter(cg.coned), 1u);
  EXPECT_EQ(cg.dropped_parallel.size(), 4u);
  EXPECT_EQ(cg.cone_edges.size(), 6u);
  // oracle: coned metric is complete, so H is the largest coned distance between a base-path vertex and the coned path
  oracle::Edges coned = path;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 2; j < 5; ++j) coned.emplace_back(i, j);
  auto dc = oracle::floyd_warshall(5, coned);
  int expected = 0;
  for (int u = 0; u < 5; ++u)
    for (int v = u + 1; v < 5; ++v) {
      std::vector<int> base_geo;
      for (int x = u; x <= v; ++x) base_geo.push_back(x);
      expected = std::max(expected, oracle::hausdorff(dc, base_geo, {u, v}));
    }
  auto rep = kapovich_rafi_report(cg);
  EXPECT_EQ(static_cast<int>(rep.hausdorff_H), expected);
  EXPECT_LE(rep.hausdorff_H, 2u);
}

TEST(Coneoff, ConedDistanceToA3B2) {
  // a^3 b^2 has length 5, so radius 5 is the smallest ball containing it
  BallGraph ball;
  auto only_a = coned_free(5, "a", &ball);
  auto fa = oracle::free_cone(5, "a");
  auto fab = oracle::free_cone(5, "ab");
  auto da = oracle::floyd_warshall(static_cast<int>(fa.words.size()), fa.coned);
  auto dab = oracle::floyd_warshall(static_cast<int>(fab.words.size()), fab.coned);
  int oracle_a = da[fa.id[""]][fa.id["aaabb"]];
  int oracle_ab = dab[fab.id[""]][fab.id["aaabb"]];
  EXPECT_EQ(oracle_a, 3);
  EXPECT_EQ(oracle_ab, 2);
  Vertex e = ball.vertex("1"), t = ball.vertex("a^3 b^2");
  EXPECT_EQ(static_cast<int>(shortest_path(only_a.coned, e, t).length()), oracle_a);
  auto both = coned_free(5, "ab");
  EXPECT_EQ(static_cast<int>(shortest_path(both.coned, e, t).length()), oracle_ab);
}

TEST(Coneoff, AllDistancesMatchOracle) {
  BallGraph ball;
  auto cg = coned_free(4, "ab", &ball);
  auto fc = oracle::free_cone(4, "ab");
  auto d = oracle::floyd_warshall(static_cast<int>(fc.words.size()), fc.coned);
  auto ids = to_library(fc, ball);
  DistanceMatrix dm(cg.coned), db(cg.base);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) {
      ASSERT_EQ(static_cast<int>(dm(ids[i], ids[j])), d[i][j]);
      EXPECT_LE(dm(ids[i], ids[j]), db(ids[i], ids[j]));
    }
  }
}

TEST(Coneoff, ConeEdgesStayInsideOneMember) {
  auto cg = coned_free(3, "ab");
  for (const auto& [e, id] : cg.cone_edges) {
    EXPECT_TRUE(contains(cg.family[id].vertices, e.first));
    EXPECT_TRUE(contains(cg.family[id].vertices, e.second));
    EXPECT_FALSE(cg.base.has_edge(e.first, e.second));
  }
  for (const auto& e : cg.base.edges()) EXPECT_TRUE(cg.coned.has_edge(e.first, e.second));
}

TEST(DeElectrify, NoConeEdges) {
  BallGraph ball;
  auto cg = coned_free(4, "a", &ball);
  auto p = shortest_path(ball.graph, ball.vertex("1"), ball.vertex("b a b"));
  auto rec = de_electrify(cg, p);
  EXPECT_EQ(rec.output.vertices, p.vertices);
  EXPECT_TRUE(rec.pieces.empty());
}

TEST(DeElectrify, AxisJump) {
  BallGraph ball;
  auto cg = coned_free(4, "a", &ball);
  PathRecord p{{ball.vertex("1"), ball.vertex("a^3")}};
  auto rec = de_electrify(cg, p);
  std::vector<Vertex> expected{ball.vertex("1"), ball.vertex("a"), ball.vertex("a^2"), ball.vertex("a^3")};
  EXPECT_EQ(rec.output.vertices, expected);
  ASSERT_EQ(rec.pieces.size(), 1u);
  EXPECT_EQ(rec.pieces[0].geodesic.length(), 3u);
}

TEST(DeElectrify, JumpThenEdge) {
  BallGraph ball;
  auto cg = coned_free(4, "a", &ball);
  PathRecord p{{ball.vertex("1"), ball.vertex("a^2"), ball.vertex("a^2 b")}};
  auto rec = de_electrify(cg, p);
  auto fc = oracle::free_cone(4, "a");
  auto d = oracle::floyd_warshall(static_cast<int>(fc.words.size()), fc.base);
  EXPECT_EQ(static_cast<int>(rec.output.length()), d[fc.id[""]][fc.id["aab"]]);
  EXPECT_EQ(rec.output.length(), 3u);
  EXPECT_TRUE(rec.output.valid_in(cg.base));
}

TEST(DeElectrify, LengthIdentityOnConedGeodesics) {
  BallGraph ball;
  auto cg = coned_free(4, "ab", &ball);
  for (std::uint64_t i = 0; i < 200; ++i) {
    Vertex x = draw(3, 0, i) % ball.size(), y = draw(3, 1, i) % ball.size();
    auto p = shortest_path(cg.coned, x, y);
    auto rec = de_electrify(cg, p);
    std::size_t sum = 0;
    for (const auto& piece : rec.pieces) sum += piece.geodesic.length();
    EXPECT_EQ(rec.output.length(), p.length() - rec.cone_edge_count + sum);
    EXPECT_EQ(rec.output.vertices.front(), x);
    EXPECT_EQ(rec.output.vertices.back(), y);
    EXPECT_TRUE(rec.output.valid_in(cg.base));
  }
}

TEST(DeElectrify, DisconnectedMemberIsTruncated) {
  auto g = graph_of(4, {{0, 1}, {1, 2}, {2, 3}});
  auto cg = build_coneoff(g, {Subgraph{{0, 3}, "gap"}});
  try {
    de_electrify(cg, PathRecord{{0, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncatedPiece);
  }
}

TEST(Tau, AxisEndpoints) {
  BallGraph ball;
  auto cg = coned_free(5, "a", &ball);
  auto rep = tau_quasigeodesic_check(cg, ball.vertex("1"), ball.vertex("a^4"));
  EXPECT_EQ(rep.de_electrified.output.length(), 4u);
  EXPECT_DOUBLE_EQ(rep.tau2, 1.0);
  EXPECT_DOUBLE_EQ(rep.tau1, 1.0);
}

TEST(Tau, TwoAxesMeasured) {
  BallGraph ball;
  auto cg = coned_free(6, "ab", &ball);
  auto rep = tau_quasigeodesic_check(cg, ball.vertex("1"), ball.vertex("a^3 b^3"));
  EXPECT_GE(rep.tau2, 1.0);
  EXPECT_EQ(rep.coned_path.length(), 2u);
  // in a tree the de-electrified path is the unique geodesic
  EXPECT_EQ(rep.de_electrified.output.length(), 6u);
  EXPECT_DOUBLE_EQ(rep.tau2, 1.0);
}

TEST(KapovichRafi, TreeHausdorffWithinOracleBounds) {
  BallGraph ball;
  auto cg = coned_free(4, "ab", &ball);
  auto fc = oracle::free_cone(4, "ab");
  int n = static_cast<int>(fc.words.size());
  auto dc = oracle::floyd_warshall(n, fc.coned);
  auto db = oracle::floyd_warshall(n, fc.base);
  auto adj_b = oracle::adjacency(n, fc.base);
  auto adj_c = oracle::adjacency(n, fc.coned);
  // over all coned geodesics: the worst and the best Hausdorff distance to the unique tree geodesic
  int lo = 0, hi = 0;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      auto base_geo = oracle::all_geodesics(db, adj_b, u, v);
      ASSERT_EQ(base_geo.size(), 1u);
      int best = oracle::kInf, worst = 0;
      for (const auto& pc : oracle::all_geodesics(dc, adj_c, u, v)) {
        int h = oracle::hausdorff(dc, base_geo[0], pc);
        best = std::min(best, h);
        worst = std::max(worst, h);
      }
      lo = std::max(lo, best);
      hi = std::max(hi, worst);
    }
  auto rep = kapovich_rafi_report(cg);
  EXPECT_GE(static_cast<int>(rep.hausdorff_H), lo);
  EXPECT_LE(static_cast<int>(rep.hausdorff_H), hi);
  EXPECT_EQ(lo, hi);
  EXPECT_EQ(static_cast<int>(rep.delta_coned.twice_delta), 0);
  EXPECT_TRUE(rep.exhaustive);
}

TEST(KapovichRafi, Deterministic) {
  auto cg = coned_free(4, "ab");
  KapovichRafiOptions opt;
  opt.pairs = SampleSpec{100, 500, 9};
  auto a = kapovich_rafi_report(cg, opt);
  auto b = kapovich_rafi_report(cg, opt);
  EXPECT_EQ(a.hausdorff_H, b.hausdorff_H);
  EXPECT_EQ(a.witness_u, b.witness_u);
  EXPECT_EQ(a.witness_v, b.witness_v);
  EXPECT_EQ(a.delta_coned.witness, b.delta_coned.witness);
  EXPECT_FALSE(a.exhaustive);
}

TEST(KapovichRafi, DeltaBoundedAcrossRadii) {
  std::vector<std::uint32_t> twice;
  for (std::uint32_t r : {4u, 5u, 6u}) {
    auto rep = kapovich_rafi_report(coned_free(r, "a"), KapovichRafiOptions{SampleSpec{1000, 20000, 1}});
    twice.push_back(rep.delta_coned.twice_delta);
  }
  EXPECT_EQ(twice[0], twice[1]);
  EXPECT_EQ(twice[1], twice[2]);
}

TEST(Coneoff, ApexApproximation) {
  BallGraph ball;
  auto f = fixtures::free2();
  ball = cayley_ball(f, 4);
  auto fam = coset_family(ball, axes(f, "a"));
  auto exact = build_coneoff(ball.graph, fam.members);
  ConeOptions opt;
  opt.clique_limit = 5;
  auto approx = build_coneoff(ball.graph, fam.members, opt);
  EXPECT_TRUE(approx.apex_approximation);
  EXPECT_GT(approx.coned.vertex_count(), ball.size());
  DistanceMatrix de(exact.coned), da(approx.coned);
  for (Vertex u = 0; u < ball.size(); ++u)
    for (Vertex v = 0; v < ball.size(); ++v) {
      EXPECT_LE(de(u, v), da(u, v));
      EXPECT_LE(da(u, v), 2 * de(u, v));
    }
  // a single apex-coned member changes distances by at most one
  Vertex e = ball.vertex("1"), t = ball.vertex("a^4");
  EXPECT_LE(da(e, t), de(e, t) + 1);
  auto rec = de_electrify(approx, shortest_path(approx.coned, e, t));
  EXPECT_EQ(rec.output.length(), 4u);
}

TEST(Coneoff, BudgetExceeded) {
  auto g = graph_of(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  ConeOptions opt;
  opt.max_cone_edges = 3;
  try {
    build_coneoff(g, {make_subgraph(g, {0, 1, 2, 3, 4})}, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
  }
}
