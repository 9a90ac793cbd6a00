#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "fixtures.hpp"
#include "hhs/graph_io.hpp"
#include "hhs/metric.hpp"

using namespace hhs;
using fixtures::graph_of;

TEST(MetricGraph, RejectsSelfLoopsAndDuplicates) {
  EXPECT_THROW(MetricGraph::from_edges(2, {{0, 0}}), Error);
  EXPECT_THROW(MetricGraph::from_edges(2, {{0, 1}, {1, 0}}), Error);
  EXPECT_THROW(MetricGraph::from_edges(2, {{0, 2}}), Error);
  auto g = MetricGraph::from_edges(3, {{0, 1}});
  EXPECT_FALSE(g.connected());
  EXPECT_TRUE(g.has_edge(1, 0));
}

TEST(ShortestPath, TreeIdentity) {
  auto g = graph_of(7, fixtures::random_tree(7, 3));
  auto p = shortest_path(g, 4, 4);
  EXPECT_EQ(p.length(), 0u);
  EXPECT_TRUE(p.is_geodesic);
}

TEST(ShortestPath, SixCycleAntipodal) {
  auto edges = oracle::cycle_edges(6);
  int expected = oracle::shortest_by_enumeration(6, edges, 0, 3);
  ASSERT_EQ(expected, 3);
  auto p = shortest_path(graph_of(6, edges), 0, 3);
  EXPECT_EQ(static_cast<int>(p.length()), expected);
  EXPECT_TRUE(p.valid_in(graph_of(6, edges)));
}

TEST(ShortestPath, FreeGroupWordLength) {
  auto ball = cayley_ball(fixtures::free2(), 4);
  auto p = shortest_path(ball.graph, ball.vertex("1"), ball.vertex("a b a b"));
  EXPECT_EQ(p.length(), 4u);
}

TEST(ShortestPath, DisconnectedThrows) {
  auto g = MetricGraph::from_edges(3, {{0, 1}});
  try {
    shortest_path(g, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Disconnected);
  }
}

TEST(ShortestPath, TriangleInequalityOnSampledTriples) {
  auto g = graph_of(25, oracle::grid_edges(5, 5));
  DistanceMatrix d(g);
  for (std::uint64_t i = 0; i < 500; ++i) {
    Vertex x = draw(5, 1, i) % 25, y = draw(5, 2, i) % 25, z = draw(5, 3, i) % 25;
    EXPECT_LE(d(x, z), d(x, y) + d(y, z));
  }
}

TEST(FourPoint, TreesAreZero) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    int n = 5 + static_cast<int>(seed * 3);
    auto g = graph_of(n, fixtures::random_tree(n, seed));
    auto rep = four_point_delta(g);
    EXPECT_EQ(rep.twice_delta, 0u) << "seed " << seed;
    EXPECT_TRUE(rep.exhaustive);
  }
}

TEST(FourPoint, FourCycleIsOne) {
  auto edges = oracle::cycle_edges(4);
  int oracle_twice = oracle::twice_delta(oracle::floyd_warshall(4, edges));
  ASSERT_EQ(oracle_twice, 2);
  auto rep = four_point_delta(graph_of(4, edges));
  EXPECT_EQ(static_cast<int>(rep.twice_delta), oracle_twice);
  EXPECT_DOUBLE_EQ(rep.delta(), 1.0);
}

TEST(FourPoint, AgreesWithBruteForceOnSmallGraphs) {
  std::vector<std::pair<int, oracle::Edges>> cases = {
      {9, oracle::grid_edges(3, 3)}, {7, oracle::cycle_edges(7)}, {12, oracle::grid_edges(4, 3)}};
  for (const auto& [n, edges] : cases) {
    auto g = graph_of(n, edges);
    auto rep = four_point_delta(g);
    EXPECT_EQ(static_cast<int>(rep.twice_delta), oracle::twice_delta(oracle::floyd_warshall(n, edges)));
    DistanceMatrix d(g);
    auto w = rep.witness;
    EXPECT_EQ(four_point_excess(d, w[0], w[1], w[2], w[3]), rep.twice_delta);
  }
}

TEST(FourPoint, FreeGroupBallSampledIsZeroAndFast) {
  auto ball = cayley_ball(fixtures::free2(), 6);
  ASSERT_EQ(ball.size(), 1457u);
  auto start = std::chrono::steady_clock::now();
  auto rep = four_point_delta(ball.graph, FourPointBudget{1000000, 7});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(rep.twice_delta, 0u);
  EXPECT_FALSE(rep.exhaustive);
  EXPECT_EQ(rep.seed, 7u);
  EXPECT_LT(secs, 5.0);
}

TEST(FourPoint, SampledIsMonotoneInSampleCount) {
  auto g = graph_of(36, oracle::grid_edges(6, 6));
  DistanceMatrix d(g);
  std::uint32_t prev = 0;
  for (std::uint64_t s : {10, 100, 1000, 10000}) {
    auto rep = four_point_delta(g, d, FourPointBudget{s, 3});
    EXPECT_GE(rep.twice_delta, prev);
    prev = rep.twice_delta;
  }
  EXPECT_LE(prev, four_point_delta(g, d).twice_delta);
}

TEST(Projection, MemberProjectsToItself) {
  auto g = graph_of(25, oracle::grid_edges(5, 5));
  std::vector<Vertex> h{0, 1, 2, 3, 4};
  EXPECT_EQ(closest_point_projection(g, h, 3), VertexSet{3});
}

TEST(Projection, FreeGroupAxis) {
  auto ball = cayley_ball(fixtures::free2(), 5);
  std::vector<Vertex> axis;
  for (const char* w : {"a^-5", "a^-4", "a^-3", "a^-2", "a'", "1", "a", "a^2", "a^3", "a^4", "a^5"}) {
    axis.push_back(ball.vertex(w));
  }
  auto d = oracle::floyd_warshall(static_cast<int>(ball.size()), fixtures::to_oracle(ball.graph));
  std::vector<int> h(axis.begin(), axis.end());
  Vertex b = ball.vertex("b");
  Vertex far = ball.vertex("a^2 b^3");
  auto expect_b = oracle::projection(d, static_cast<int>(b), h);
  auto expect_far = oracle::projection(d, static_cast<int>(far), h);
  ASSERT_EQ(expect_b, std::vector<int>{static_cast<int>(ball.vertex("1"))});
  ASSERT_EQ(expect_far, std::vector<int>{static_cast<int>(ball.vertex("a^2"))});
  std::sort(axis.begin(), axis.end());
  EXPECT_EQ(fixtures::ints(closest_point_projection(ball.graph, axis, b)), expect_b);
  EXPECT_EQ(fixtures::ints(closest_point_projection(ball.graph, axis, far)), expect_far);
}

TEST(Projection, SubsetAndEquidistant) {
  auto edges = oracle::grid_edges(5, 5);
  auto g = graph_of(25, edges);
  auto d = oracle::floyd_warshall(25, edges);
  std::vector<Vertex> h{6, 7, 8, 13, 18};
  for (Vertex x = 0; x < 25; ++x) {
    auto p = closest_point_projection(g, h, x);
    ASSERT_FALSE(p.empty());
    for (Vertex v : p) {
      EXPECT_TRUE(std::find(h.begin(), h.end(), v) != h.end());
      EXPECT_EQ(d[x][v], d[x][p.front()]);
    }
    EXPECT_EQ(fixtures::ints(p), oracle::projection(d, static_cast<int>(x), {6, 7, 8, 13, 18}));
  }
  auto field = nearest_points(g, h);
  for (Vertex x = 0; x < 25; ++x) {
    auto row = field.nearest[x];
    EXPECT_EQ(VertexSet(row.begin(), row.end()), closest_point_projection(g, h, x));
  }
}

TEST(Projection, UnreachableTargetThrows) {
  auto g = MetricGraph::from_edges(3, {{0, 1}});
  std::vector<Vertex> h{2};
  EXPECT_THROW(closest_point_projection(g, h, 0), Error);
}

TEST(QuasiConvexity, ConvexSubtree) {
  auto edges = fixtures::random_tree(30, 11);
  auto g = graph_of(30, edges);
  // the subtree spanned by 0 and its descendants up to depth 2 is convex
  auto d = bfs(g, Vertex{0});
  std::vector<Vertex> h;
  for (Vertex v = 0; v < 30; ++v) {
    if (d[v] <= 2) h.push_back(v);
  }
  EXPECT_EQ(oracle::quasiconvexity(30, edges, {h.begin(), h.end()}), 0);
  EXPECT_EQ(quasiconvexity_constant(g, h).q, 0u);
}

TEST(QuasiConvexity, EightCycleHalf) {
  auto edges = oracle::cycle_edges(8);
  auto g = graph_of(8, edges);
  // length-4 half: its endpoints are antipodal, so the other half is also a geodesic
  std::vector<Vertex> closed{0, 1, 2, 3, 4};
  int expected_closed = oracle::quasiconvexity(8, edges, {0, 1, 2, 3, 4});
  EXPECT_EQ(expected_closed, 2);
  EXPECT_EQ(static_cast<int>(quasiconvexity_constant(g, closed).q), expected_closed);
  std::vector<Vertex> open{0, 1, 2, 3};
  int expected_open = oracle::quasiconvexity(8, edges, {0, 1, 2, 3});
  EXPECT_EQ(expected_open, 0);
  EXPECT_EQ(static_cast<int>(quasiconvexity_constant(g, open).q), expected_open);
}

TEST(QuasiConvexity, GridBoundaryRowAndOtherSets) {
  auto edges = oracle::grid_edges(5, 5);
  auto g = graph_of(25, edges);
  auto d = oracle::floyd_warshall(25, edges);
  std::vector<std::vector<Vertex>> sets = {{0, 1, 2, 3, 4}, {0, 24}, {0, 4, 20, 24}, {2, 10, 14, 22}, {0, 6, 12, 18, 24}};
  for (const auto& h : sets) {
    int expected = oracle::quasiconvexity(25, edges, {h.begin(), h.end()});
    auto rep = quasiconvexity_constant(g, h);
    EXPECT_EQ(static_cast<int>(rep.q), expected);
    EXPECT_TRUE(rep.exhaustive);
    ASSERT_TRUE(rep.witness_geodesic.valid_in(g));
    EXPECT_EQ(rep.witness_geodesic.length(), static_cast<std::size_t>(d[rep.from][rep.to]));
    EXPECT_EQ(oracle::dist_to_set(d, rep.far_point, {h.begin(), h.end()}), expected);
  }
}

TEST(Hausdorff, Examples) {
  auto edges = oracle::grid_edges(5, 5);
  auto g = graph_of(25, edges);
  std::vector<Vertex> row1{5, 6, 7, 8, 9}, row3{15, 16, 17, 18, 19};
  EXPECT_EQ(hausdorff_distance(g, row1, row1), 0u);
  auto d = oracle::floyd_warshall(25, edges);
  int expected = oracle::hausdorff(d, {5, 6, 7, 8, 9}, {15, 16, 17, 18, 19});
  EXPECT_EQ(expected, 2);
  EXPECT_EQ(static_cast<int>(hausdorff_distance(g, row1, row3)), expected);
  EXPECT_EQ(hausdorff_distance(g, row3, row1), hausdorff_distance(g, row1, row3));

  auto ball = cayley_ball(fixtures::free2(), 2);
  std::vector<Vertex> e{ball.vertex("1")};
  std::vector<Vertex> pair = make_set({ball.vertex("a"), ball.vertex("a'")});
  EXPECT_EQ(hausdorff_distance(ball.graph, e, pair), 1u);
}

TEST(Hausdorff, ZeroIffEqual) {
  auto g = graph_of(25, oracle::grid_edges(5, 5));
  for (std::uint64_t i = 0; i < 50; ++i) {
    VertexSet a = make_set({Vertex(draw(1, 1, i) % 25), Vertex(draw(1, 2, i) % 25)});
    VertexSet b = make_set({Vertex(draw(1, 3, i) % 25), Vertex(draw(1, 4, i) % 25)});
    EXPECT_EQ(hausdorff_distance(g, a, b) == 0, a == b);
    EXPECT_EQ(hausdorff_distance(g, a, b), hausdorff_distance(g, b, a));
  }
}

TEST(GraphIo, EdgeListRoundTrip) {
  auto ball = cayley_ball(fixtures::free2(), 2);
  std::ostringstream out;
  write_edge_list(out, ball.graph);
  std::istringstream in(out.str());
  auto g = read_edge_list(in);
  EXPECT_EQ(g.edge_count(), 16u);
  EXPECT_EQ(g.vertex_count(), 17u);
  EXPECT_EQ(g.edges(), ball.graph.edges());
}

TEST(GraphIo, ReadsCommentsAndRejectsGarbage) {
  std::istringstream in("# a path\n0 1\n1 2 # trailing\n\n");
  auto g = read_edge_list(in);
  EXPECT_EQ(g.vertex_count(), 3u);
  EXPECT_EQ(g.edge_count(), 2u);
  std::istringstream bad("0 x\n");
  EXPECT_THROW(read_edge_list(bad), Error);
}

TEST(GraphIo, DotMarksHighlightedEdges) {
  auto g = MetricGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  std::ostringstream out;
  write_dot(out, g, {{0, 2}});
  auto s = out.str();
  EXPECT_NE(s.find("0 -- 2 [style=dashed"), std::string::npos);
  EXPECT_EQ(s.find("0 -- 1 [style"), std::string::npos);
}
