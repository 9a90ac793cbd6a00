#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "hhs/cayley.hpp"

using namespace hhs;

TEST(NormalForm, FreeReduction) {
  auto f = fixtures::free2();
  EXPECT_EQ(f.format(f.normal_form(f.parse("a a' b"))), "b");
  EXPECT_EQ(f.format(f.normal_form(f.parse("a b b' a'"))), "1");
}

TEST(NormalForm, EdgelessRaagIsFree) {
  auto g = GroupModel::raag({"a", "b"}, {});
  EXPECT_EQ(g.effective_kind(), GroupKind::Free);
  EXPECT_EQ(g.format(g.normal_form(g.parse("a b"))), "a b");
  EXPECT_EQ(g.format(g.normal_form(g.parse("b a"))), "b a");
}

TEST(NormalForm, OneEdgeRaagSortsCommutingLetters) {
  auto g = GroupModel::raag({"a", "b"}, {{0, 1}});
  auto nf = g.normal_form(g.parse("b a"));
  EXPECT_EQ(g.format(nf), "a b");
  // abelianization oracle: same exponent sums as the input
  EXPECT_EQ(g.abelianize(nf), g.abelianize(g.parse("b a")));
}

TEST(NormalForm, RaagPathGraph) {
  // a - b - c: a and c do not commute
  auto g = GroupModel::raag({"a", "b", "c"}, {{0, 1}, {1, 2}});
  EXPECT_EQ(g.effective_kind(), GroupKind::Raag);
  EXPECT_EQ(g.format(g.normal_form(g.parse("c b a"))), "b c a");
  EXPECT_EQ(g.format(g.normal_form(g.parse("a b a'"))), "b");
  EXPECT_EQ(g.format(g.normal_form(g.parse("a c a'"))), "a c a'");
  EXPECT_EQ(g.format(g.normal_form(g.parse("c a b c'"))), "b c a c'");
}

TEST(NormalForm, FreeProductMergesSyllables) {
  auto z2 = GroupModel::free_abelian({"a", "b"});
  auto z = GroupModel::free({"c"});
  auto g = GroupModel::free_product({z2, z});
  EXPECT_EQ(g.effective_kind(), GroupKind::FreeProduct);
  EXPECT_EQ(g.format(g.normal_form(g.parse("b a c c' a'"))), "b");
  EXPECT_EQ(g.format(g.normal_form(g.parse("b a c b"))), "a b c b");
}

TEST(NormalForm, IdempotentAndInverseCancels) {
  std::vector<GroupModel> models = {fixtures::free2(), fixtures::z2(),
                                    GroupModel::raag({"a", "b", "c", "d"}, {{0, 1}, {1, 2}, {2, 3}}),
                                    GroupModel::free_product({fixtures::z2(), fixtures::free_cd()})};
  for (const auto& m : models) {
    for (std::uint64_t i = 0; i < 300; ++i) {
      Word w;
      std::size_t len = draw(2, 0, i) % 12;
      for (std::size_t k = 0; k < len; ++k) w.push_back(static_cast<Letter>(draw(2, 1 + k, i) % (2 * m.rank())));
      auto nf = m.normal_form(w);
      EXPECT_EQ(m.normal_form(nf), nf);
      EXPECT_TRUE(m.normal_form(concat(w, inverse(w))).empty());
      EXPECT_LE(nf.size(), w.size());
      EXPECT_EQ(m.abelianize(nf), m.abelianize(w));
    }
  }
}

TEST(NormalForm, UnknownGenerator) {
  auto f = fixtures::free2();
  try {
    f.parse("a z");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownGenerator);
  }
  EXPECT_THROW(f.normal_form(Word{7}), Error);
}

TEST(NormalForm, ParseSyntax) {
  auto f = fixtures::free2();
  EXPECT_EQ(f.parse("a^3 b'"), f.parse("a a a b'"));
  EXPECT_EQ(f.parse("a^-2"), f.parse("a' a'"));
  EXPECT_TRUE(f.parse("1").empty());
  EXPECT_TRUE(f.parse("").empty());
  EXPECT_EQ(f.format(f.parse("a b' a")), "a b' a");
}

TEST(CayleyBall, Counts) {
  EXPECT_EQ(cayley_ball(fixtures::free2(), 0).size(), 1u);
  EXPECT_EQ(cayley_ball(fixtures::free2(), 2).size(), 17u);
  // lattice points with |x|+|y| <= 2
  int lattice = 0;
  for (int x = -2; x <= 2; ++x)
    for (int y = -2; y <= 2; ++y) lattice += (std::abs(x) + std::abs(y) <= 2);
  EXPECT_EQ(cayley_ball(fixtures::z2(), 2).size(), static_cast<std::size_t>(lattice));
  EXPECT_EQ(lattice, 13);
}

TEST(CayleyBall, FreeGroupGrowth) {
  for (std::uint32_t r = 0; r <= 7; ++r) {
    std::size_t expected = 2;
    for (std::uint32_t k = 0; k < r; ++k) expected *= 3;
    EXPECT_EQ(cayley_ball(fixtures::free2(), r).size(), expected - 1);
  }
}

TEST(CayleyBall, MatchesOracleWords) {
  auto ball = cayley_ball(fixtures::free2(), 4);
  auto words = oracle::free_ball(2, 4);
  std::set<std::string> expected;
  for (const auto& w : words) expected.insert(oracle::tokens(w));
  std::set<std::string> got;
  for (Vertex v = 0; v < ball.size(); ++v) got.insert(ball.label(v));
  EXPECT_EQ(got, expected);
}

TEST(CayleyBall, EdgesAreGeneratorSteps) {
  std::vector<GroupModel> models = {fixtures::free2(), fixtures::z2(), GroupModel::raag({"a", "b", "c"}, {{0, 1}})};
  for (const auto& m : models) {
    auto ball = cayley_ball(m, 4);
    for (Vertex v = 0; v < ball.size(); ++v) {
      for (Letter l = 0; l < 2 * m.rank(); ++l) {
        auto u = ball.find(concat(ball.words[v], Word{l}));
        if (u) EXPECT_TRUE(ball.graph.has_edge(v, *u));
      }
      for (Vertex u : ball.graph.neighbors(v)) {
        auto diff = m.normal_form(concat(inverse(ball.words[v]), ball.words[u]));
        EXPECT_EQ(diff.size(), 1u);
      }
      EXPECT_LE(ball.words[v].size(), 4u);
    }
    EXPECT_TRUE(ball.graph.connected());
  }
}

TEST(CayleyBall, ShortlexVertexOrder) {
  auto ball = cayley_ball(fixtures::free2(), 3);
  for (Vertex v = 1; v < ball.size(); ++v) EXPECT_TRUE(shortlex_less(ball.words[v - 1], ball.words[v]));
}

TEST(CayleyBall, BudgetExceeded) {
  try {
    cayley_ball(fixtures::free2(), 6, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
  }
}

TEST(Membership, SimpleCases) {
  auto f = fixtures::free2();
  auto h = make_subgroup(f, "<a>", {"a"});
  EXPECT_TRUE(subgroup_membership(f, h, f.parse("a^5")).member);
  EXPECT_FALSE(subgroup_membership(f, h, f.parse("b a b'")).member);
  EXPECT_FALSE(subgroup_membership(f, h, f.parse("b a b'")).radius_limited);
}

TEST(Membership, FoldingAgreesWithEnumeration) {
  auto f = fixtures::free2();
  std::vector<std::vector<std::string>> gens = {{"ab", "aa"}, {"ab"}, {"ab", "ba"}, {"aab", "bAb"}, {"a", "bab"}};
  for (const auto& g : gens) {
    std::vector<std::string> tok;
    for (const auto& w : g) tok.push_back(oracle::tokens(w));
    auto h = make_subgroup(f, "H", tok);
    auto elements = oracle::subgroup_elements(g, 10, 6);
    for (const auto& w : oracle::free_ball(2, 6)) {
      bool expected = elements.count(w) > 0;
      EXPECT_EQ(subgroup_membership(f, h, f.parse(oracle::tokens(w))).member, expected) << w;
    }
  }
  auto h = make_subgroup(f, "H", {"a b", "a^2"});
  auto elements = oracle::subgroup_elements({"ab", "aa"}, 10, 6);
  EXPECT_EQ(subgroup_membership(f, h, f.parse("b a^2 b")).member, elements.count("baab") > 0);
}

TEST(Membership, FreeAbelianLattice) {
  auto z = GroupModel::free_abelian({"a", "b", "c"});
  auto h = make_subgroup(z, "H", {"a^2 b", "b^3 c'"});
  EXPECT_TRUE(subgroup_membership(z, h, z.parse("a^2 b a^2 b")).member);
  EXPECT_TRUE(subgroup_membership(z, h, z.parse("a^-2 b^2 c'")).member);
  EXPECT_FALSE(subgroup_membership(z, h, z.parse("a")).member);
  // brute force over small combinations
  for (int x = -3; x <= 3; ++x)
    for (int y = -3; y <= 3; ++y) {
      Word w;
      for (int i = 0; i < std::abs(x); ++i) w = concat(w, z.parse(x > 0 ? "a^2 b" : "b' a^-2"));
      for (int i = 0; i < std::abs(y); ++i) w = concat(w, z.parse(y > 0 ? "b^3 c'" : "c b^-3"));
      EXPECT_TRUE(subgroup_membership(z, h, w).member);
      EXPECT_FALSE(subgroup_membership(z, h, concat(w, z.parse("b"))).member);
    }
}

TEST(Membership, RaagFallbackIsFlagged) {
  auto g = GroupModel::raag({"a", "b", "c"}, {{0, 1}});
  auto h = make_subgroup(g, "<a,b>", {"a", "b"});
  auto v = subgroup_membership(g, h, g.parse("b a b"));
  EXPECT_TRUE(v.member);
  EXPECT_TRUE(v.radius_limited);
  EXPECT_FALSE(subgroup_membership(g, h, g.parse("c")).member);
  try {
    subgroup_membership(g, h, g.parse("a"), OracleLimits{12, 10});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Inconclusive);
  }
}

TEST(Cosets, WholeGroupAndTrivialSubgroup) {
  auto f = fixtures::free2();
  auto ball = cayley_ball(f, 3);
  auto whole = enumerate_cosets(ball, make_subgroup(f, "G", {"a", "b"}));
  ASSERT_EQ(whole.size(), 1u);
  EXPECT_TRUE(whole[0].representative.empty());
  auto trivial = enumerate_cosets(ball, make_subgroup(f, "1", {}));
  EXPECT_EQ(trivial.size(), ball.size());
}

TEST(Cosets, AxisCosetsAtRadiusTwo) {
  auto f = fixtures::free2();
  auto ball = cayley_ball(f, 2);
  auto h = make_subgroup(f, "<a>", {"a"});
  auto cosets = enumerate_cosets(ball, h);
  // oracle: group ball words by the reduced word with trailing a-letters removed
  std::set<std::string> reps;
  for (const auto& w : oracle::free_ball(2, 2)) {
    std::string s = w;
    while (!s.empty() && std::tolower(s.back()) == 'a') s.pop_back();
    reps.insert(s);
  }
  ASSERT_EQ(cosets.size(), reps.size());
  std::set<std::string> got;
  for (const auto& c : cosets) got.insert(f.format(c.representative));
  std::set<std::string> expected;
  for (const auto& r : reps) expected.insert(oracle::tokens(r));
  EXPECT_EQ(got, expected);
  // every vertex in exactly one coset; representative shortlex-least
  std::vector<int> hits(ball.size(), 0);
  for (const auto& c : cosets) {
    for (Vertex v : c.members) {
      ++hits[v];
      EXPECT_FALSE(shortlex_less(ball.words[v], c.representative));
      EXPECT_TRUE(subgroup_membership(f, h, concat(inverse(c.representative), ball.words[v])).member);
    }
  }
  for (int x : hits) EXPECT_EQ(x, 1);
}

TEST(Cosets, PartitionAcrossKinds) {
  std::vector<std::pair<GroupModel, std::vector<std::string>>> cases = {
      {fixtures::free2(), {"a b", "b a"}},
      {fixtures::z2(), {"a"}},
      {GroupModel::raag({"a", "b", "c"}, {{0, 1}}), {"a"}},
  };
  for (const auto& [m, gens] : cases) {
    auto ball = cayley_ball(m, 4);
    auto h = make_subgroup(m, "H", gens);
    std::vector<int> hits(ball.size(), 0);
    for (const auto& c : enumerate_cosets(ball, h)) {
      for (Vertex v : c.members) ++hits[v];
      EXPECT_EQ(c.members.front(), c.rep_vertex);
    }
    for (int x : hits) EXPECT_EQ(x, 1);
  }
}

TEST(Cosets, SubgraphSegments) {
  auto f = fixtures::free2();
  auto ball = cayley_ball(f, 4);
  auto ha = make_subgroup(f, "<a>", {"a"});
  auto hb = make_subgroup(f, "<b>", {"b"});
  auto find_rep = [&](const std::vector<CosetDescriptor>& cs, const std::string& rep) {
    for (const auto& c : cs)
      if (f.format(c.representative) == rep) return c;
    throw std::runtime_error("no coset " + rep);
  };
  auto ca = enumerate_cosets(ball, ha);
  auto axis = coset_subgraph(ball, find_rep(ca, "1"));
  EXPECT_EQ(axis.subgraph.vertices.size(), 9u);  // a^-4 .. a^4
  EXPECT_FALSE(axis.truncated);
  // b<a> inside radius 4: b a^k with |k| <= 3
  auto bseg = coset_subgraph(ball, find_rep(ca, "b"));
  std::set<std::string> expected;
  for (int k = -3; k <= 3; ++k) expected.insert(f.format(f.normal_form(f.parse("b a^" + std::to_string(k)))));
  std::set<std::string> got;
  for (Vertex v : bseg.subgraph.vertices) got.insert(ball.label(v));
  EXPECT_EQ(got, expected);
  auto cb = enumerate_cosets(ball, hb);
  auto aseg = coset_subgraph(ball, find_rep(cb, "a"));
  EXPECT_EQ(aseg.subgraph.vertices.size(), 7u);
  for (Vertex v : aseg.subgraph.vertices) EXPECT_EQ(ball.label(v).substr(0, 1), "a");
  EXPECT_TRUE(is_connected_subset(ball.graph, aseg.subgraph.vertices));
}

TEST(Cosets, ThickenedForLongGenerators) {
  auto f = fixtures::free2();
  auto ball = cayley_ball(f, 4);
  auto h = make_subgroup(f, "<ab>", {"a b"});
  auto cs = enumerate_cosets(ball, h);
  auto piece = coset_subgraph(ball, cs.front());
  EXPECT_TRUE(is_connected_subset(ball.graph, piece.subgraph.vertices));
  EXPECT_GT(piece.thickening, 0u);
  EXPECT_FALSE(piece.truncated);
}
