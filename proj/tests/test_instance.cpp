#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stoclot;
using stoclot::testing::bipartite;

TEST(Ball, UniformMetricHalfRadius) {
  const auto scc = stoclot::testing::uniform_gadget(4, 1);
  EXPECT_EQ(ball(scc, 2, 0.5), std::vector<FacilityIndex>{2});
  const auto split = bipartite({{1, 1}, {1, 1}}, 1);
  EXPECT_TRUE(ball(split, 0, 0.5).empty());
}

TEST(Ball, MaxRadiusIsEverything) {
  const auto inst = bipartite({{1}, {2}, {3}}, 1);
  EXPECT_EQ(ball(inst, 0, 3.0).size(), 3u);
}

TEST(Ball, ClosedInequality) {
  const auto inst = bipartite({{1}, {2}, {3}}, 1);
  EXPECT_EQ(ball(inst, 0, 2.0), (std::vector<FacilityIndex>{0, 1}));
}

TEST(Ball, RejectsUnknownClientAndNegativeRadius) {
  const auto inst = bipartite({{1}}, 1);
  EXPECT_THROW(ball(inst, 3, 1.0), input_error);
  EXPECT_THROW(ball(inst, 0, -1.0), input_error);
  EXPECT_THROW(inst.client_index("nope"), input_error);
}

TEST(Nearest, SccIsSelf) {
  const auto inst = stoclot::testing::random_scc(6, 2, 3);
  for (ClientIndex j = 0; j < 6; ++j) {
    EXPECT_EQ(nearest(inst, j).facility, j);
    EXPECT_EQ(nearest(inst, j).distance, 0.0);
  }
}

TEST(Nearest, LeastIndexOnTies) {
  const auto inst = bipartite({{2}, {1}, {1}}, 1);
  EXPECT_EQ(nearest(inst, 0).facility, 1u);
  EXPECT_EQ(nearest(inst, 0).distance, 1.0);
  EXPECT_EQ(nearest(bipartite({{5}}, 1), 0).facility, 0u);
}

TEST(ServiceDistance, Examples) {
  const auto inst = bipartite({{4}, {3}, {7}}, 2);
  EXPECT_EQ(service_distance(inst, 0, SolutionSet({0, 1, 2})), nearest(inst, 0).distance);
  EXPECT_EQ(service_distance(inst, 0, SolutionSet({2})), 7.0);
  EXPECT_EQ(service_distance(inst, 0, SolutionSet({0, 1})), 3.0);
  EXPECT_THROW(service_distance(inst, 0, SolutionSet{}), input_error);
}

TEST(ServiceDistance, MatchedFacilityLeastIndex) {
  const auto inst = bipartite({{2}, {2}, {1}}, 2);
  EXPECT_EQ(matched_facility(inst, 0, SolutionSet({0, 1})).facility, 0u);
}

TEST(CoreProperties, MonotoneInSetAndRadius) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = stoclot::testing::random_split(6, 5, 2, seed, InstanceKind::random_metric);
    RandomSource rng(seed);
    for (ClientIndex j = 0; j < inst.num_clients(); ++j) {
      std::vector<FacilityIndex> small, big;
      for (FacilityIndex f = 0; f < inst.num_facilities(); ++f) {
        const bool in_small = rng.bernoulli(0.3);
        if (in_small) small.push_back(f);
        if (in_small || rng.bernoulli(0.5)) big.push_back(f);
      }
      if (small.empty()) continue;
      EXPECT_LE(service_distance(inst, j, SolutionSet(big)), service_distance(inst, j, SolutionSet(small)));
      std::vector<FacilityIndex> all(inst.num_facilities());
      for (FacilityIndex f = 0; f < all.size(); ++f) all[f] = f;
      EXPECT_EQ(service_distance(inst, j, SolutionSet(all)), nearest(inst, j).distance);
      const double r1 = 10 * rng.uniform(), r2 = r1 + 5 * rng.uniform();
      const auto b1 = ball(inst, j, r1), b2 = ball(inst, j, r2);
      EXPECT_TRUE(std::includes(b2.begin(), b2.end(), b1.begin(), b1.end()));
    }
  }
}

TEST(Metric, ValidationCatchesViolations) {
  EXPECT_THROW(Metric::dense(3, {0, 1, 5, 1, 0, 1, 5, 1, 0}).validate(), input_error);
  EXPECT_THROW(Metric::dense(2, {0, 1, 2, 0}).validate(), input_error);
  EXPECT_THROW(Metric::dense(2, {1, 1, 1, 0}).validate(), input_error);
  EXPECT_NO_THROW(Metric::dense(3, {0, 1, 2, 1, 0, 1, 2, 1, 0}).validate());
}

TEST(Instance, BudgetAndSccChecks) {
  auto m = Metric::dense(2, {0, 1, 1, 0});
  EXPECT_THROW(Instance(m, {0}, {1}, 0, false), input_error);
  EXPECT_THROW(Instance(m, {0}, {1}, 2, false), input_error);
  EXPECT_THROW(Instance(m, {0}, {1}, 1, true), input_error);
}

TEST(Instance, DuplicatedFacilitiesShareDistances) {
  const auto inst = bipartite({{1, 2}}, 1);
  const auto dup = inst.with_duplicated_facilities(3);
  ASSERT_EQ(dup.num_facilities(), 3u);
  for (FacilityIndex f = 0; f < 3; ++f) {
    EXPECT_EQ(dup.facility_origin(f), 0u);
    EXPECT_EQ(dup.dist(f, 1), 2.0);
  }
}

TEST(Generators, UniformGadgetAllOnes) {
  const auto inst = stoclot::testing::uniform_gadget(5, 2);
  EXPECT_TRUE(inst.scc());
  for (FacilityIndex f = 0; f < 5; ++f)
    for (ClientIndex j = 0; j < 5; ++j) EXPECT_EQ(inst.dist(f, j), f == j ? 0.0 : 1.0);
}

TEST(Generators, EuclideanSinglePoint) {
  const auto inst = stoclot::testing::random_scc(1, 1, 9);
  EXPECT_EQ(inst.num_facilities(), 1u);
  EXPECT_EQ(inst.dist(0, 0), 0.0);
}

TEST(Generators, RandomMetricTriangleAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = stoclot::testing::random_scc(10, 3, seed, InstanceKind::random_metric);
    EXPECT_NO_THROW(a.metric().validate());
    const auto b = stoclot::testing::random_scc(10, 3, seed, InstanceKind::random_metric);
    for (FacilityIndex f = 0; f < 10; ++f)
      for (ClientIndex j = 0; j < 10; ++j) EXPECT_EQ(a.dist(f, j), b.dist(f, j));
  }
}

TEST(Generators, StarDistances) {
  GenParams p;
  p.kind = InstanceKind::star;
  p.n = 5;
  p.k = 1;
  const auto inst = gen_instance(p, 0);
  EXPECT_EQ(inst.dist(0, 3), 1.0);
  EXPECT_EQ(inst.dist(2, 3), 2.0);
}

TEST(Generators, FeasibleDemandsAreMetByTheirLottery) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = stoclot::testing::random_split(5, 4, 2, seed);
    RandomSource rng(seed);
    const auto chance = feasible_chance_demand(inst, rng);
    EXPECT_TRUE(solve_chance_lp(inst, chance).feasible());
    const auto expected = feasible_expected_demand(inst, rng);
    EXPECT_TRUE(solve_expectation_lp(inst, expected).feasible());
  }
}

TEST(Io, InstanceRoundTripMatrixAndEuclidean) {
  for (auto kind : {InstanceKind::random_metric, InstanceKind::euclidean}) {
    const auto inst = stoclot::testing::random_split(4, 3, 2, 11, kind);
    const auto text = io::dump(io::instance_to_json(inst));
    const auto back = io::instance_from_json(io::parse(text, "test"));
    ASSERT_EQ(back.num_facilities(), inst.num_facilities());
    ASSERT_EQ(back.num_clients(), inst.num_clients());
    EXPECT_EQ(back.k(), inst.k());
    for (FacilityIndex f = 0; f < inst.num_facilities(); ++f)
      for (ClientIndex j = 0; j < inst.num_clients(); ++j) EXPECT_EQ(back.dist(f, j), inst.dist(f, j));
    EXPECT_EQ(io::dump(io::instance_to_json(back)), text);
  }
}

TEST(Io, DemandsRoundTripAndErrors) {
  const auto inst = stoclot::testing::random_scc(3, 1, 1);
  io::Demands d;
  d.chance = DemandChance{{0.5, 1.0, 0.0}, {0.1, 0.2, 0.3}};
  d.expected = DemandExpected{{1.0 / 3.0, 2.0, 0.0}};
  const auto back = io::demands_from_json(inst, io::parse(io::dump(io::demands_to_json(inst, d)), "t"));
  EXPECT_EQ(back.chance->p, d.chance->p);
  EXPECT_EQ(back.chance->r, d.chance->r);
  EXPECT_EQ(back.expected->t, d.expected->t);
  EXPECT_THROW(io::demands_from_json(inst, io::parse(R"({"expected":[{"client":"p0","t":1}]})", "t")), input_error);
  EXPECT_THROW(io::demands_from_json(inst, io::parse(R"({"chance":[{"client":"zz","p":1,"r":1}]})", "t")),
               input_error);
  EXPECT_THROW(io::parse("{", "t"), input_error);
}
