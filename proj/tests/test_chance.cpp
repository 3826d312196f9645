#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stoclot;
using stoclot::testing::bipartite;

namespace {

constexpr std::size_t kSamples = 20000;
const double kFaithful = 1.0 - std::exp(-1.0);

Guarantees coverage(const DemandChance& d, double radius_factor, double prob_factor) {
  Guarantees g;
  for (std::size_t j = 0; j < d.p.size(); ++j) {
    g.cover_radius.push_back(radius_factor * d.r[j]);
    g.min_coverage.push_back(prob_factor * d.p[j]);
  }
  return g;
}

DemandChance random_demand(const Instance& inst, std::uint64_t seed) {
  RandomSource rng(seed);
  return feasible_chance_demand(inst, rng);
}

}  // namespace

TEST(Faithful, GadgetCoverage) {
  const int k = 3;
  const auto inst = stoclot::testing::uniform_gadget(k + 1, k);
  DemandChance d{std::vector<double>(k + 1, 0.75), std::vector<double>(k + 1, 0.0)};
  FaithfulRounding alg(inst, d);
  const auto rep = mc_verify(inst, [&](RandomSource& r) { return alg.sample(r); }, coverage(d, 1.0, kFaithful),
                             kSamples, 1);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_open_observed, 3u);
}

TEST(Faithful, FullMassFacilityAlwaysCounted) {
  const auto inst = bipartite({{1, 1, 1}, {5, 5, 5}}, 1);
  DemandChance d{{1, 1, 1}, {1, 1, 1}};
  FaithfulRounding alg(inst, d);
  RandomSource rng(3);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(alg.sample(rng).open, std::vector<FacilityIndex>{0});
}

TEST(Faithful, RandomInstances) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto inst = stoclot::testing::random_split(8, 6, 3, seed);
    const auto d = random_demand(inst, seed);
    FaithfulRounding alg(inst, d);
    EXPECT_TRUE(mc_verify(inst, [&](RandomSource& r) { return alg.sample(r); }, coverage(d, 1.0, kFaithful),
                          kSamples, seed)
                    .pass);
  }
}

TEST(Faithful, InfeasiblePropagates) {
  const auto inst = bipartite({{2}}, 1);
  EXPECT_THROW(FaithfulRounding(inst, DemandChance{{1.0}, {1.0}}), infeasible_error);
}

TEST(HalfHomogeneous, AllOnesIsDeterministicCover) {
  const auto inst = stoclot::testing::random_scc(10, 3, 4);
  // Smallest radius on a 0.05 grid for which the all-ones LP is feasible.
  std::vector<double> r(10, 0.05);
  DemandChance d{std::vector<double>(10, 1.0), r};
  while (!solve_chance_lp(inst, d).feasible()) {
    for (double& x : r) x += 0.05;
    d.r = r;
  }
  HalfHomogeneousRounding alg(inst, d, HalfHomogeneousMode::equal_p);
  RandomSource rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = alg.sample(rng);
    for (ClientIndex j = 0; j < 10; ++j) EXPECT_LE(service_distance(inst, j, s), 2 * r[j] + 1e-12);
  }
}

TEST(HalfHomogeneous, SingleClientOpensNearestWithProbabilityP) {
  const auto inst = bipartite({{1}, {2}}, 1);
  DemandChance d{{0.3}, {2.0}};
  HalfHomogeneousRounding alg(inst, d, HalfHomogeneousMode::equal_r);
  RandomSource root(2);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < kSamples; ++s) {
    auto rng = root.child(s);
    const auto S = alg.sample(rng);
    if (!S.empty()) {
      EXPECT_EQ(S.open, std::vector<FacilityIndex>{0});
      ++hits;
    }
  }
  EXPECT_NEAR(double(hits) / kSamples, 0.3, 0.01);
}

TEST(HalfHomogeneous, ModeMismatchRejected) {
  const auto inst = bipartite({{1, 1}}, 1);
  EXPECT_THROW(HalfHomogeneousRounding(inst, DemandChance{{0.5, 0.6}, {1, 1}}, HalfHomogeneousMode::equal_p),
               input_error);
  EXPECT_THROW(HalfHomogeneousRounding(inst, DemandChance{{0.5, 0.5}, {1, 2}}, HalfHomogeneousMode::equal_r),
               input_error);
}

TEST(HalfHomogeneous, SccEqualP) {
  const auto inst = stoclot::testing::random_scc(20, 3, 5);
  RandomSource rng(5);
  DemandChance d{std::vector<double>(20, 0.7), {}};
  for (ClientIndex j = 0; j < 20; ++j) d.r.push_back(0.3 + 0.3 * rng.uniform());
  ASSERT_TRUE(solve_chance_lp(inst, d).feasible());
  HalfHomogeneousRounding alg(inst, d, HalfHomogeneousMode::equal_p);
  EXPECT_TRUE(mc_verify(inst, [&](RandomSource& r) { return alg.sample(r); }, coverage(d, 2.0, 1.0), kSamples, 5).pass);
}

TEST(HalfHomogeneous, NonSccEqualR) {
  const auto inst = stoclot::testing::random_split(8, 8, 3, 6);
  RandomSource rng(6);
  DemandChance d{{}, std::vector<double>(8, 0.4)};
  for (ClientIndex j = 0; j < 8; ++j) d.p.push_back(0.2 + 0.6 * rng.uniform());
  if (!solve_chance_lp(inst, d).feasible()) GTEST_SKIP() << "infeasible draw";
  HalfHomogeneousRounding alg(inst, d, HalfHomogeneousMode::equal_r);
  EXPECT_TRUE(mc_verify(inst, [&](RandomSource& r) { return alg.sample(r); }, coverage(d, 3.0, 1.0), kSamples, 6).pass);
}

TEST(Iterative, AllOnesIsDeterministic) {
  const auto inst = stoclot::testing::random_split(6, 6, 3, 7);
  std::vector<double> r(6);
  for (ClientIndex j = 0; j < 6; ++j) r[j] = nearest(inst, j).distance;
  DemandChance d{std::vector<double>(6, 1.0), r};
  std::vector<FacilityIndex> all(6);
  for (FacilityIndex f = 0; f < 6; ++f) all[f] = f;
  // k = 3 may not cover everyone at the nearest radius; widen until feasible.
  while (!solve_chance_lp(inst, d).feasible())
    for (auto& v : d.r) v = v * 1.25 + 0.01;
  IterativeRounding alg(inst, d);
  RandomSource rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto s = alg.sample(rng);
    EXPECT_LE(s.size(), 3u);
    for (ClientIndex j = 0; j < 6; ++j) EXPECT_LE(service_distance(inst, j, s), 9 * d.r[j] + 1e-9);
  }
}

TEST(Iterative, SingleClientMartingale) {
  const auto inst = bipartite({{1}, {1}, {3}}, 1);
  DemandChance d{{0.4}, {1.0}};
  IterativeRounding alg(inst, d);
  RandomSource root(9);
  std::size_t covered = 0;
  for (std::size_t s = 0; s < kSamples; ++s) {
    auto rng = root.child(s);
    const auto S = alg.sample(rng);
    if (!S.empty() && service_distance(inst, 0, S) <= 1.0) ++covered;
  }
  EXPECT_NEAR(double(covered) / kSamples, 0.4, 0.01);
}

TEST(Iterative, MixedInstances) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = stoclot::testing::random_split(8, 7, 3, 20 + seed, InstanceKind::random_metric);
    const auto d = random_demand(inst, seed);
    IterativeRounding alg(inst, d);
    EXPECT_TRUE(mc_verify(inst, [&](RandomSource& r) { return alg.sample(r); }, coverage(d, 9.0, 1.0), kSamples, seed)
                    .pass);
  }
}

TEST(IterativeState, WalkIsUnbiased) {
  const auto inst = stoclot::testing::random_split(6, 5, 2, 31);
  const auto d = random_demand(inst, 31);
  IterativeRounding alg(inst, d);
  const IterativeState start(alg.family(), alg.radius(), inst.k());
  ASSERT_TRUE(start.has_slack());
  std::vector<double> mean(inst.num_clients(), 0.0);
  RandomSource root(4);
  for (std::size_t s = 0; s < kSamples; ++s) {
    IterativeState st = start;
    auto rng = root.child(s);
    basic_walk_step(st, rng);
    st.check_invariants();
    EXPECT_TRUE(st.integral_slack().has_value());
    for (ClientIndex j = 0; j < mean.size(); ++j) mean[j] += st.cluster_sum(j) / kSamples;
  }
  for (ClientIndex j = 0; j < mean.size(); ++j) EXPECT_NEAR(mean[j], start.cluster_sum(j), 0.01);
}

TEST(IterativeState, DirectionLiesInActiveNullspace) {
  std::size_t moves = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = stoclot::testing::random_split(10, 8, 3, 50 + seed, InstanceKind::random_metric);
    const auto d = random_demand(inst, seed);
    IterativeRounding alg(inst, d);
    const auto& fam = alg.family();
    IterativeState st(fam, alg.radius(), inst.k());
    RandomSource rng(seed);
    while (st.has_slack()) {
      while (!st.integral_slack()) {
        const auto move = st.direction();
        ASSERT_TRUE(move.has_value());
        // Explicit active rows: every tight cluster, plus the budget over U when b(U) = k.
        std::vector<char> in_u(fam.num_pieces(), 0);
        for (ClientIndex j = 0; j < fam.num_clients(); ++j)
          if (st.status(j) != IterativeState::Status::removed)
            for (auto piece : fam.clusters[j]) in_u[piece] = 1;
        std::vector<double> v(fam.num_pieces(), 0.0);
        for (const auto& [piece, c] : move->direction) {
          v[piece] += c;
          EXPECT_GT(st.b()[piece], 0.0);
          EXPECT_LT(st.b()[piece], 1.0);
        }
        for (ClientIndex j : st.tight_clients()) {
          double row = 0.0;
          for (auto piece : fam.clusters[j]) row += v[piece];
          EXPECT_NEAR(row, 0.0, 1e-12) << "tight cluster " << j;
        }
        if (st.covered_mass() >= inst.k() - 1e-9) {
          double row = 0.0;
          for (std::size_t piece = 0; piece < v.size(); ++piece)
            if (in_u[piece]) row += v[piece];
          EXPECT_NEAR(row, 0.0, 1e-12) << "budget row";
        }
        st.apply_random_move(*move, rng);
        ++moves;
      }
      st.settle(*st.integral_slack());
    }
    st.check_invariants();
  }
  EXPECT_GE(moves, 20u);
}

TEST(IterativeState, IntegralSlackNeedsNoMove) {
  const auto inst = bipartite({{1}}, 1);
  const auto fam = split_facilities(inst, {1.0}, {1.0}, {1.0});
  IterativeState st(fam, {1.0}, 1);
  const auto before = st.b();
  RandomSource rng(0);
  basic_walk_step(st, rng);
  EXPECT_EQ(st.b(), before);
  EXPECT_EQ(st.integral_slack(), std::optional<ClientIndex>(0));
}

TEST(Iterative, SameSeedSameSolution) {
  const auto inst = stoclot::testing::random_split(6, 6, 2, 40);
  const auto d = random_demand(inst, 40);
  RandomSource a(5), b(5);
  EXPECT_EQ(round_iterative_general(inst, d, a).open, round_iterative_general(inst, d, b).open);
}
