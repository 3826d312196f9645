#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stoclot;
using stoclot::testing::bipartite;

namespace {

constexpr std::size_t kSamples = 20000;

Guarantees mean_bound(const std::vector<double>& r, double factor, double extra = 0.0) {
  Guarantees g;
  for (double v : r) {
    g.hard_radius.push_back(3.0 * v + 1e-9);
    g.max_mean.push_back(factor * v + extra);
  }
  return g;
}

/// min over k-subsets of max_j d(j,S).
double brute_force_supplier(const Instance& inst) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : detail::all_k_subsets(inst, 100000)) {
    double worst = 0.0;
    for (double d : service_distances(inst, s)) worst = std::max(worst, d);
    best = std::min(best, worst);
  }
  return best;
}

}  // namespace

TEST(QDistribution, ValidationAndDraw) {
  EXPECT_NO_THROW(QDistribution::reference().validate());
  EXPECT_THROW((QDistribution{{{0.1, 0.1, 0.5}}}).validate(), input_error);
  EXPECT_THROW((QDistribution{{{1.5, 0.0, 1.0}}}).validate(), input_error);
  const auto q = QDistribution::reference();
  EXPECT_EQ(q.draw(0.1).qf, 0.4525);
  EXPECT_EQ(q.draw(0.9).qp, 0.3950);
}

TEST(LotteryGeneral, FullMassFacilityInEveryBallIsDeterministic) {
  const auto inst = bipartite({{1, 2, 1}, {4, 4, 4}}, 1);
  const std::vector<double> r{1, 2, 1};
  ClusterLottery alg(inst, r);
  RandomSource rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto s = alg.sample(rng);
    for (ClientIndex j = 0; j < 3; ++j) EXPECT_LE(service_distance(inst, j, s), r[j]);
  }
}

TEST(LotteryGeneral, RandomNonScc) {
  const auto inst = stoclot::testing::random_split(20, 15, 4, 2);
  const double t = guess_radius(inst);
  const std::vector<double> r(15, t);
  ClusterLottery alg(inst, r);
  const auto rep = mc_verify(inst, [&](RandomSource& g) { return alg.sample(g); }, mean_bound(r, 1.736), kSamples, 2);
  EXPECT_TRUE(rep.pass);
}

TEST(LotteryGeneral, HeterogeneousRadii) {
  const auto inst = stoclot::testing::random_split(10, 8, 3, 3, InstanceKind::random_metric);
  std::vector<double> r(8, guess_radius(inst));
  RandomSource rng(3);
  for (auto& v : r) v *= 1.0 + rng.uniform();
  ClusterLottery alg(inst, r);
  EXPECT_TRUE(mc_verify(inst, [&](RandomSource& g) { return alg.sample(g); }, mean_bound(r, 1.736), kSamples, 3).pass);
}

TEST(LotteryScc, ZeroShiftMatchesGeneral) {
  const auto inst = stoclot::testing::random_scc(10, 3, 4);
  const std::vector<double> r(10, guess_radius(inst));
  for (std::uint64_t s = 0; s < 200; ++s) {
    RandomSource a(s), b(s);
    EXPECT_EQ(lottery_scc(inst, r, 0.0, a), lottery_general(inst, r, b));
  }
}

TEST(LotteryScc, FullShiftIsTwoR) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = stoclot::testing::random_scc(12, 3, seed);
    const std::vector<double> r(12, guess_radius(inst));
    ClusterLottery alg(inst, r, 1.0);
    RandomSource rng(seed);
    for (int i = 0; i < 50; ++i) {
      const auto s = alg.sample(rng);
      for (ClientIndex j = 0; j < 12; ++j) EXPECT_LE(service_distance(inst, j, s), 2 * r[j] + 1e-12);
    }
  }
}

TEST(LotteryScc, RejectsNonScc) {
  const auto inst = bipartite({{1}}, 1);
  RandomSource rng(0);
  EXPECT_THROW(lottery_scc(inst, {1.0}, 0.5, rng), input_error);
  EXPECT_THROW(ClusterLottery(inst, {1.0}, 0.2), input_error);
}

TEST(LotteryScc, RandomMeanBound) {
  const auto inst = stoclot::testing::random_scc(20, 4, 6);
  const std::vector<double> r(20, guess_radius(inst));
  ClusterLottery alg(inst, r, 0.464587);
  EXPECT_TRUE(mc_verify(inst, [&](RandomSource& g) { return alg.sample(g); }, mean_bound(r, 1.608), kSamples, 6).pass);
}

TEST(PartialDecomposition, IdenticalClusters) {
  ClusterFamily fam;
  fam.pieces = {{0, 0.5}, {1, 0.5}};
  fam.clusters = {{0, 1}, {0, 1}};
  fam.target = {1, 1};
  const auto dec = build_partial_decomposition(fam);
  EXPECT_EQ(dec.z, (std::vector<double>{1.0, 0.0}));
  EXPECT_TRUE(dec.groups[1].empty());
}

TEST(PartialDecomposition, DisjointAllFull) {
  ClusterFamily fam;
  fam.pieces = {{0, 1.0}, {1, 1.0}, {2, 1.0}};
  fam.clusters = {{0}, {1}, {2}};
  const auto dec = build_partial_decomposition(fam);
  EXPECT_EQ(dec.order, (std::vector<ClientIndex>{0, 1, 2}));
  EXPECT_EQ(dec.z, (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(PartialDecomposition, ChainTrace) {
  // A = {0,1}, B = {1,2}, C = {2,3}, halves everywhere: A first, then C (residual 1), then B (0).
  ClusterFamily fam;
  fam.pieces = {{0, 0.5}, {1, 0.5}, {2, 0.5}, {3, 0.5}};
  fam.clusters = {{0, 1}, {1, 2}, {2, 3}};
  const auto dec = build_partial_decomposition(fam);
  EXPECT_EQ(dec.order, (std::vector<ClientIndex>{0, 2, 1}));
  EXPECT_EQ(dec.z, (std::vector<double>{1.0, 1.0, 0.0}));
}

TEST(PartialDecomposition, RandomInvariants) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = stoclot::testing::random_scc(12, 3, seed);
    PartialLottery alg(inst, guess_radius(inst), QDistribution::reference());
    const auto& z = alg.decomposition().z;
    EXPECT_EQ(z.front(), 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      total += z[i];
      if (i > 0) EXPECT_LE(z[i], z[i - 1] + 1e-12);
    }
    EXPECT_LE(total, 3.0 + 1e-9);
  }
}

TEST(LotteryPartial, ReferenceDistribution) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = stoclot::testing::random_scc(16, 3, 10 + seed);
    const double t = guess_radius(inst);
    PartialLottery alg(inst, t, QDistribution::reference());
    EXPECT_TRUE(mc_verify(inst, [&](RandomSource& g) { return alg.sample(g); },
                          mean_bound(std::vector<double>(16, t), 1.592, 0.01), kSamples, seed)
                    .pass);
  }
}

TEST(LotteryPartial, PointMassZeroIsProportional) {
  const auto inst = stoclot::testing::random_scc(14, 3, 21);
  const double t = guess_radius(inst);
  PartialLottery alg(inst, t, QDistribution::point_mass(0.0, 0.0));
  EXPECT_TRUE(mc_verify(inst, [&](RandomSource& g) { return alg.sample(g); },
                        mean_bound(std::vector<double>(14, t), 1.0 + 2.0 / std::exp(1.0)), kSamples, 21)
                  .pass);
}

TEST(LotteryPartial, RejectsNonScc) {
  const auto inst = bipartite({{1}}, 1);
  EXPECT_THROW(PartialLottery(inst, 1.0, QDistribution::reference()), input_error);
}

TEST(GuessRadius, FullBudgetIsZero) {
  EXPECT_EQ(guess_radius(stoclot::testing::random_scc(5, 5, 1)), 0.0);
}

TEST(GuessRadius, StarHubForOneCenter) {
  GenParams p;
  p.kind = InstanceKind::star;
  p.n = 6;
  p.k = 1;
  EXPECT_EQ(guess_radius(gen_instance(p, 0)), 1.0);
}

TEST(GuessRadius, NeverAboveBruteForceAndWithinFactorThree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = stoclot::testing::random_split(5, 3, 2, seed, InstanceKind::random_metric);
    const double t = guess_radius(inst), opt = brute_force_supplier(inst);
    EXPECT_LE(t, opt + 1e-12);
    EXPECT_LE(opt, 3.0 * t + 1e-9);
  }
}
