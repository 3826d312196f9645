#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stoclot;

namespace {

std::vector<double> frequencies(const std::vector<double>& y, std::size_t n, std::uint64_t seed) {
  std::vector<double> freq(y.size(), 0.0);
  RandomSource root(seed);
  double lo = 0.0;
  for (double v : y) lo += v;
  for (std::size_t s = 0; s < n; ++s) {
    auto rng = root.child(s);
    const auto pick = dep_round(y, rng);
    EXPECT_GE(pick.size(), std::floor(lo - 1e-9));
    EXPECT_LE(pick.size(), std::ceil(lo + 1e-9));
    for (auto i : pick) freq[i] += 1.0;
  }
  for (auto& f : freq) f /= double(n);
  return freq;
}

}  // namespace

TEST(DepRound, IntegralPassesThrough) {
  RandomSource rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(dep_round({1, 0, 1}, rng), (std::vector<std::size_t>{0, 2}));
}

TEST(DepRound, TwoHalvesPickExactlyOne) {
  const auto f = frequencies({0.5, 0.5}, 20000, 2);
  EXPECT_NEAR(f[0], 0.5, stoclot::testing::radius99(20000));
}

TEST(DepRound, MarginalsOfThreeWay) {
  const std::vector<double> y{0.3, 0.3, 0.4};
  const auto f = frequencies(y, 100000, 3);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(f[i], y[i], 0.01);
}

TEST(DepRound, RejectsOutOfRange) {
  RandomSource rng(0);
  EXPECT_THROW(dep_round({0.5, 1.5}, rng), input_error);
  EXPECT_THROW(dep_round({-0.1}, rng), input_error);
  EXPECT_THROW(dep_round({std::nan("")}, rng), input_error);
}

TEST(DepRound, Restricted) {
  RandomSource rng(4);
  EXPECT_TRUE(dep_round_restricted({0.5, 0.5, 0.5}, {}, rng).empty());
  for (int i = 0; i < 1000; ++i) {
    const auto pick = dep_round_restricted({0.5, 0.5, 0.5}, {0, 1}, rng);
    EXPECT_EQ(pick.size(), 1u);
    EXPECT_NE(pick.front(), 2u);
  }
  RandomSource a(9), b(9);
  EXPECT_EQ(dep_round_restricted({0.2, 0.7, 0.4}, {0, 1, 2}, a), dep_round({0.2, 0.7, 0.4}, b));
}

TEST(DepRound, SameSeedSameOutput) {
  RandomSource a(77), b(77);
  const std::vector<double> y{0.1, 0.9, 0.35, 0.65, 0.5};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(dep_round(y, a), dep_round(y, b));
}

TEST(DepRound, NegativeCorrelationSpotCheck) {
  RandomSource gen(5);
  constexpr std::size_t N = 20000;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + gen.below(6);
    std::vector<double> y(n);
    for (auto& v : y) v = gen.uniform();
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < n && subset.size() < 4; ++i)
      if (gen.bernoulli(0.5)) subset.push_back(i);
    double bound = 1.0;
    for (auto i : subset) bound *= 1.0 - y[i];
    std::size_t misses = 0;
    RandomSource root(100 + trial);
    for (std::size_t s = 0; s < N; ++s) {
      auto rng = root.child(s);
      const auto pick = dep_round(y, rng);
      bool hit = false;
      for (auto i : subset) hit = hit || std::binary_search(pick.begin(), pick.end(), i);
      misses += hit ? 0 : 1;
    }
    EXPECT_LE(double(misses) / N, bound + stoclot::testing::radius99(N));
  }
}

TEST(GreedyCluster, DisjointKeepsAll) {
  EXPECT_EQ(greedy_cluster({{0}, {1}, {2}}, {3, 1, 2}), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(GreedyCluster, SecondBlocked) { EXPECT_EQ(greedy_cluster({{0, 1}, {1}}, {1, 2}), std::vector<std::size_t>{0}); }

TEST(GreedyCluster, ChainKeepsEnds) {
  EXPECT_EQ(greedy_cluster({{0, 1}, {1, 2}, {2, 3}}, {1, 2, 3}), (std::vector<std::size_t>{0, 2}));
}

TEST(GreedyCluster, TiesByIndexAndEmptySets) {
  EXPECT_EQ(greedy_cluster({{0}, {0}}, {1, 1}), std::vector<std::size_t>{0});
  EXPECT_TRUE(greedy_cluster({{}}, {1}).empty());
  EXPECT_THROW(greedy_cluster({{0}}, {}), input_error);
}

TEST(GreedyCluster, RandomDisjointAndDominated) {
  RandomSource rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    std::vector<std::vector<std::size_t>> sets(n);
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t e = 0; e < 12; ++e)
        if (rng.bernoulli(0.2)) sets[j].push_back(e);
      if (sets[j].empty()) sets[j].push_back(rng.below(12));
      w[j] = double(rng.below(5));
    }
    const auto chosen = greedy_cluster(sets, w);
    auto meets = [&](std::size_t a, std::size_t b) {
      for (auto e : sets[a])
        if (std::binary_search(sets[b].begin(), sets[b].end(), e)) return true;
      return false;
    };
    for (std::size_t a = 0; a < chosen.size(); ++a)
      for (std::size_t b = a + 1; b < chosen.size(); ++b) EXPECT_FALSE(meets(chosen[a], chosen[b]));
    for (std::size_t j = 0; j < n; ++j) {
      bool witnessed = false;
      for (auto z : chosen) witnessed = witnessed || (w[z] <= w[j] && meets(z, j));
      EXPECT_TRUE(witnessed);
    }
  }
}
