#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stoclot;

namespace {

CertifierOptions small(double eps, int L, QDistribution q = QDistribution::reference()) {
  CertifierOptions o;
  o.eps_grid = eps;
  o.L = L;
  o.qdist = std::move(q);
  o.potential_grid = eps;
  return o;
}

/// Independent L = 1 bound: per cell [lo, hi] of u_1 and per m, the two head factors
/// grow with u_1 (take hi) and the tails shrink with u_1 (take lo).
double single_level_oracle(const CertifierOptions& o) {
  const int cells = static_cast<int>(std::lround(1.0 / o.eps_grid));
  double best = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double lo = c * o.eps_grid, hi = (c + 1) * o.eps_grid;
    for (int m = 1; m <= o.M; ++m) {
      double v = 0.0;
      for (const auto& pt : o.qdist.support) {
        const double gf = 1.0 - pt.qf, gp = 1.0 - pt.qp, ubar = 1.0 - hi, md = m;
        const double alpha = std::exp(-gp * lo);
        const double beta = lo <= pt.qp ? 1.0 - lo : std::exp(-(lo - pt.qp) / (1.0 - pt.qp)) * (1.0 - pt.qp);
        double F, G;
        if (m < o.M) {
          F = std::pow(1.0 - gf * ubar / md, md);
          G = std::pow(gf * (1.0 - ubar / md), md);
        } else {
          F = std::exp(-gf * ubar);
          G = std::pow(gf, o.M) * std::exp(-ubar);
        }
        v += pt.prob * (F * alpha + G * beta);
      }
      best = std::max(best, v);
    }
  }
  return best;
}

}  // namespace

TEST(Rhat, ZeroVectorLiteral) {
  const std::vector<double> u{0.0};
  EXPECT_DOUBLE_EQ(rhat(1, u, 0.3, 0.1), 0.3);
  EXPECT_DOUBLE_EQ(rhat(1, u, 0.0, 0.0), 0.0);
}

TEST(Rhat, NoPartialShiftMakesTailsAgree) {
  const std::vector<double> u{0.9, 0.6, 0.2};
  const double qf = 0.4, gf = 0.6;
  double prod = std::exp(-0.2);
  for (std::size_t l = 0; l + 1 < u.size(); ++l) prod *= 1.0 - (u[l] - u[l + 1]);
  const double ubar = 0.1;
  const double F = std::pow(1.0 - gf * ubar / 3.0, 3.0), G = std::pow(gf * (1.0 - ubar / 3.0), 3.0);
  EXPECT_NEAR(rhat(3, u, qf, 0.0), (F + G) * prod, 1e-14);
}

TEST(Rhat, FullFirstCoordinate) {
  const std::vector<double> u{1.0, 0.5};
  const double qf = 0.2, qp = 0.3, gp = 0.7;
  const double alpha = std::exp(-gp * 0.5) * (1.0 - gp * 0.5);
  const double beta = std::exp(-(0.5 - qp) / (1.0 - qp)) * (1.0 - qp) * (0.0 + gp * 0.5);
  EXPECT_NEAR(rhat(2, u, qf, qp), alpha + std::pow(0.8, 2) * beta, 1e-14);
}

TEST(Rhat, Preconditions) {
  const std::vector<double> rising{0.2, 0.5};
  EXPECT_THROW(rhat(1, rising, 0.1, 0.1), input_error);
  const std::vector<double> u{0.5};
  EXPECT_THROW(rhat(0, u, 0.1, 0.1), input_error);
  EXPECT_THROW(rhat(11, u, 0.1, 0.1), input_error);
  EXPECT_THROW(rhat(1, u, 1.1, 0.1), input_error);
}

TEST(Rhat, LipschitzAlongGrid) {
  RandomSource rng(3);
  const double eps = 1.0 / 1024.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(4);
    for (auto& v : u) v = std::floor(rng.uniform() * 1000.0) * eps;
    std::sort(u.rbegin(), u.rend());
    auto moved = u;
    const std::size_t i = rng.below(4);
    moved[i] = std::min(i == 0 ? 1.0 : u[i - 1], u[i] + eps);
    const int m = 1 + static_cast<int>(rng.below(10));
    // Every factor has slope at most M in each coordinate.
    EXPECT_LE(std::abs(expected_rhat(m, u, QDistribution::reference()) -
                       expected_rhat(m, moved, QDistribution::reference())),
              20.0 * eps);
  }
}

TEST(Certifier, PruningKeepsTheMaximum) {
  auto pruned = small(1.0 / 32.0, 3);
  auto raw = pruned;
  raw.pareto = false;
  raw.branch_and_bound = false;
  const auto a = certify_partial_bound(pruned), b = certify_partial_bound(raw);
  EXPECT_EQ(a.max_value, b.max_value);
  EXPECT_LT(a.peak_tuples, b.peak_tuples);
  auto pareto_only = raw;
  pareto_only.pareto = true;
  EXPECT_EQ(certify_partial_bound(pareto_only).max_value, b.max_value);
}

TEST(Certifier, RefinementNeverRaisesTheBound) {
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0}) {
    const double b = certify_partial_bound(small(eps, 4)).bound;
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(Certifier, SingleLevelMatchesOracle) {
  for (double eps : {1.0 / 16.0, 1.0 / 256.0}) {
    const auto o = small(eps, 1);
    EXPECT_NEAR(certify_partial_bound(o).max_value, single_level_oracle(o), 1e-9);
  }
}

TEST(Certifier, SoundAgainstSampledPoints) {
  const auto cert = certify_partial_bound(small(1.0 / 64.0, 4));
  RandomSource rng(11);
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<double> u(4);
    for (auto& v : u) v = rng.uniform();
    std::sort(u.rbegin(), u.rend());
    const int m = 1 + static_cast<int>(rng.below(10));
    EXPECT_LE(1.0 + expected_rhat(m, u, QDistribution::reference()), cert.bound);
  }
}

TEST(Certifier, NoShiftBoundNearOnePlusTwoOverE) {
  // Without shifting the continuous maximum is 2/e. Each of the L steps may lose one
  // cell of gap, which inflates the product by at most e^{eps} per step.
  const double eps = 1.0 / 256.0;
  const auto cert = certify_partial_bound(small(eps, 7, QDistribution::point_mass(0.0, 0.0)));
  EXPECT_GE(cert.bound, 1.0 + 2.0 / std::exp(1.0));
  EXPECT_LE(cert.bound, 1.0 + 2.0 / std::exp(1.0) * std::exp(7 * eps) + 1e-9);
}

TEST(Certifier, SweepNeverWorseThanFixedWeight) {
  auto o = small(1.0 / 32.0, 3);
  const double fixed = certify_partial_bound(o).bound;
  o.sweep_p = true;
  const auto swept = certify_partial_bound(o);
  EXPECT_GE(swept.best_p, 0.0);
  EXPECT_LE(swept.best_p, 1.0);
  EXPECT_LE(swept.bound, fixed + 1e-12);
}

TEST(Certifier, RejectsBadGrid) {
  auto o = small(0.3, 2);
  EXPECT_THROW(certify_partial_bound(o), input_error);
  o = small(1.0 / 16.0, 0);
  EXPECT_THROW(certify_partial_bound(o), input_error);
}

TEST(Certifier, FrontierCapIsAResourceError) {
  auto o = small(1.0 / 64.0, 5);
  o.pareto = false;
  o.branch_and_bound = false;
  o.frontier_cap = 1000;
  EXPECT_THROW(certify_partial_bound(o), resource_error);
}

TEST(SccCertifier, ReferenceQ) {
  const auto c = certify_scc_bound(0.464587);
  EXPECT_LE(c.bound, 1.60794);
  EXPECT_GE(c.bound, 1.6079);
}

TEST(SccCertifier, FullShiftIsTwo) { EXPECT_NEAR(certify_scc_bound(1.0, 1.0 / 1024.0).bound, 2.0, 1e-8); }

TEST(SccCertifier, NoShiftIsOnePlusTwoOverE) {
  const double b = certify_scc_bound(0.0).bound;
  EXPECT_GE(b, 1.0 + 2.0 / std::exp(1.0));
  EXPECT_LE(b, 1.0 + 2.0 / std::exp(1.0) * std::exp(std::exp2(-18)) + 1e-8);
}

TEST(SccCertifier, RejectsBadQ) { EXPECT_THROW(certify_scc_bound(1.5), input_error); }
