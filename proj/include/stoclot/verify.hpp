#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "stoclot/determinize.hpp"
#include "stoclot/error.hpp"
#include "stoclot/expected.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/random.hpp"
#include "stoclot/simplex.hpp"

namespace stoclot {

using Sampler = std::function<SolutionSet(RandomSource&)>;

/// What a sampler promises. Empty vectors switch a check off.
///
/// Hard checks (cardinality, hard_radius) must hold on every sample. Statistical checks
/// pass when the empirical value clears the target after the Hoeffding radius; coverage
/// additionally gets `slack`. Mean targets carry whatever additive slack the caller wants.
struct Guarantees {
  std::size_t max_open = 0;              // 0 means the instance's k
  std::vector<double> hard_radius;       // d(j,S) <= hard_radius[j] always
  std::vector<double> cover_radius;      // r_j of the coverage statistic
  std::vector<double> min_coverage;      // Pr[d(j,S) <= r_j] target
  std::vector<double> max_mean;          // E[d(j,S)] target
  double slack = 0.02;
  double delta = 0.01;
};

struct ClientReport {
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double coverage_radius = 0.0;
  double mean = 0.0;
  double mean_radius = 0.0;
  double max_distance = 0.0;
  bool pass = true;
};

struct VerificationReport {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t max_open_observed = 0;
  double delta = 0.01;
  double slack = 0.02;
  std::vector<ClientReport> clients;
  bool pass = true;
};

inline double hoeffding_radius(std::size_t n, double delta, double range) {
  return range * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

namespace detail {

struct BlockTotals {
  std::vector<std::size_t> covered;
  std::vector<double> sum;
  std::vector<double> max;
  std::size_t max_open = 0;
  std::optional<std::size_t> failed_sample;
  std::string failure;
};

constexpr std::size_t kVerifyBlock = 1024;

}  // namespace detail

/// N draws, sample i on stream child(i) of the seed. Blocks of fixed size are reduced in
/// order, so the report does not depend on `jobs`. A hard violation throws
/// invariant_error naming the first offending sample.
inline VerificationReport mc_verify(const Instance& instance, const Sampler& sampler, const Guarantees& g,
                                    std::size_t samples, std::uint64_t seed, unsigned jobs = 1) {
  detail::require(samples >= 1000, "mc_verify: need at least 1000 samples");
  detail::require(g.delta > 0.0 && g.delta < 1.0, "mc_verify: delta must lie in (0,1)");
  const std::size_t nc = instance.num_clients();
  for (const auto* v : {&g.hard_radius, &g.cover_radius, &g.min_coverage, &g.max_mean})
    detail::require(v->empty() || v->size() == nc, "mc_verify: guarantee vectors need one entry per client");
  detail::require(g.cover_radius.empty() == g.min_coverage.empty(),
                  "mc_verify: coverage needs both cover_radius and min_coverage");
  const std::size_t cap = g.max_open ? g.max_open : static_cast<std::size_t>(instance.k());
  const RandomSource root(seed);
  const std::size_t blocks = (samples + detail::kVerifyBlock - 1) / detail::kVerifyBlock;
  std::vector<detail::BlockTotals> totals(blocks);

  auto run_block = [&](std::size_t b) {
    auto& t = totals[b];
    t.covered.assign(nc, 0);
    t.sum.assign(nc, 0.0);
    t.max.assign(nc, 0.0);
    const std::size_t end = std::min(samples, (b + 1) * detail::kVerifyBlock);
    for (std::size_t i = b * detail::kVerifyBlock; i < end; ++i) {
      RandomSource stream = root.child(static_cast<std::uint64_t>(i));
      const SolutionSet s = sampler(stream);
      t.max_open = std::max(t.max_open, s.size());
      if (s.size() > cap) {
        t.failed_sample = i;
        t.failure = "opened " + std::to_string(s.size()) + " > " + std::to_string(cap) + " facilities";
        return;
      }
      const auto d = service_distances(instance, s);
      for (ClientIndex j = 0; j < nc; ++j) {
        if (!g.hard_radius.empty() && d[j] > g.hard_radius[j] * (1.0 + 1e-12) + 1e-12) {
          t.failed_sample = i;
          t.failure = "client " + instance.client_id(j) + " at distance " + std::to_string(d[j]) + " > hard radius " +
                      std::to_string(g.hard_radius[j]);
          return;
        }
        if (!g.cover_radius.empty() && d[j] <= g.cover_radius[j] * (1.0 + 1e-12) + 1e-12) ++t.covered[j];
        t.sum[j] += d[j];
        t.max[j] = std::max(t.max[j], d[j]);
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < blocks; ++b) {
      run_block(b);
      if (totals[b].failed_sample) break;
    }
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < blocks; b += workers) run_block(b);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& t : totals)
    if (t.failed_sample)
      throw invariant_error("mc_verify: hard assertion failed on sample " + std::to_string(*t.failed_sample) + ": " +
                            t.failure);

  VerificationReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.delta = g.delta;
  rep.slack = g.slack;
  rep.clients.resize(nc);
  std::vector<std::size_t> covered(nc, 0);
  std::vector<double> sum(nc, 0.0);
  for (const auto& t : totals) {
    rep.max_open_observed = std::max(rep.max_open_observed, t.max_open);
    for (ClientIndex j = 0; j < nc; ++j) {
      covered[j] += t.covered[j];
      sum[j] += t.sum[j];
      rep.clients[j].max_distance = std::max(rep.clients[j].max_distance, t.max[j]);
    }
  }
  const double n = static_cast<double>(samples);
  for (ClientIndex j = 0; j < nc; ++j) {
    auto& c = rep.clients[j];
    c.mean = sum[j] / n;
    // Range of d(j,S) over nonempty S: the hard radius when declared, else the farthest facility.
    double range = 0.0;
    for (FacilityIndex f = 0; f < instance.num_facilities(); ++f) range = std::max(range, instance.dist(f, j));
    if (!g.hard_radius.empty()) range = std::min(range, g.hard_radius[j]);
    c.mean_radius = hoeffding_radius(samples, g.delta, range);
    if (!g.max_mean.empty()) c.pass = c.pass && c.mean <= g.max_mean[j] + c.mean_radius;
    if (!g.cover_radius.empty()) {
      c.coverage = static_cast<double>(covered[j]) / n;
      c.coverage_radius = hoeffding_radius(samples, g.delta, 1.0);
      c.pass = c.pass && c.coverage >= g.min_coverage[j] - c.coverage_radius - g.slack;
    }
    rep.pass = rep.pass && c.pass;
  }
  return rep;
}

/// Optimal lottery over k-subsets of F found by the subset LP.
struct OracleResult {
  bool feasible = false;
  double value = 0.0;  // chance: max min_j Pr/p_j; expected: min max_j E/t_j
  ExplicitLottery lottery;
};

namespace detail {

inline std::vector<SolutionSet> all_k_subsets(const Instance& instance, std::size_t limit) {
  const std::size_t nf = instance.num_facilities(), k = static_cast<std::size_t>(instance.k());
  detail::require(binomial(nf, k) <= static_cast<double>(limit),
                  "oracle: C(|F|,k) exceeds " + std::to_string(limit));
  std::vector<SolutionSet> out;
  for_each_subset(nf, k, [&](const std::vector<std::size_t>& idx) { out.emplace_back(idx); });
  return out;
}

inline ExplicitLottery lottery_from(const std::vector<SolutionSet>& sets, const std::vector<double>& x) {
  ExplicitLottery out;
  double total = 0.0;
  for (std::size_t s = 0; s < sets.size(); ++s)
    if (x[s] > 1e-12) {
      out.atoms.push_back({sets[s], x[s]});
      total += x[s];
    }
  for (auto& a : out.atoms) a.prob /= total;
  return out;
}

}  // namespace detail

/// max lambda s.t. some lottery over k-subsets has Pr[d(j,S) <= r_j] >= lambda p_j.
/// Clients with p_j = 0 impose nothing; lambda is capped at 1e6.
inline OracleResult oracle_best_lottery(const Instance& instance, const DemandChance& demand,
                                        std::size_t max_subsets = 2000) {
  demand.validate(instance);
  const auto sets = detail::all_k_subsets(instance, max_subsets);
  const std::size_t m = sets.size(), lambda = m;
  lp::LinearProgram program(m + 1);
  program.objective[lambda] = -1.0;
  std::vector<std::pair<std::size_t, double>> all;
  for (std::size_t s = 0; s < m; ++s) all.emplace_back(s, 1.0);
  program.add_row(all, lp::Sense::equal, 1.0, "total");
  program.add_row({{lambda, 1.0}}, lp::Sense::less_equal, 1e6, "cap");
  for (ClientIndex j = 0; j < instance.num_clients(); ++j) {
    if (demand.p[j] <= 0.0) continue;
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t s = 0; s < m; ++s)
      if (service_distance(instance, j, sets[s]) <= demand.r[j]) terms.emplace_back(s, 1.0);
    terms.emplace_back(lambda, -demand.p[j]);
    program.add_row(std::move(terms), lp::Sense::greater_equal, 0.0);
  }
  const auto res = detail::run_checked(program);
  detail::ensure(res.status == lp::Status::optimal, "oracle: chance subset LP must be feasible");
  OracleResult out;
  out.value = res.x[lambda];
  out.feasible = out.value >= 1.0 - 1e-9;
  out.lottery = detail::lottery_from(sets, res.x);
  return out;
}

/// min mu s.t. some lottery over k-subsets has E[d(j,S)] <= mu t_j. Clients with t_j = 0
/// need E[d(j,S)] = 0; when that is impossible the result is infeasible with value +inf.
inline OracleResult oracle_best_lottery(const Instance& instance, const DemandExpected& demand,
                                        std::size_t max_subsets = 2000) {
  demand.validate(instance);
  const auto sets = detail::all_k_subsets(instance, max_subsets);
  const std::size_t m = sets.size(), mu = m;
  lp::LinearProgram program(m + 1);
  program.objective[mu] = 1.0;
  std::vector<std::pair<std::size_t, double>> all;
  for (std::size_t s = 0; s < m; ++s) all.emplace_back(s, 1.0);
  program.add_row(all, lp::Sense::equal, 1.0, "total");
  for (ClientIndex j = 0; j < instance.num_clients(); ++j) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t s = 0; s < m; ++s) {
      const double d = service_distance(instance, j, sets[s]);
      if (d > 0.0) terms.emplace_back(s, d);
    }
    if (demand.t[j] > 0.0) terms.emplace_back(mu, -demand.t[j]);
    program.add_row(std::move(terms), lp::Sense::less_equal, 0.0);
  }
  const auto res = detail::run_checked(program);
  OracleResult out;
  if (res.status != lp::Status::optimal) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = res.x[mu];
  out.feasible = out.value <= 1.0 + 1e-9;
  out.lottery = detail::lottery_from(sets, res.x);
  return out;
}

/// min over sets S with 1 <= |S| <= max_size of max_j d(j,S)/t_j, by enumeration.
inline double oracle_best_determinization(const Instance& instance, const DemandExpected& demand,
                                          std::size_t max_size, std::size_t max_sets = 1'000'000) {
  demand.validate(instance);
  const std::size_t nf = instance.num_facilities();
  max_size = std::min(max_size, nf);
  double count = 0.0;
  for (std::size_t s = 1; s <= max_size; ++s) count += detail::binomial(nf, s);
  detail::require(count <= static_cast<double>(max_sets), "oracle: too many candidate sets");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t size = 1; size <= max_size; ++size)
    detail::for_each_subset(nf, size, [&](const std::vector<std::size_t>& idx) {
      best = std::min(best, demand_ratio(instance, demand, SolutionSet(idx)));
    });
  return best;
}

}  // namespace stoclot
