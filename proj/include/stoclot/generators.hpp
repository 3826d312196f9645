#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/expected.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/random.hpp"

namespace stoclot {

enum class InstanceKind { euclidean, random_metric, uniform_gadget, star };

inline InstanceKind parse_instance_kind(const std::string& s) {
  if (s == "euclidean") return InstanceKind::euclidean;
  if (s == "random_metric") return InstanceKind::random_metric;
  if (s == "uniform_gadget") return InstanceKind::uniform_gadget;
  if (s == "star") return InstanceKind::star;
  throw input_error("unknown instance kind '" + s + "'");
}

/// n counts points. Non-SCC instances put `facilities` of them in F and the rest in C;
/// uniform_gadget and star are always SCC.
struct GenParams {
  InstanceKind kind = InstanceKind::euclidean;
  std::size_t n = 10;
  int k = 2;
  bool scc = true;
  std::size_t facilities = 0;  // non-SCC only; 0 means n/2
  std::size_t dim = 2;
  double edge_prob = 0.5;  // random_metric
};

namespace detail {

inline Instance assemble(Metric metric, const GenParams& p) {
  const std::size_t n = metric.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const bool scc = p.scc || p.kind == InstanceKind::uniform_gadget || p.kind == InstanceKind::star;
  if (scc) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
    return Instance(std::move(metric), all, all, p.k, true, ids, ids);
  }
  const std::size_t nf = p.facilities ? p.facilities : n / 2;
  detail::require(nf >= 1 && nf < n, "gen: non-SCC instance needs 1 <= facilities < n");
  std::vector<std::size_t> fac(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(nf));
  std::vector<std::size_t> cli(all.begin() + static_cast<std::ptrdiff_t>(nf), all.end());
  return Instance(std::move(metric), fac, cli, p.k, false);
}

}  // namespace detail

/// Deterministic in (params, seed). random_metric closes a random weighted graph (a ring
/// plus edges kept with probability edge_prob, weights in [1,10)) under shortest paths.
inline Instance gen_instance(const GenParams& p, std::uint64_t seed) {
  detail::require(p.n >= 1, "gen: n must be positive");
  detail::require(p.k >= 1, "gen: k must be positive");
  RandomSource rng = RandomSource(seed).child("gen");
  switch (p.kind) {
    case InstanceKind::euclidean: {
      detail::require(p.dim >= 1, "gen: dim must be positive");
      std::vector<std::vector<double>> pts(p.n, std::vector<double>(p.dim));
      for (auto& pt : pts)
        for (auto& x : pt) x = rng.uniform();
      return detail::assemble(Metric::euclidean(std::move(pts)), p);
    }
    case InstanceKind::random_metric: {
      detail::require(p.edge_prob >= 0.0 && p.edge_prob <= 1.0, "gen: edge_prob must lie in [0,1]");
      const std::size_t n = p.n;
      const double inf = std::numeric_limits<double>::infinity();
      std::vector<double> d(n * n, inf);
      for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
      auto edge = [&](std::size_t a, std::size_t b, double w) {
        d[a * n + b] = std::min(d[a * n + b], w);
        d[b * n + a] = d[a * n + b];
      };
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double w = 1.0 + 9.0 * rng.uniform();
          if (j == i + 1 || rng.bernoulli(p.edge_prob)) edge(i, j, w);
        }
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + m] + d[m * n + j]);
      return detail::assemble(Metric::dense(n, std::move(d)), p);
    }
    case InstanceKind::uniform_gadget: {
      std::vector<double> d(p.n * p.n, 1.0);
      for (std::size_t i = 0; i < p.n; ++i) d[i * p.n + i] = 0.0;
      return detail::assemble(Metric::dense(p.n, std::move(d)), p);
    }
    case InstanceKind::star: {
      // Point 0 is the hub; leaves sit at distance 1 from it and 2 from each other.
      std::vector<double> d(p.n * p.n, 2.0);
      for (std::size_t i = 0; i < p.n; ++i) {
        d[i * p.n + i] = 0.0;
        if (i > 0) d[i] = d[i * p.n] = 1.0;
      }
      return detail::assemble(Metric::dense(p.n, std::move(d)), p);
    }
  }
  throw input_error("gen: unknown kind");
}

/// A lottery of `atoms` uniformly random k-subsets with random weights.
inline ExplicitLottery random_lottery(const Instance& instance, std::size_t atoms, RandomSource& rng) {
  detail::require(atoms >= 1, "random_lottery: need at least one atom");
  const std::size_t nf = instance.num_facilities();
  ExplicitLottery out;
  double total = 0.0;
  for (std::size_t a = 0; a < atoms; ++a) {
    std::vector<FacilityIndex> perm(nf);
    for (std::size_t f = 0; f < nf; ++f) perm[f] = f;
    for (std::size_t f = nf; f > 1; --f) std::swap(perm[f - 1], perm[rng.below(f)]);
    perm.resize(static_cast<std::size_t>(instance.k()));
    const double w = 0.1 + rng.uniform();
    out.atoms.push_back({SolutionSet(std::move(perm)), w});
    total += w;
  }
  for (auto& a : out.atoms) a.prob /= total;
  out.merge_duplicates();
  return out;
}

/// Chance demand met exactly by a random lottery: r_j is a random facility distance and
/// p_j the lottery's coverage probability at r_j. Hence always feasible.
inline DemandChance feasible_chance_demand(const Instance& instance, RandomSource& rng, std::size_t atoms = 3) {
  const auto lottery = random_lottery(instance, atoms, rng);
  DemandChance out;
  for (ClientIndex j = 0; j < instance.num_clients(); ++j) {
    const double r = instance.dist(static_cast<FacilityIndex>(rng.below(instance.num_facilities())), j);
    double p = 0.0;
    for (const auto& a : lottery.atoms)
      if (service_distance(instance, j, a.set) <= r) p += a.prob;
    out.r.push_back(r);
    out.p.push_back(std::min(1.0, p));
  }
  return out;
}

/// Expected demand t_j = E[d(j,S)] under a random lottery; always feasible.
inline DemandExpected feasible_expected_demand(const Instance& instance, RandomSource& rng, std::size_t atoms = 3) {
  return DemandExpected{random_lottery(instance, atoms, rng).expectations(instance)};
}

}  // namespace stoclot
