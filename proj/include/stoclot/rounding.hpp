#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/random.hpp"

namespace stoclot {

namespace detail {

constexpr double kIntegralTol = 1e-12;

inline bool is_fractional(double v) { return v > kIntegralTol && v < 1.0 - kIntegralTol; }

inline double snap_integral(double v) {
  if (v <= kIntegralTol) return 0.0;
  if (v >= 1.0 - kIntegralTol) return 1.0;
  return v;
}

}  // namespace detail

/// Dependent rounding of y in [0,1]^n.
///
/// Pairs the two lowest-index fractional coordinates and moves mass between them
/// until at most one fractional coordinate is left; that one is resolved by a coin
/// flip. Marginals are preserved, |Y| is floor or ceil of sum(y), and the output is
/// negatively correlated. Returns the selected indices in increasing order.
inline std::vector<std::size_t> dep_round(std::vector<double> y, RandomSource& rng) {
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0)) throw input_error("dep_round: every coordinate must lie in [0,1]");
  for (double& v : y) v = detail::snap_integral(v);
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::size_t holder = none;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (!detail::is_fractional(y[j])) continue;
    if (holder == none) {
      holder = j;
      continue;
    }
    const std::size_t i = holder;
    const double alpha = std::min(1.0 - y[i], y[j]);
    const double beta = std::min(y[i], 1.0 - y[j]);
    if (rng.uniform() * (alpha + beta) < beta) {
      y[i] += alpha;
      y[j] -= alpha;
    } else {
      y[i] -= beta;
      y[j] += beta;
    }
    y[i] = detail::snap_integral(y[i]);
    y[j] = detail::snap_integral(y[j]);
    if (!detail::is_fractional(y[i])) holder = detail::is_fractional(y[j]) ? j : none;
  }
  if (holder != none) y[holder] = rng.bernoulli(y[holder]) ? 1.0 : 0.0;
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < y.size(); ++j)
    if (y[j] == 1.0) out.push_back(j);
  return out;
}

/// dep_round applied to y with every coordinate outside `support` zeroed.
inline std::vector<std::size_t> dep_round_restricted(const std::vector<double>& y,
                                                     const std::vector<std::size_t>& support, RandomSource& rng) {
  std::vector<double> masked(y.size(), 0.0);
  for (auto i : support) {
    if (i >= y.size()) throw input_error("dep_round_restricted: support index out of range");
    masked[i] = y[i];
  }
  return dep_round(std::move(masked), rng);
}

/// Greedy clustering: visit clients by increasing weight (ties by index) and keep a
/// client when its set is disjoint from every set kept so far. Clients with empty
/// sets are never kept. `sets` hold sorted element indices.
inline std::vector<std::size_t> greedy_cluster(const std::vector<std::vector<std::size_t>>& sets,
                                               const std::vector<double>& weight) {
  if (sets.size() != weight.size()) throw input_error("greedy_cluster: one weight per set required");
  std::vector<std::size_t> order(sets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] < weight[b]; });
  std::size_t universe = 0;
  for (const auto& s : sets)
    for (auto e : s) universe = std::max(universe, e + 1);
  std::vector<char> taken(universe, 0);
  std::vector<std::size_t> chosen;
  for (auto j : order) {
    const auto& s = sets[j];
    if (s.empty()) continue;
    if (std::any_of(s.begin(), s.end(), [&](std::size_t e) { return taken[e] != 0; })) continue;
    for (auto e : s) taken[e] = 1;
    chosen.push_back(j);
  }
  return chosen;
}

}  // namespace stoclot
