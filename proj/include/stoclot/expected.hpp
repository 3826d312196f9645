#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/lp_models.hpp"
#include "stoclot/random.hpp"

namespace stoclot {

struct LotteryAtom {
  SolutionSet set;
  double prob = 0.0;
};

/// Explicitly enumerated k-lottery.
struct ExplicitLottery {
  std::vector<LotteryAtom> atoms;

  void validate(const Instance& instance, double tol = 1e-9) const {
    detail::require(!atoms.empty(), "lottery: at least one atom required");
    double total = 0.0;
    for (const auto& atom : atoms) {
      detail::require(atom.prob >= 0.0, "lottery: probabilities must be nonnegative");
      detail::require(atom.set.size() <= static_cast<std::size_t>(instance.k()), "lottery: atom exceeds k facilities");
      detail::require(!atom.set.empty(), "lottery: atom must open a facility");
      for (auto f : atom.set.open) detail::require(f < instance.num_facilities(), "lottery: facility out of range");
      total += atom.prob;
    }
    detail::require(std::abs(total - 1.0) <= tol, "lottery: probabilities must sum to 1");
  }

  /// E[d(j,S)] per client.
  std::vector<double> expectations(const Instance& instance) const {
    std::vector<double> out(instance.num_clients(), 0.0);
    for (const auto& atom : atoms) {
      if (atom.prob == 0.0) continue;
      const auto d = service_distances(instance, atom.set);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += atom.prob * d[j];
    }
    return out;
  }

  /// Combines atoms with identical sets; order of first appearance is kept.
  void merge_duplicates() {
    std::map<std::vector<FacilityIndex>, std::size_t> seen;
    std::vector<LotteryAtom> merged;
    for (auto& atom : atoms) {
      auto [it, inserted] = seen.emplace(atom.set.open, merged.size());
      if (inserted) merged.push_back(std::move(atom));
      else merged[it->second].prob += atom.prob;
    }
    atoms = std::move(merged);
  }

  static ExplicitLottery uniform(const std::vector<SolutionSet>& sets) {
    ExplicitLottery out;
    for (const auto& s : sets) out.atoms.push_back({s, 1.0 / static_cast<double>(sets.size())});
    out.merge_duplicates();
    return out;
  }
};

/// Weighted k-median solver with a declared approximation factor.
struct KMedianSolver {
  using Solve = std::function<SolutionSet(const Instance&, const std::vector<double>& weight, int k, RandomSource&)>;
  std::string name;
  double alpha = 1.0;
  Solve solve;
};

inline double kmedian_cost(const Instance& instance, const std::vector<double>& weight, const SolutionSet& s) {
  const auto d = service_distances(instance, s);
  double cost = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j)
    if (weight[j] != 0.0) cost += weight[j] * d[j];
  return cost;
}

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return out;
}

/// Calls visit(subset) for every k-subset of {0..n-1} in lexicographic order.
template <class Visit>
void for_each_subset(std::size_t n, std::size_t k, Visit&& visit) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    visit(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t m = i; m < k; ++m) idx[m] = idx[m - 1] + 1;
  }
}

}  // namespace detail

/// Exact weighted k-median by enumeration. The lexicographically first optimum wins.
inline SolutionSet kmedian_bruteforce(const Instance& instance, const std::vector<double>& weight, int k) {
  const std::size_t nf = instance.num_facilities(), nc = instance.num_clients();
  detail::require(weight.size() == nc, "kmedian: one weight per client");
  detail::require(k >= 1 && static_cast<std::size_t>(k) <= nf, "kmedian: need 1 <= k <= |F|");
  detail::require(detail::binomial(nf, static_cast<std::size_t>(k)) <= 1e6, "kmedian_bruteforce: C(|F|,k) exceeds 1e6");
  std::vector<FacilityIndex> best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> d(nc);
  detail::for_each_subset(nf, static_cast<std::size_t>(k), [&](const std::vector<std::size_t>& subset) {
    double cost = 0.0;
    for (ClientIndex j = 0; j < nc; ++j) {
      double m = std::numeric_limits<double>::infinity();
      for (auto f : subset) m = std::min(m, instance.dist(f, j));
      cost += weight[j] * m;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = subset;
    }
  });
  return SolutionSet(std::move(best));
}

/// Single-swap local search from a seeded random start, best improvement per pass.
inline SolutionSet kmedian_localsearch(const Instance& instance, const std::vector<double>& weight, int k,
                                       RandomSource& rng) {
  const std::size_t nf = instance.num_facilities(), nc = instance.num_clients();
  detail::require(weight.size() == nc, "kmedian: one weight per client");
  detail::require(k >= 1 && static_cast<std::size_t>(k) <= nf, "kmedian: need 1 <= k <= |F|");
  std::vector<FacilityIndex> order(nf);
  std::iota(order.begin(), order.end(), FacilityIndex{0});
  for (std::size_t i = nf; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<FacilityIndex> current(order.begin(), order.begin() + k);
  std::vector<char> open(nf, 0);
  for (auto f : current) open[f] = 1;
  auto cost_of = [&](const std::vector<FacilityIndex>& s) {
    double cost = 0.0;
    for (ClientIndex j = 0; j < nc; ++j) {
      if (weight[j] == 0.0) continue;
      double m = std::numeric_limits<double>::infinity();
      for (auto f : s) m = std::min(m, instance.dist(f, j));
      cost += weight[j] * m;
    }
    return cost;
  };
  double cost = cost_of(current);
  for (std::size_t pass = 0; pass < 100000; ++pass) {
    double best = cost;
    std::size_t best_slot = 0;
    FacilityIndex best_in = nf;
    for (std::size_t slot = 0; slot < current.size(); ++slot) {
      const FacilityIndex out = current[slot];
      for (FacilityIndex in = 0; in < nf; ++in) {
        if (open[in]) continue;
        current[slot] = in;
        const double c = cost_of(current);
        if (c < best - 1e-12 * std::max(1.0, std::abs(best))) {
          best = c;
          best_slot = slot;
          best_in = in;
        }
      }
      current[slot] = out;
    }
    if (best_in == nf) break;
    detail::ensure(best <= cost, "kmedian_localsearch: cost increased");
    open[current[best_slot]] = 0;
    open[best_in] = 1;
    current[best_slot] = best_in;
    cost = best;
  }
  return SolutionSet(std::move(current));
}

inline KMedianSolver bruteforce_plugin() {
  return {"bruteforce", 1.0, [](const Instance& inst, const std::vector<double>& w, int k, RandomSource&) {
            return kmedian_bruteforce(inst, w, k);
          }};
}

inline KMedianSolver localsearch_plugin() {
  return {"localsearch", 5.0, [](const Instance& inst, const std::vector<double>& w, int k, RandomSource& rng) {
            return kmedian_localsearch(inst, w, k, rng);
          }};
}

namespace detail {

/// t_j = 0 is only satisfiable when j sits on a facility; such targets are floored so
/// that ratios stay finite while still forcing d(j,S) = 0 through a huge weight.
inline std::vector<double> floored_targets(const Instance& instance, const DemandExpected& demand) {
  double scale = 0.0;
  for (ClientIndex j = 0; j < instance.num_clients(); ++j)
    for (FacilityIndex f = 0; f < instance.num_facilities(); ++f) scale = std::max(scale, instance.dist(f, j));
  const double floor = 1e-12 * std::max(1.0, scale);
  std::vector<double> t = demand.t;
  for (ClientIndex j = 0; j < t.size(); ++j) {
    if (t[j] > 0.0) continue;
    if (nearest(instance, j).distance > 0.0)
      throw infeasible_error("expected demand: t_j = 0 for client " + instance.client_id(j) +
                                 " whose nearest facility is at positive distance",
                             nearest(instance, j).distance);
    t[j] = floor;
  }
  return t;
}

}  // namespace detail

/// One call of the plugin with weights z_j = (eps/n + w_j)/t_j, w normalized to sum 1.
inline SolutionSet bounded_ratio_kmedian(const Instance& instance, const DemandExpected& demand, double epsilon,
                                         const KMedianSolver& plugin, std::vector<double> weight, RandomSource& rng) {
  demand.validate(instance);
  detail::require(epsilon > 0.0 && epsilon <= 1.0, "bounded_ratio_kmedian: epsilon must lie in (0,1]");
  const std::size_t n = instance.num_clients();
  if (weight.empty()) weight.assign(n, 1.0);
  detail::require(weight.size() == n, "bounded_ratio_kmedian: one weight per client");
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  detail::require(total > 0.0, "bounded_ratio_kmedian: weights must have positive sum");
  const auto t = detail::floored_targets(instance, demand);
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = (epsilon / static_cast<double>(n) + weight[j] / total) / t[j];
  SolutionSet s = plugin.solve(instance, z, instance.k(), rng);
  detail::ensure(!s.empty() && s.size() <= static_cast<std::size_t>(instance.k()),
                 "k-median plugin '" + plugin.name + "' returned an invalid set size");
  return s;
}

struct MwuOptions {
  std::size_t max_rounds = 0;   // 0: no cap on the default round count
  double potential_slack = 1.01;
};

struct MwuResult {
  ExplicitLottery lottery;
  std::size_t rounds = 0;
  std::size_t default_rounds = 0;
  double worst_potential_ratio = 0.0;  // max over rounds of (Phi_{l+1}/Phi_l) / allowed
};

/// Multiplicative weights over bounded_ratio_kmedian. Weights are kept in log form.
inline MwuResult mwu_lottery(const Instance& instance, const DemandExpected& demand, double epsilon,
                             const KMedianSolver& plugin, RandomSource& rng, MwuOptions options = {}) {
  demand.validate(instance);
  detail::require(epsilon > 0.0 && epsilon <= 1.0, "mwu: epsilon must lie in (0,1]");
  const auto lp = solve_expectation_lp(instance, demand);
  if (!lp.feasible()) throw infeasible_error("expected demand: expectation LP is infeasible", lp.certificate);
  const auto t = detail::floored_targets(instance, demand);

  const std::size_t n = instance.num_clients();
  const double nd = static_cast<double>(n);
  const double phi = epsilon * epsilon / nd;
  MwuResult result;
  result.default_rounds = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(nd * std::log(nd) / (epsilon * epsilon * epsilon))));
  result.rounds = options.max_rounds > 0 ? std::min(result.default_rounds, options.max_rounds) : result.default_rounds;

  std::vector<double> log_w(n, 0.0), w(n), u(n);
  std::vector<SolutionSet> picks;
  picks.reserve(result.rounds);
  for (std::size_t round = 0; round < result.rounds; ++round) {
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double phi_now = 0.0;
    for (std::size_t j = 0; j < n; ++j) phi_now += (w[j] = std::exp(log_w[j] - top));
    RandomSource stream = rng.child(static_cast<std::uint64_t>(round));
    SolutionSet x = bounded_ratio_kmedian(instance, demand, epsilon, plugin, w, stream);
    const auto d = service_distances(instance, x);
    double phi_next = 0.0, u_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      u[j] = phi * d[j] / t[j];
      u_max = std::max(u_max, u[j]);
      phi_next += w[j] * std::exp(u[j]);
    }
    const double g = u_max > 1e-12 ? std::expm1(u_max) / u_max : 1.0;
    const double allowed = options.potential_slack * std::exp(g * phi * plugin.alpha * (1.0 + epsilon));
    const double ratio = phi_next / phi_now;
    result.worst_potential_ratio = std::max(result.worst_potential_ratio, ratio / allowed);
    if (ratio > allowed)
      throw infeasible_error("mwu: potential grew by " + std::to_string(ratio) + " (allowed " +
                                 std::to_string(allowed) + "); demand infeasible for plugin '" + plugin.name + "'",
                             ratio / allowed);
    for (std::size_t j = 0; j < n; ++j) log_w[j] += u[j];
    picks.push_back(std::move(x));
  }
  result.lottery = ExplicitLottery::uniform(picks);
  return result;
}

namespace detail {

/// A nonzero vector v with M v = 0 for an r x c matrix M (row-major), c > rank,
/// from reduced row echelon form with partial pivoting.
inline std::vector<double> nullspace_vector(std::vector<double> m, std::size_t rows, std::size_t cols) {
  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(1.0, scale);
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t best = r;
    for (std::size_t i = r + 1; i < rows; ++i)
      if (std::abs(m[i * cols + c]) > std::abs(m[best * cols + c])) best = i;
    if (std::abs(m[best * cols + c]) <= tol) continue;
    for (std::size_t k = 0; k < cols; ++k) std::swap(m[r * cols + k], m[best * cols + k]);
    const double p = m[r * cols + c];
    for (std::size_t k = 0; k < cols; ++k) m[r * cols + k] /= p;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double f = m[i * cols + c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < cols; ++k) m[i * cols + k] -= f * m[r * cols + k];
    }
    pivot_col.push_back(c);
    ++r;
  }
  std::vector<char> is_pivot(cols, 0);
  for (auto c : pivot_col) is_pivot[c] = 1;
  std::size_t free = cols;
  for (std::size_t c = 0; c < cols; ++c)
    if (!is_pivot[c]) {
      free = c;
      break;
    }
  if (free == cols) return {};
  std::vector<double> v(cols, 0.0);
  v[free] = 1.0;
  for (std::size_t i = 0; i < pivot_col.size(); ++i) v[pivot_col[i]] = -m[i * cols + free];
  return v;
}

}  // namespace detail

/// Support reduction keeping every E[d(j,S)] and the total mass fixed.
///
/// Works on windows of |C|+2 atoms: such a window always has a direction in the
/// nullspace of the (|C|+1)-row constraint matrix; moving along it to the boundary
/// zeroes at least one atom. Stops once at most |C|+1 atoms remain.
inline ExplicitLottery reduce_support(const Instance& instance, ExplicitLottery lottery) {
  lottery.merge_duplicates();
  std::erase_if(lottery.atoms, [](const LotteryAtom& a) { return a.prob <= 0.0; });
  const std::size_t n = instance.num_clients();
  const std::size_t rows = n + 1, window = n + 2;
  std::vector<std::vector<double>> dist;
  for (const auto& atom : lottery.atoms) dist.push_back(service_distances(instance, atom.set));
  while (lottery.atoms.size() > rows) {
    std::vector<double> m(rows * window);
    for (std::size_t c = 0; c < window; ++c) {
      for (std::size_t j = 0; j < n; ++j) m[j * window + c] = dist[c][j];
      m[n * window + c] = 1.0;
    }
    auto v = detail::nullspace_vector(m, rows, window);
    detail::ensure(!v.empty(), "reduce_support: window without a nullspace direction");
    bool has_negative = std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; });
    if (!has_negative)
      for (double& x : v) x = -x;
    double step = std::numeric_limits<double>::infinity();
    std::size_t hit = window;
    for (std::size_t c = 0; c < window; ++c)
      if (v[c] < 0.0 && lottery.atoms[c].prob / -v[c] < step) {
        step = lottery.atoms[c].prob / -v[c];
        hit = c;
      }
    detail::ensure(hit < window, "reduce_support: direction without a boundary");
    for (std::size_t c = 0; c < window; ++c) lottery.atoms[c].prob = std::max(0.0, lottery.atoms[c].prob + step * v[c]);
    lottery.atoms[hit].prob = 0.0;
    for (std::size_t c = window; c-- > 0;)
      if (lottery.atoms[c].prob <= 0.0) {
        lottery.atoms.erase(lottery.atoms.begin() + static_cast<std::ptrdiff_t>(c));
        dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(c));
      }
  }
  return lottery;
}

/// Draws t = ceil(6 ln n/(c eps^2)) sets from `sampler` and returns their uniform lottery
/// once every client mean is at most c(1+eps) r_j; retries on fresh child streams.
inline ExplicitLottery sparsify_sampling(const Instance& instance, const std::function<SolutionSet(RandomSource&)>& sampler,
                                         const std::vector<double>& radius, double mean_factor, double epsilon,
                                         RandomSource& rng, std::size_t max_attempts = 100) {
  detail::require(epsilon > 0.0 && epsilon <= 1.0, "sparsify: epsilon must lie in (0,1]");
  detail::require(mean_factor > 0.0, "sparsify: mean factor must be positive");
  detail::require(radius.size() == instance.num_clients(), "sparsify: one radius per client");
  const double n = std::max<double>(2.0, static_cast<double>(instance.num_clients()));
  const auto draws = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(6.0 * std::log(n) / (mean_factor * epsilon * epsilon))));
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    RandomSource stream = rng.child(static_cast<std::uint64_t>(attempt));
    std::vector<SolutionSet> sets;
    for (std::size_t i = 0; i < draws; ++i) sets.push_back(sampler(stream));
    ExplicitLottery lottery = ExplicitLottery::uniform(sets);
    const auto mean = lottery.expectations(instance);
    bool ok = true;
    for (std::size_t j = 0; j < mean.size() && ok; ++j)
      ok = mean[j] <= mean_factor * (1.0 + epsilon) * radius[j] + 1e-12;
    if (ok) return lottery;
  }
  throw resource_error("sparsify: per-client mean check failed on " + std::to_string(max_attempts) + " attempts");
}

}  // namespace stoclot
