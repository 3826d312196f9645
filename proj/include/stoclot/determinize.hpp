#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/lp_models.hpp"
#include "stoclot/random.hpp"
#include "stoclot/rounding.hpp"
#include "stoclot/splitting.hpp"

namespace stoclot {

/// A single set S standing in for a lottery: |S| <= alpha k and d(j,S) <= beta t_j.
struct Determinization {
  SolutionSet set;
  double alpha_declared = 1.0;
  double beta_declared = 1.0;
  double alpha_achieved = 0.0;
  double beta_achieved = 0.0;
  std::size_t attempts = 1;
  /// exact_k only: clients j_1..j_{k+1} picked before the budget ran out. Nonempty
  /// means the demand vector is infeasible and `set` carries no guarantee.
  std::vector<ClientIndex> infeasibility_witness;

  bool meets_declared(double tol = 1e-9) const {
    return infeasibility_witness.empty() && alpha_achieved <= alpha_declared + tol &&
           beta_achieved <= beta_declared + tol;
  }
};

/// max_j d(j,S)/t_j; 0/0 counts as 0 and positive/0 as infinity.
inline double demand_ratio(const Instance& instance, const DemandExpected& demand, const SolutionSet& s) {
  const auto d = service_distances(instance, s);
  double worst = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] == 0.0) continue;
    worst = std::max(worst, demand.t[j] > 0.0 ? d[j] / demand.t[j] : std::numeric_limits<double>::infinity());
  }
  return worst;
}

namespace detail {

inline Determinization finish(const Instance& instance, const DemandExpected& demand, SolutionSet s, double alpha,
                              double beta) {
  Determinization out;
  out.alpha_declared = alpha;
  out.beta_declared = beta;
  out.alpha_achieved = static_cast<double>(s.size()) / static_cast<double>(instance.k());
  out.beta_achieved = demand_ratio(instance, demand, s);
  out.set = std::move(s);
  return out;
}

inline ExpectationLpResult require_expectation_lp(const Instance& instance, const DemandExpected& demand) {
  auto lp = solve_expectation_lp(instance, demand);
  if (!lp.feasible()) throw infeasible_error("expected demand: expectation LP is infeasible", lp.certificate);
  return lp;
}

}  // namespace detail

inline double scalefree_beta(double alpha, bool scc) {
  const double b = 2.0 * alpha / (alpha - 1.0);
  return scc ? b : std::max(3.0, b);
}

/// Greedy clustering over F_j of b-mass 1/alpha inside the smallest radius that holds
/// a-mass 1/alpha; each winner z opens V_z.
inline Determinization determinize_scalefree(const Instance& instance, const DemandExpected& demand, double alpha) {
  detail::require(alpha > 1.0 && std::isfinite(alpha), "determinize_scalefree: alpha must exceed 1");
  const auto lp = detail::require_expectation_lp(instance, demand);
  const auto& a = *lp.assignment;
  const std::size_t nf = instance.num_facilities(), nc = instance.num_clients();
  const double share = 1.0 / alpha;

  std::vector<double> radius(nc), theta(nc), weight(nc);
  std::vector<FacilityIndex> order(nf);
  for (ClientIndex j = 0; j < nc; ++j) {
    for (FacilityIndex f = 0; f < nf; ++f) order[f] = f;
    std::stable_sort(order.begin(), order.end(),
                     [&](FacilityIndex x, FacilityIndex y) { return instance.dist(x, j) < instance.dist(y, j); });
    double acc = 0.0;
    radius[j] = instance.dist(order.back(), j);
    for (std::size_t idx = 0; idx < nf; ++idx) {
      acc += a(order[idx], j);
      // Mass reached only counts once the whole distance level is included.
      if (acc >= share - 1e-12 && (idx + 1 == nf || instance.dist(order[idx + 1], j) > instance.dist(order[idx], j))) {
        radius[j] = instance.dist(order[idx], j);
        break;
      }
    }
    theta[j] = nearest(instance, j).distance;
    const double limit = (alpha * demand.t[j] - theta[j]) / (alpha - 1.0);
    detail::ensure(radius[j] <= limit + 1e-6 * std::max(1.0, demand.t[j]),
                   "determinize_scalefree: r_j exceeds (alpha t_j - theta_j)/(alpha - 1) for client " +
                       instance.client_id(j));
    weight[j] = theta[j] + radius[j];
  }
  const auto family = split_facilities(instance, lp.opening->b, radius, std::vector<double>(nc, share));
  const auto winners = greedy_cluster(family.clusters, weight);
  for (std::size_t x = 0; x < winners.size(); ++x)
    for (std::size_t y = x + 1; y < winners.size(); ++y)
      detail::ensure(!family.intersects(winners[x], winners[y]), "determinize_scalefree: greedy winners overlap");
  std::vector<FacilityIndex> open;
  for (auto z : winners) open.push_back(nearest(instance, z).facility);
  auto out = detail::finish(instance, demand, SolutionSet(std::move(open)), alpha, scalefree_beta(alpha, instance.scc()));
  detail::ensure(out.alpha_achieved <= alpha + 1e-9, "determinize_scalefree: opened more than alpha k facilities");
  return out;
}

/// ln of the number of distinct points, never below ln 2.
inline double log_size(const Instance& instance) {
  return std::log(static_cast<double>(std::max<std::size_t>(2, instance.num_points())));
}

/// DepRound on p_i = min(1, (2 ln n/eps) b_i), retried on fresh child streams until
/// d(j,S) <= (1+eps) t_j for all j. Cardinality is at most 3 k ln n/eps.
inline Determinization determinize_logblowup(const Instance& instance, const DemandExpected& demand, double epsilon,
                                             RandomSource& rng, std::size_t max_attempts = 50) {
  detail::require(epsilon > 0.0 && epsilon < 0.5, "determinize_logblowup: epsilon must lie in (0, 1/2)");
  const auto lp = detail::require_expectation_lp(instance, demand);
  const double ln_n = log_size(instance);
  const double scale = 2.0 * ln_n / epsilon;
  std::vector<double> p(instance.num_facilities());
  for (std::size_t f = 0; f < p.size(); ++f) p[f] = std::min(1.0, scale * lp.opening->b[f]);
  const double alpha = 3.0 * ln_n / epsilon;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    RandomSource stream = rng.child(static_cast<std::uint64_t>(attempt));
    SolutionSet s(dep_round(p, stream));
    if (s.empty()) continue;
    auto out = detail::finish(instance, demand, std::move(s), alpha, 1.0 + epsilon);
    out.attempts = attempt + 1;
    detail::ensure(out.alpha_achieved <= alpha + 1e-9, "determinize_logblowup: cardinality bound violated");
    if (out.beta_achieved <= 1.0 + epsilon + 1e-12) return out;
  }
  throw resource_error("determinize_logblowup: distance check failed on " + std::to_string(max_attempts) +
                       " attempts");
}

/// Repeatedly opens V_j for the violator (d(j,S) > (k+2) t_j) with the smallest t_j.
/// Needing a (k+1)-th pick proves the demand infeasible; the picks are returned as a
/// witness instead of a set.
inline Determinization determinize_exact_k(const Instance& instance, const DemandExpected& demand) {
  demand.validate(instance);
  const std::size_t nc = instance.num_clients();
  const double factor = static_cast<double>(instance.k()) + 2.0;
  std::vector<double> d(nc, std::numeric_limits<double>::infinity());
  std::vector<FacilityIndex> open;
  std::vector<ClientIndex> picks;
  while (true) {
    ClientIndex pick = nc;
    for (ClientIndex j = 0; j < nc; ++j)
      if (d[j] > factor * demand.t[j] && (pick == nc || demand.t[j] < demand.t[pick])) pick = j;
    if (pick == nc) break;
    picks.push_back(pick);
    const FacilityIndex v = nearest(instance, pick).facility;
    if (open.size() == static_cast<std::size_t>(instance.k()) || std::find(open.begin(), open.end(), v) != open.end()) {
      Determinization out = detail::finish(instance, demand, SolutionSet(open), 1.0, factor);
      out.infeasibility_witness = std::move(picks);
      return out;
    }
    open.push_back(v);
    for (ClientIndex j = 0; j < nc; ++j) d[j] = std::min(d[j], instance.dist(v, j));
  }
  detail::ensure(!open.empty(), "determinize_exact_k: no facility opened");
  return detail::finish(instance, demand, SolutionSet(std::move(open)), 1.0, factor);
}

}  // namespace stoclot
