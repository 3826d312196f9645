#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/lp_models.hpp"
#include "stoclot/random.hpp"
#include "stoclot/rounding.hpp"
#include "stoclot/splitting.hpp"

namespace stoclot {

/// Solves the chance LP or throws infeasible_error carrying the phase-1 certificate.
inline FractionalOpening require_chance_opening(const Instance& instance, const DemandChance& demand) {
  auto res = solve_chance_lp(instance, demand);
  if (!res.feasible()) throw infeasible_error("chance demands are infeasible (LP)", res.certificate);
  return std::move(*res.opening);
}

/// Rounds the LP solution directly with dep_round. Coverage probability is at least
/// (1 - 1/e) p_j.
class FaithfulRounding {
 public:
  FaithfulRounding(const Instance& instance, const DemandChance& demand)
      : instance_(&instance), opening_(require_chance_opening(instance, demand)) {}

  SolutionSet sample(RandomSource& rng) const {
    SolutionSet s(dep_round(opening_.b, rng));
    detail::ensure(s.size() <= static_cast<std::size_t>(instance_->k()), "faithful rounding opened more than k");
    return s;
  }

  const FractionalOpening& opening() const { return opening_; }

 private:
  const Instance* instance_;
  FractionalOpening opening_;
};

enum class HalfHomogeneousMode { equal_p, equal_r };

/// Greedy clusters of mass p_j, dependent rounding over the winners, and V_z opened
/// for each selected winner z. Requires all p equal (weights r) or all r equal
/// (weights 1 - p).
class HalfHomogeneousRounding {
 public:
  HalfHomogeneousRounding(const Instance& instance, const DemandChance& demand, HalfHomogeneousMode mode)
      : instance_(&instance) {
    demand.validate(instance);
    const auto& ref = mode == HalfHomogeneousMode::equal_p ? demand.p : demand.r;
    for (double v : ref)
      detail::require(v == ref.front(), mode == HalfHomogeneousMode::equal_p
                                            ? "half-homogeneous rounding: equal_p mode needs identical p_j"
                                            : "half-homogeneous rounding: equal_r mode needs identical r_j");
    opening_ = require_chance_opening(instance, demand);
    family_ = split_facilities(instance, opening_.b, demand.r, demand.p);
    std::vector<double> weight(instance.num_clients());
    for (ClientIndex j = 0; j < weight.size(); ++j)
      weight[j] = mode == HalfHomogeneousMode::equal_p ? demand.r[j] : 1.0 - demand.p[j];
    centers_ = greedy_cluster(family_.clusters, weight);
    y_.assign(instance.num_clients(), 0.0);
    for (auto z : centers_) y_[z] = demand.p[z];
    for (ClientIndex j = 0; j < instance.num_clients(); ++j) nearest_.push_back(nearest(instance, j).facility);
  }

  SolutionSet sample(RandomSource& rng) const {
    std::vector<FacilityIndex> open;
    for (auto z : dep_round(y_, rng)) open.push_back(nearest_[z]);
    SolutionSet s(std::move(open));
    detail::ensure(s.size() <= static_cast<std::size_t>(instance_->k()), "half-homogeneous rounding opened more than k");
    return s;
  }

  const std::vector<ClientIndex>& centers() const { return centers_; }
  const ClusterFamily& family() const { return family_; }

 private:
  const Instance* instance_;
  FractionalOpening opening_;
  ClusterFamily family_;
  std::vector<ClientIndex> centers_;
  std::vector<double> y_;
  std::vector<FacilityIndex> nearest_;
};

/// State of the iterative rounding walk over facility copies.
///
/// Tracks b over the copies of a cluster family, which clients are tight, slack or
/// removed, each cluster's current mass, and the covered mass b(U) where U is the
/// union of all active clusters. Tight clusters are pairwise disjoint with mass 1,
/// slack clusters have mass at most 1, and b(U) <= k.
class IterativeState {
 public:
  enum class Status : unsigned char { slack, tight, removed };

  struct Move {
    std::vector<std::pair<std::size_t, double>> direction;  // sparse nullspace vector
  };

  IterativeState(const ClusterFamily& family, std::vector<double> radius, int k)
      : family_(&family), radius_(std::move(radius)), k_(k) {
    const std::size_t np = family.num_pieces(), nc = family.num_clients();
    detail::require(radius_.size() == nc, "iterative state: one radius per client");
    b_ = family.piece_masses();
    for (double& v : b_) v = detail::snap_integral(v);
    status_.assign(nc, Status::slack);
    members_.assign(np, {});
    for (ClientIndex j = 0; j < nc; ++j)
      for (auto p : family.clusters[j]) members_[p].push_back(j);
    active_count_.assign(np, 0);
    owner_.assign(np, kNone);
    sum_.assign(nc, 0.0);
    for (ClientIndex j = 0; j < nc; ++j)
      for (auto p : family.clusters[j]) {
        sum_[j] += b_[p];
        ++active_count_[p];
      }
    for (std::size_t p = 0; p < np; ++p)
      if (active_count_[p] > 0) total_ += b_[p];
    slack_count_ = nc;
  }

  const std::vector<double>& b() const { return b_; }
  double cluster_sum(ClientIndex j) const { return sum_[j]; }
  Status status(ClientIndex j) const { return status_[j]; }
  double covered_mass() const { return total_; }
  bool has_slack() const { return slack_count_ > 0; }
  const std::vector<std::pair<ClientIndex, bool>>& history() const { return history_; }

  std::vector<ClientIndex> tight_clients() const {
    std::vector<ClientIndex> out;
    for (ClientIndex j = 0; j < status_.size(); ++j)
      if (status_[j] == Status::tight) out.push_back(j);
    return out;
  }

  /// Least-index slack client whose cluster mass is 0 or 1.
  std::optional<ClientIndex> integral_slack() const {
    for (ClientIndex j = 0; j < status_.size(); ++j)
      if (status_[j] == Status::slack && (std::abs(sum_[j]) <= kSumTol || std::abs(sum_[j] - 1.0) <= kSumTol))
        return j;
    return std::nullopt;
  }

  /// A direction in the nullspace of the active constraints (tight cluster rows, and
  /// the budget row when b(U) = k), supported on strictly fractional copies of U.
  std::optional<Move> direction() const {
    for (ClientIndex j = 0; j < status_.size(); ++j) {
      if (status_[j] != Status::tight) continue;
      std::size_t first = kNone;
      for (auto p : family_->clusters[j]) {
        if (!detail::is_fractional(b_[p])) continue;
        if (first == kNone) {
          first = p;
        } else {
          return Move{{{first, 1.0}, {p, -1.0}}};
        }
      }
    }
    std::size_t r0 = kNone, r1 = kNone;
    for (std::size_t p = 0; p < b_.size(); ++p) {
      if (active_count_[p] == 0 || owner_[p] != kNone || !detail::is_fractional(b_[p])) continue;
      if (r0 == kNone) {
        r0 = p;
      } else {
        r1 = p;
        break;
      }
    }
    if (r0 != kNone && total_ < k_ - kSumTol) return Move{{{r0, 1.0}}};
    if (r1 != kNone) return Move{{{r0, 1.0}, {r1, -1.0}}};
    return std::nullopt;
  }

  /// Largest step along +direction (sign = 1) or -direction (sign = -1) that keeps
  /// every constraint satisfied.
  double step_limit(const Move& move, double sign) const {
    double limit = std::numeric_limits<double>::infinity();
    double budget_change = 0.0;
    touched_.clear();
    for (const auto& [p, c] : move.direction) {
      const double v = sign * c;
      limit = std::min(limit, v > 0 ? (1.0 - b_[p]) / v : b_[p] / -v);
      if (active_count_[p] > 0) budget_change += v;
      for (auto j : members_[p]) touched_.emplace_back(j, v);
    }
    std::sort(touched_.begin(), touched_.end());
    for (std::size_t i = 0; i < touched_.size();) {
      const ClientIndex j = touched_[i].first;
      double net = 0.0;
      for (; i < touched_.size() && touched_[i].first == j; ++i) net += touched_[i].second;
      if (status_[j] == Status::slack && net > 1e-15) limit = std::min(limit, std::max(0.0, 1.0 - sum_[j]) / net);
    }
    if (budget_change > 1e-15) limit = std::min(limit, std::max(0.0, k_ - total_) / budget_change);
    return limit;
  }

  /// Moves b by +delta_plus or -delta_minus along the direction, choosing so that the
  /// expected move is zero.
  void apply_random_move(const Move& move, RandomSource& rng) {
    const double up = step_limit(move, 1.0), down = step_limit(move, -1.0);
    detail::ensure(up + down > 0.0, "iterative rounding: degenerate walk direction");
    const double step = rng.uniform() * (up + down) < down ? up : -down;
    for (const auto& [p, c] : move.direction) {
      const double before = b_[p];
      b_[p] = detail::snap_integral(std::clamp(before + step * c, 0.0, 1.0));
      const double delta = b_[p] - before;
      for (auto j : members_[p]) sum_[j] += delta;
      if (active_count_[p] > 0) total_ += delta;
    }
  }

  /// Unbiased walk until some slack cluster has mass exactly 0 or 1.
  void walk(RandomSource& rng) {
    detail::ensure(has_slack(), "walk: no slack clients");
    while (!integral_slack()) {
      auto move = direction();
      detail::ensure(move.has_value(), "iterative rounding: no walk direction while all slack clusters are fractional");
      apply_random_move(*move, rng);
    }
  }

  /// Resolves slack client v whose cluster is integral: mass 1 makes it tight and
  /// evicts every other active client z with r_z >= r_v / 2 whose cluster meets F_v;
  /// mass 0 removes it.
  void settle(ClientIndex v) {
    detail::ensure(status_[v] == Status::slack, "settle: client is not slack");
    const bool full = std::abs(sum_[v] - 1.0) <= kSumTol;
    detail::ensure(full || std::abs(sum_[v]) <= kSumTol, "settle: cluster mass is fractional");
    history_.emplace_back(v, full);
    if (!full) {
      remove(v);
      return;
    }
    std::vector<ClientIndex> evict;
    for (auto p : family_->clusters[v])
      for (auto z : members_[p])
        if (z != v && status_[z] != Status::removed && radius_[z] >= radius_[v] / 2.0) evict.push_back(z);
    std::sort(evict.begin(), evict.end());
    evict.erase(std::unique(evict.begin(), evict.end()), evict.end());
    for (auto z : evict) remove(z);
    status_[v] = Status::tight;
    --slack_count_;
    for (auto p : family_->clusters[v]) {
      detail::ensure(owner_[p] == kNone, "iterative rounding: tight clusters overlap (C2)");
      owner_[p] = v;
    }
  }

  /// (C1)-(C5), recomputed from scratch.
  void check_invariants() const {
    std::vector<std::size_t> seen(b_.size(), kNone);
    double covered = 0.0;
    std::vector<char> in_union(b_.size(), 0);
    for (ClientIndex j = 0; j < status_.size(); ++j) {
      if (status_[j] == Status::removed) continue;
      double s = 0.0;
      for (auto p : family_->clusters[j]) {
        s += b_[p];
        in_union[p] = 1;
        if (status_[j] == Status::tight) {
          detail::ensure(seen[p] == kNone, "invariant (C2): tight clusters intersect");
          seen[p] = j;
        }
      }
      if (status_[j] == Status::tight) detail::ensure(std::abs(s - 1.0) <= 1e-9, "invariant (C3): tight mass != 1");
      else detail::ensure(s <= 1.0 + 1e-9, "invariant (C4): slack mass > 1");
    }
    for (std::size_t p = 0; p < b_.size(); ++p) {
      detail::ensure(b_[p] >= 0.0 && b_[p] <= 1.0, "invariant: b outside [0,1]");
      if (in_union[p]) covered += b_[p];
    }
    detail::ensure(covered <= k_ + 1e-9, "invariant (C5): covered mass exceeds k");
  }

  /// Copy of largest b (least index on ties) inside a tight cluster.
  std::size_t representative(ClientIndex j) const {
    std::size_t best = kNone;
    for (auto p : family_->clusters[j])
      if (best == kNone || b_[p] > b_[best]) best = p;
    return best;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr double kSumTol = 1e-9;

  void remove(ClientIndex z) {
    if (status_[z] == Status::slack) --slack_count_;
    if (status_[z] == Status::tight)
      for (auto p : family_->clusters[z])
        if (owner_[p] == z) owner_[p] = kNone;
    status_[z] = Status::removed;
    for (auto p : family_->clusters[z])
      if (--active_count_[p] == 0) total_ -= b_[p];
  }

  const ClusterFamily* family_;
  std::vector<double> radius_;
  int k_;
  std::vector<double> b_;
  std::vector<Status> status_;
  std::vector<std::vector<ClientIndex>> members_;
  std::vector<std::size_t> active_count_;
  std::vector<std::size_t> owner_;
  std::vector<double> sum_;
  double total_ = 0.0;
  std::size_t slack_count_ = 0;
  std::vector<std::pair<ClientIndex, bool>> history_;
  mutable std::vector<std::pair<ClientIndex, double>> touched_;
};

/// One basic walk: E[b'] = b, and afterwards some slack cluster is integral.
inline void basic_walk_step(IterativeState& state, RandomSource& rng) { state.walk(rng); }

/// Iterative rounding for general chance demands: Pr[d(j,S) <= 9 r_j] >= p_j, and
/// d(j,S) <= 3 r_j whenever j was tight at some iteration.
class IterativeRounding {
 public:
  IterativeRounding(const Instance& instance, const DemandChance& demand)
      : instance_(&instance), radius_(demand.r), p_(demand.p) {
    opening_ = require_chance_opening(instance, demand);
    family_ = split_facilities(instance, opening_.b, demand.r, demand.p);
  }

  SolutionSet sample(RandomSource& rng) const {
    IterativeState state(family_, radius_, instance_->k());
    std::vector<char> ever_tight(instance_->num_clients(), 0);
    while (state.has_slack()) {
      state.walk(rng);
      const auto v = state.integral_slack();
      state.settle(*v);
      if (state.status(*v) == IterativeState::Status::tight) ever_tight[*v] = 1;
      state.check_invariants();
    }
    std::vector<FacilityIndex> open;
    for (auto j : state.tight_clients()) open.push_back(family_.pieces[state.representative(j)].facility);
    SolutionSet s(std::move(open));
    detail::ensure(s.size() <= static_cast<std::size_t>(instance_->k()), "iterative rounding opened more than k");
    if (!s.empty()) {
      const auto d = service_distances(*instance_, s);
      for (ClientIndex j = 0; j < d.size(); ++j) {
        const double tol = 1e-9 * (1.0 + radius_[j]);
        if (ever_tight[j])
          detail::ensure(d[j] <= 3.0 * radius_[j] + tol,
                         "iterative rounding: tight client " + instance_->client_id(j) + " beyond 3 r_j");
        if (p_[j] >= 1.0)
          detail::ensure(d[j] <= 9.0 * radius_[j] + tol,
                         "iterative rounding: client " + instance_->client_id(j) + " with p_j = 1 beyond 9 r_j");
      }
    } else {
      for (double p : p_) detail::ensure(p < 1.0, "iterative rounding: empty solution with a p_j = 1 client");
    }
    return s;
  }

  const ClusterFamily& family() const { return family_; }
  const FractionalOpening& opening() const { return opening_; }
  const std::vector<double>& radius() const { return radius_; }

 private:
  const Instance* instance_;
  std::vector<double> radius_;
  std::vector<double> p_;
  FractionalOpening opening_;
  ClusterFamily family_;
};

inline SolutionSet round_probability_faithful(const Instance& instance, const DemandChance& demand,
                                              RandomSource& rng) {
  return FaithfulRounding(instance, demand).sample(rng);
}

inline SolutionSet round_half_homogeneous(const Instance& instance, const DemandChance& demand,
                                          HalfHomogeneousMode mode, RandomSource& rng) {
  return HalfHomogeneousRounding(instance, demand, mode).sample(rng);
}

inline SolutionSet round_iterative_general(const Instance& instance, const DemandChance& demand,
                                           RandomSource& rng) {
  return IterativeRounding(instance, demand).sample(rng);
}

}  // namespace stoclot
