#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "stoclot/chance.hpp"
#include "stoclot/error.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/lp_models.hpp"
#include "stoclot/random.hpp"
#include "stoclot/rounding.hpp"
#include "stoclot/splitting.hpp"

namespace stoclot {

/// Joint law of (Q_f, Q_p): center-opening probabilities for full and partial groups.
struct QDistribution {
  struct Point {
    double qf;
    double qp;
    double prob;
  };
  std::vector<Point> support;

  static QDistribution point_mass(double qf, double qp) { return {{{qf, qp, 1.0}}}; }

  /// (0.4525, 0) with probability 0.773436, otherwise (0.0480, 0.3950).
  static QDistribution reference() { return {{{0.4525, 0.0, 0.773436}, {0.0480, 0.3950, 1.0 - 0.773436}}}; }

  void validate() const {
    detail::require(!support.empty(), "qdist: support must be nonempty");
    double total = 0.0;
    for (const auto& pt : support) {
      detail::require(pt.qf >= 0.0 && pt.qf <= 1.0 && pt.qp >= 0.0 && pt.qp <= 1.0, "qdist: q values must lie in [0,1]");
      detail::require(pt.prob >= 0.0, "qdist: probabilities must be nonnegative");
      total += pt.prob;
    }
    detail::require(std::abs(total - 1.0) <= 1e-9, "qdist: probabilities must sum to 1");
  }

  const Point& draw(double u) const {
    double acc = 0.0;
    for (const auto& pt : support) {
      acc += pt.prob;
      if (u < acc) return pt;
    }
    return support.back();
  }
};

namespace detail {

/// Index of the piece picked by inverse CDF over `pieces` weighted by `mass`, using a
/// uniform u in [0,1) scaled to the total weight.
inline std::size_t pick_piece(const std::vector<std::size_t>& pieces, const std::vector<double>& mass, double u) {
  double total = 0.0;
  for (auto p : pieces) total += mass[p];
  const double target = u * total;
  double acc = 0.0;
  for (auto p : pieces) {
    acc += mass[p];
    if (target < acc) return p;
  }
  return pieces.back();
}

inline DemandChance cover_demand(const Instance& instance, const std::vector<double>& radius) {
  detail::require(radius.size() == instance.num_clients(), "lottery: one radius per client");
  return DemandChance{std::vector<double>(instance.num_clients(), 1.0), radius};
}

}  // namespace detail

/// Cluster lottery for deterministic cover radii r_j (p_j = 1).
///
/// Greedy clusters of mass 1 (weights r_j); each winner opens one facility of its
/// cluster drawn proportionally to b, except that with probability q it opens its
/// own center instead (SCC only). Unclustered copies go through dep_round. q = 0 is
/// the general algorithm and consumes randomness identically.
class ClusterLottery {
 public:
  ClusterLottery(const Instance& instance, std::vector<double> radius, double q = 0.0)
      : instance_(&instance), radius_(std::move(radius)), q_(q) {
    detail::require(q >= 0.0 && q <= 1.0, "lottery: q must lie in [0,1]");
    if (q > 0.0) detail::require(instance.scc(), "lottery: center shifting (q > 0) requires an SCC instance");
    opening_ = require_chance_opening(instance, detail::cover_demand(instance, radius_));
    family_ = split_facilities(instance, opening_.b, radius_, std::vector<double>(instance.num_clients(), 1.0));
    mass_ = family_.piece_masses();
    centers_ = greedy_cluster(family_.clusters, radius_);
    std::vector<char> clustered(family_.num_pieces(), 0);
    for (auto j : centers_)
      for (auto p : family_.clusters[j]) clustered[p] = 1;
    for (std::size_t p = 0; p < family_.num_pieces(); ++p)
      if (!clustered[p]) unclustered_.push_back(p);
  }

  /// Chosen copies (cluster draws, then dep_round over unclustered copies) plus the
  /// centers opened by shifting.
  SolutionSet sample(RandomSource& rng, std::vector<std::size_t>* pieces = nullptr) const {
    std::vector<FacilityIndex> open;
    for (auto j : centers_) {
      const double u = rng.uniform();
      if (u < q_) {
        open.push_back(j);
        continue;
      }
      const double v = q_ > 0.0 ? (u - q_) / (1.0 - q_) : u;
      const std::size_t p = detail::pick_piece(family_.clusters[j], mass_, v);
      open.push_back(family_.pieces[p].facility);
      if (pieces) pieces->push_back(p);
    }
    for (auto p : dep_round_restricted(mass_, unclustered_, rng)) {
      open.push_back(family_.pieces[p].facility);
      if (pieces) pieces->push_back(p);
    }
    SolutionSet s(std::move(open));
    detail::ensure(s.size() <= static_cast<std::size_t>(instance_->k()), "cluster lottery opened more than k");
    return s;
  }

  const ClusterFamily& family() const { return family_; }
  const std::vector<ClientIndex>& centers() const { return centers_; }
  const std::vector<double>& radius() const { return radius_; }

 private:
  const Instance* instance_;
  std::vector<double> radius_;
  double q_;
  FractionalOpening opening_;
  ClusterFamily family_;
  std::vector<double> mass_;
  std::vector<ClientIndex> centers_;
  std::vector<std::size_t> unclustered_;
};

inline SolutionSet lottery_general(const Instance& instance, const std::vector<double>& radius, RandomSource& rng) {
  return ClusterLottery(instance, radius, 0.0).sample(rng);
}

inline SolutionSet lottery_scc(const Instance& instance, const std::vector<double>& radius, double q,
                               RandomSource& rng) {
  detail::require(instance.scc(), "lottery_scc: instance must be SCC");
  return ClusterLottery(instance, radius, q).sample(rng);
}

/// Greedy order pi by largest residual mass, residual groups G_j and their masses z_j.
struct PartialClusterDecomposition {
  std::vector<ClientIndex> order;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<double> z;
};

inline PartialClusterDecomposition build_partial_decomposition(const ClusterFamily& family) {
  const std::size_t nc = family.num_clients();
  const auto mass = family.piece_masses();
  std::vector<char> covered(family.num_pieces(), 0), used(nc, 0);
  PartialClusterDecomposition out;
  for (std::size_t step = 0; step < nc; ++step) {
    ClientIndex best = nc;
    double best_mass = -1.0;
    for (ClientIndex j = 0; j < nc; ++j) {
      if (used[j]) continue;
      double residual = 0.0;
      for (auto p : family.clusters[j])
        if (!covered[p]) residual += mass[p];
      if (residual > best_mass + 1e-12) {
        best = j;
        best_mass = residual;
      }
    }
    used[best] = 1;
    std::vector<std::size_t> group;
    double z = 0.0;
    for (auto p : family.clusters[best])
      if (!covered[p]) {
        covered[p] = 1;
        group.push_back(p);
        z += mass[p];
      }
    if (z >= 1.0 - 1e-9) z = 1.0;
    out.order.push_back(best);
    out.groups.push_back(std::move(group));
    out.z.push_back(std::clamp(z, 0.0, 1.0));
  }
  return out;
}

/// Partial-cluster lottery for homogeneous SCC instances with common radius r.
///
/// Per sample: draw (Q_f, Q_p), select groups Z = dep_round(z), and for each selected
/// group open its center with probability q_j (Q_f for full groups, Q_p for partial
/// ones), otherwise a copy of G_j drawn proportionally to b.
class PartialLottery {
 public:
  PartialLottery(const Instance& instance, double radius, QDistribution qdist)
      : instance_(&instance), radius_(radius), qdist_(std::move(qdist)) {
    detail::require(instance.scc(), "lottery_partial: instance must be SCC");
    detail::require(radius >= 0.0, "lottery_partial: radius must be nonnegative");
    qdist_.validate();
    const std::vector<double> radii(instance.num_clients(), radius);
    opening_ = require_chance_opening(instance, detail::cover_demand(instance, radii));
    family_ = split_facilities(instance, opening_.b, radii, std::vector<double>(instance.num_clients(), 1.0));
    mass_ = family_.piece_masses();
    decomposition_ = build_partial_decomposition(family_);
  }

  SolutionSet sample(RandomSource& rng) const {
    const auto& q = qdist_.draw(rng.uniform());
    std::vector<FacilityIndex> open;
    for (auto rank : dep_round(decomposition_.z, rng)) {
      const double qj = decomposition_.z[rank] >= 1.0 ? q.qf : q.qp;
      const double u = rng.uniform();
      if (u < qj) {
        open.push_back(decomposition_.order[rank]);
        continue;
      }
      const double v = qj > 0.0 ? (u - qj) / (1.0 - qj) : u;
      open.push_back(family_.pieces[detail::pick_piece(decomposition_.groups[rank], mass_, v)].facility);
    }
    SolutionSet s(std::move(open));
    detail::ensure(s.size() <= static_cast<std::size_t>(instance_->k()), "partial lottery opened more than k");
    return s;
  }

  const PartialClusterDecomposition& decomposition() const { return decomposition_; }
  const ClusterFamily& family() const { return family_; }
  double radius() const { return radius_; }

 private:
  const Instance* instance_;
  double radius_;
  QDistribution qdist_;
  FractionalOpening opening_;
  ClusterFamily family_;
  std::vector<double> mass_;
  PartialClusterDecomposition decomposition_;
};

inline SolutionSet lottery_partial(const Instance& instance, double radius, const QDistribution& qdist,
                                   RandomSource& rng) {
  return PartialLottery(instance, radius, qdist).sample(rng);
}

/// Smallest facility-client distance T for which the cover LP (p = 1, r = T) is
/// feasible, by binary search over the sorted distinct candidates.
inline double guess_radius(const Instance& instance) {
  std::set<double> distinct;
  for (ClientIndex j = 0; j < instance.num_clients(); ++j)
    for (FacilityIndex f = 0; f < instance.num_facilities(); ++f) distinct.insert(instance.dist(f, j));
  const std::vector<double> candidates(distinct.begin(), distinct.end());
  auto feasible = [&](double t) {
    return solve_chance_lp(instance, DemandChance::homogeneous(instance.num_clients(), 1.0, t)).feasible();
  };
  std::size_t lo = 0, hi = candidates.size() - 1;
  detail::ensure(feasible(candidates[hi]), "guess_radius: largest candidate radius infeasible");
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (feasible(candidates[mid])) hi = mid;
    else lo = mid + 1;
  }
  return candidates[lo];
}

}  // namespace stoclot
