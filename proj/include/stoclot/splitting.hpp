#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/instance.hpp"

namespace stoclot {

/// A copy of a facility carrying part of its fractional mass.
struct Piece {
  FacilityIndex facility;
  double mass;
};

/// Facility copies plus, per client, the cluster F_j of copies it owns.
struct ClusterFamily {
  std::vector<Piece> pieces;
  std::vector<std::vector<std::size_t>> clusters;  // sorted piece indices per client
  std::vector<double> target;                        // prescribed m_j

  std::size_t num_pieces() const { return pieces.size(); }
  std::size_t num_clients() const { return clusters.size(); }

  double cluster_mass(ClientIndex j) const {
    double s = 0.0;
    for (auto p : clusters[j]) s += pieces[p].mass;
    return s;
  }

  std::vector<double> piece_masses() const {
    std::vector<double> out(pieces.size());
    for (std::size_t p = 0; p < pieces.size(); ++p) out[p] = pieces[p].mass;
    return out;
  }

  /// Sum of copy masses per original facility.
  std::vector<double> unsplit(std::size_t num_facilities) const {
    std::vector<double> b(num_facilities, 0.0);
    for (const auto& piece : pieces) b[piece.facility] += piece.mass;
    return b;
  }

  bool intersects(ClientIndex a, ClientIndex b) const {
    const auto& x = clusters[a];
    const auto& y = clusters[b];
    std::size_t i = 0, k = 0;
    while (i < x.size() && k < y.size()) {
      if (x[i] == y[k]) return true;
      if (x[i] < y[k]) ++i;
      else ++k;
    }
    return false;
  }
};

enum class SplitMode {
  per_client,            // every client cuts a prefix of each facility; clusters may share copies
  sequential_exclusive,  // clients consume facility mass in index order; clusters are disjoint
};

namespace detail {
constexpr double kSplitSnap = 1e-12;
constexpr double kSplitSlack = 1e-8;
}  // namespace detail

/// Splits facilities into copies so that client j's cluster F_j lies in B(j, r_j) and
/// has mass m_j.
///
/// Each client scans its ball by (distance, not-self, index) and takes whole
/// facilities until the last one, of which it takes only the needed prefix. In the SCC
/// setting the client's own facility sorts first among equals, so j is in F_j whenever
/// b_j > 0. Copies of one facility partition its mass.
inline ClusterFamily split_facilities(const Instance& instance, const std::vector<double>& b,
                                      const std::vector<double>& radius, const std::vector<double>& mass,
                                      SplitMode mode = SplitMode::per_client) {
  const std::size_t nf = instance.num_facilities(), nc = instance.num_clients();
  detail::require(b.size() == nf, "split: b must have one entry per facility");
  detail::require(radius.size() == nc && mass.size() == nc, "split: one (radius, mass) per client");

  // takes[j] = list of (facility, lo, hi) intervals of facility mass claimed by j.
  struct Take {
    FacilityIndex f;
    double lo, hi;
  };
  std::vector<std::vector<Take>> takes(nc);
  std::vector<double> consumed(nf, 0.0);
  for (ClientIndex j = 0; j < nc; ++j) {
    if (mass[j] <= 0.0) continue;
    auto members = ball(instance, j, radius[j]);
    std::sort(members.begin(), members.end(), [&](FacilityIndex x, FacilityIndex y) {
      const bool sx = instance.scc() && x == j, sy = instance.scc() && y == j;
      return std::make_tuple(instance.dist(x, j), !sx, x) < std::make_tuple(instance.dist(y, j), !sy, y);
    });
    double available = 0.0;
    for (auto f : members) available += b[f] - (mode == SplitMode::sequential_exclusive ? consumed[f] : 0.0);
    if (available < mass[j] - detail::kSplitSlack)
      throw input_error("split: client " + instance.client_id(j) + " has ball mass " + std::to_string(available) +
                        " below its target " + std::to_string(mass[j]));
    const double goal = std::min(mass[j], available);
    double acc = 0.0;
    for (auto f : members) {
      const double need = goal - acc;
      if (need <= detail::kSplitSnap) break;
      const double lo = mode == SplitMode::sequential_exclusive ? consumed[f] : 0.0;
      const double have = b[f] - lo;
      if (have <= 0.0) continue;
      const double hi = (have <= need + detail::kSplitSnap) ? b[f] : lo + need;
      takes[j].push_back({f, lo, hi});
      acc += hi - lo;
      if (mode == SplitMode::sequential_exclusive) consumed[f] = hi;
    }
  }

  // Cut points per facility; nearby cuts are merged so no sliver copies appear.
  std::vector<std::vector<double>> cuts(nf);
  for (std::size_t f = 0; f < nf; ++f)
    if (b[f] > 0.0) cuts[f] = {0.0, b[f]};
  for (const auto& list : takes)
    for (const auto& t : list) {
      cuts[t.f].push_back(t.lo);
      cuts[t.f].push_back(t.hi);
    }
  std::vector<std::size_t> first_piece(nf, 0);
  ClusterFamily family;
  family.target = mass;
  for (std::size_t f = 0; f < nf; ++f) {
    auto& c = cuts[f];
    std::sort(c.begin(), c.end());
    std::vector<double> merged;
    for (double x : c)
      if (merged.empty() || x - merged.back() > detail::kSplitSnap) merged.push_back(x);
    if (!merged.empty()) merged.back() = b[f];
    c = std::move(merged);
    first_piece[f] = family.pieces.size();
    for (std::size_t i = 0; i + 1 < c.size(); ++i) family.pieces.push_back({f, c[i + 1] - c[i]});
  }
  auto cut_index = [&](FacilityIndex f, double x) {
    const auto& c = cuts[f];
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
      if (std::abs(c[i] - x) < std::abs(c[best] - x)) best = i;
    return best;
  };
  family.clusters.resize(nc);
  for (ClientIndex j = 0; j < nc; ++j) {
    for (const auto& t : takes[j]) {
      const std::size_t lo = cut_index(t.f, t.lo), hi = cut_index(t.f, t.hi);
      for (std::size_t i = lo; i < hi; ++i) family.clusters[j].push_back(first_piece[t.f] + i);
    }
    std::sort(family.clusters[j].begin(), family.clusters[j].end());
  }
  return family;
}

}  // namespace stoclot
