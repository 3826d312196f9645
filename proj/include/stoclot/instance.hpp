#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stoclot/error.hpp"

namespace stoclot {

using FacilityIndex = std::size_t;
using ClientIndex = std::size_t;

/// Finite metric over points 0..n-1.
///
/// Stored either as a dense symmetric matrix or as Euclidean coordinates. Euclidean
/// metrics with at most kDenseLimit points are also materialized densely; above that
/// distances are computed on demand.
class Metric {
 public:
  static constexpr std::size_t kDenseLimit = 4096;

  Metric() = default;

  static Metric dense(std::size_t n, std::vector<double> row_major) {
    detail::require(row_major.size() == n * n, "dense metric: matrix must be n x n");
    Metric m;
    m.n_ = n;
    m.dense_ = std::move(row_major);
    return m;
  }

  static Metric euclidean(std::vector<std::vector<double>> points) {
    Metric m;
    m.n_ = points.size();
    if (!points.empty()) {
      const std::size_t dim = points.front().size();
      for (const auto& p : points) {
        detail::require(p.size() == dim, "euclidean metric: inconsistent point dimension");
        for (double x : p) detail::require(std::isfinite(x), "euclidean metric: non-finite coordinate");
      }
    }
    m.points_ = std::move(points);
    if (m.n_ <= kDenseLimit) {
      m.dense_.resize(m.n_ * m.n_);
      for (std::size_t a = 0; a < m.n_; ++a)
        for (std::size_t b = 0; b < m.n_; ++b) m.dense_[a * m.n_ + b] = m.euclid(a, b);
    }
    return m;
  }

  std::size_t size() const { return n_; }
  bool is_euclidean() const { return !points_.empty(); }
  bool is_materialized() const { return dense_.size() == n_ * n_; }
  const std::vector<std::vector<double>>& points() const { return points_; }

  double operator()(std::size_t a, std::size_t b) const {
    if (is_materialized()) return dense_[a * n_ + b];
    return euclid(a, b);
  }

  /// Nonnegativity, zero diagonal, symmetry and the triangle inequality, each up to
  /// `tol`. The triangle check is O(n^3).
  void validate(double tol = 1e-9) const {
    for (std::size_t a = 0; a < n_; ++a) {
      detail::require(std::abs((*this)(a, a)) <= tol, "metric: d(x,x) must be 0");
      for (std::size_t b = 0; b < n_; ++b) {
        const double d = (*this)(a, b);
        detail::require(std::isfinite(d) && d >= -tol, "metric: distances must be finite and nonnegative");
        detail::require(std::abs(d - (*this)(b, a)) <= tol, "metric: not symmetric");
      }
    }
    for (std::size_t y = 0; y < n_; ++y)
      for (std::size_t x = 0; x < n_; ++x) {
        const double dxy = (*this)(x, y);
        for (std::size_t z = 0; z < n_; ++z)
          if ((*this)(x, z) > dxy + (*this)(y, z) + tol)
            throw input_error("metric: triangle inequality violated at (" + std::to_string(x) + "," +
                              std::to_string(y) + "," + std::to_string(z) + ")");
      }
  }

 private:
  double euclid(std::size_t a, std::size_t b) const {
    double s = 0.0;
    const auto& p = points_[a];
    const auto& q = points_[b];
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
    return std::sqrt(s);
  }

  std::size_t n_ = 0;
  std::vector<double> dense_;
  std::vector<std::vector<double>> points_;
};

/// Facilities F, clients C, the metric d on their points, and the budget k.
///
/// Facilities and clients refer to metric points; several facilities may share one
/// point (the copy table `facility_origin` records which facility a duplicate was
/// made from). In the SCC setting clients and facilities are the same list of points,
/// so facility j and client j coincide. Immutable after construction.
class Instance {
 public:
  struct Options {
    bool validate_metric = true;
  };

  Instance() = default;

  Instance(Metric metric, std::vector<std::size_t> facility_points, std::vector<std::size_t> client_points,
           int k, bool scc, std::vector<std::string> facility_ids = {}, std::vector<std::string> client_ids = {},
           Options options = Options{true})
      : metric_(std::move(metric)),
        facility_points_(std::move(facility_points)),
        client_points_(std::move(client_points)),
        facility_ids_(std::move(facility_ids)),
        client_ids_(std::move(client_ids)),
        k_(k),
        scc_(scc) {
    detail::require(!facility_points_.empty(), "instance: facility set must be nonempty");
    detail::require(!client_points_.empty(), "instance: client set must be nonempty");
    detail::require(k_ >= 1 && static_cast<std::size_t>(k_) <= facility_points_.size(),
                    "instance: k must satisfy 1 <= k <= |F|");
    for (auto p : facility_points_) detail::require(p < metric_.size(), "instance: facility point out of range");
    for (auto p : client_points_) detail::require(p < metric_.size(), "instance: client point out of range");
    if (scc_)
      detail::require(facility_points_ == client_points_, "instance: SCC requires identical client and facility sets");
    if (facility_ids_.empty())
      for (std::size_t f = 0; f < facility_points_.size(); ++f) facility_ids_.push_back("f" + std::to_string(f));
    if (client_ids_.empty())
      for (std::size_t j = 0; j < client_points_.size(); ++j) client_ids_.push_back("c" + std::to_string(j));
    detail::require(facility_ids_.size() == facility_points_.size(), "instance: facility id count mismatch");
    detail::require(client_ids_.size() == client_points_.size(), "instance: client id count mismatch");
    facility_origin_.resize(facility_points_.size());
    for (std::size_t f = 0; f < facility_origin_.size(); ++f) facility_origin_[f] = f;
    if (options.validate_metric) metric_.validate();
    cache_distances();
  }

  std::size_t num_facilities() const { return facility_points_.size(); }
  std::size_t num_clients() const { return client_points_.size(); }
  int k() const { return k_; }
  bool scc() const { return scc_; }
  const Metric& metric() const { return metric_; }

  /// Number of distinct metric points touched by the instance (|C ∪ F|).
  std::size_t num_points() const {
    std::vector<std::size_t> pts(facility_points_);
    pts.insert(pts.end(), client_points_.begin(), client_points_.end());
    std::sort(pts.begin(), pts.end());
    return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
  }

  double dist(FacilityIndex f, ClientIndex j) const {
    if (!fc_.empty()) return fc_[j * facility_points_.size() + f];
    return metric_(facility_points_[f], client_points_[j]);
  }
  double facility_distance(FacilityIndex f, FacilityIndex g) const {
    return metric_(facility_points_[f], facility_points_[g]);
  }
  double client_distance(ClientIndex a, ClientIndex b) const {
    return metric_(client_points_[a], client_points_[b]);
  }

  const std::string& facility_id(FacilityIndex f) const { return facility_ids_.at(f); }
  const std::string& client_id(ClientIndex j) const { return client_ids_.at(j); }
  const std::vector<std::string>& facility_ids() const { return facility_ids_; }
  const std::vector<std::string>& client_ids() const { return client_ids_; }
  const std::vector<std::size_t>& facility_points() const { return facility_points_; }
  const std::vector<std::size_t>& client_points() const { return client_points_; }
  FacilityIndex facility_origin(FacilityIndex f) const { return facility_origin_.at(f); }

  ClientIndex client_index(const std::string& id) const {
    auto it = std::find(client_ids_.begin(), client_ids_.end(), id);
    if (it == client_ids_.end()) throw input_error("unknown client id '" + id + "'");
    return static_cast<ClientIndex>(it - client_ids_.begin());
  }
  FacilityIndex facility_index(const std::string& id) const {
    auto it = std::find(facility_ids_.begin(), facility_ids_.end(), id);
    if (it == facility_ids_.end()) throw input_error("unknown facility id '" + id + "'");
    return static_cast<FacilityIndex>(it - facility_ids_.begin());
  }

  /// Copy of this instance whose facility list is padded with duplicates (round-robin
  /// over the originals) until it holds at least `min_count` facilities. Duplicates sit
  /// on their original's point and are recorded in the copy table. The result is a
  /// non-SCC instance whenever padding actually happens.
  Instance with_duplicated_facilities(std::size_t min_count) const {
    Instance out = *this;
    const std::size_t base = num_facilities();
    for (std::size_t f = base; f < min_count; ++f) {
      const std::size_t origin = (f - base) % base;
      out.facility_points_.push_back(facility_points_[origin]);
      out.facility_ids_.push_back(facility_ids_[origin] + "#" + std::to_string(f - base + 1));
      out.facility_origin_.push_back(origin);
    }
    if (out.num_facilities() != base) out.scc_ = false;
    out.cache_distances();
    return out;
  }

 private:
  void cache_distances() {
    const std::size_t nf = facility_points_.size(), nc = client_points_.size();
    fc_.clear();
    if (nf * nc > (std::size_t{1} << 24)) return;
    fc_.resize(nf * nc);
    for (std::size_t j = 0; j < nc; ++j)
      for (std::size_t f = 0; f < nf; ++f) fc_[j * nf + f] = metric_(facility_points_[f], client_points_[j]);
  }

  Metric metric_;
  std::vector<std::size_t> facility_points_;
  std::vector<std::size_t> client_points_;
  std::vector<std::string> facility_ids_;
  std::vector<std::string> client_ids_;
  std::vector<FacilityIndex> facility_origin_;
  std::vector<double> fc_;  // client-major |C| x |F| distance cache
  int k_ = 1;
  bool scc_ = false;
};

/// Chance demand: client j wants Pr[d(j,S) <= r_j] >= p_j.
struct DemandChance {
  std::vector<double> p;
  std::vector<double> r;

  static DemandChance homogeneous(std::size_t n, double p, double r) {
    return {std::vector<double>(n, p), std::vector<double>(n, r)};
  }

  void validate(const Instance& instance) const {
    detail::require(p.size() == instance.num_clients() && r.size() == instance.num_clients(),
                    "chance demand: one (p, r) pair per client required");
    for (std::size_t j = 0; j < p.size(); ++j) {
      detail::require(p[j] >= 0.0 && p[j] <= 1.0, "chance demand: p must lie in [0,1]");
      detail::require(r[j] >= 0.0 && std::isfinite(r[j]), "chance demand: r must be nonnegative");
    }
  }
};

/// Expected-distance demand: client j wants E[d(j,S)] <= t_j.
struct DemandExpected {
  std::vector<double> t;

  void validate(const Instance& instance) const {
    detail::require(t.size() == instance.num_clients(), "expected demand: one t per client required");
    for (double v : t) detail::require(v >= 0.0 && std::isfinite(v), "expected demand: t must be nonnegative");
  }
};

/// A set of open facilities, kept sorted and duplicate-free.
struct SolutionSet {
  std::vector<FacilityIndex> open;

  SolutionSet() = default;
  explicit SolutionSet(std::vector<FacilityIndex> facilities) : open(std::move(facilities)) { normalize(); }

  void normalize() {
    std::sort(open.begin(), open.end());
    open.erase(std::unique(open.begin(), open.end()), open.end());
  }
  std::size_t size() const { return open.size(); }
  bool empty() const { return open.empty(); }
  bool contains(FacilityIndex f) const { return std::binary_search(open.begin(), open.end(), f); }
  friend bool operator==(const SolutionSet&, const SolutionSet&) = default;
  friend auto operator<=>(const SolutionSet& a, const SolutionSet& b) { return a.open <=> b.open; }
};

inline void check_client(const Instance& instance, ClientIndex j) {
  if (j >= instance.num_clients()) throw input_error("unknown client index " + std::to_string(j));
}

/// B(j, r) = { i in F : d(i,j) <= r }, exact comparison on stored doubles.
inline std::vector<FacilityIndex> ball(const Instance& instance, ClientIndex j, double r) {
  check_client(instance, j);
  detail::require(r >= 0.0, "ball: radius must be nonnegative");
  std::vector<FacilityIndex> out;
  for (FacilityIndex f = 0; f < instance.num_facilities(); ++f)
    if (instance.dist(f, j) <= r) out.push_back(f);
  return out;
}

struct Nearest {
  FacilityIndex facility;
  double distance;
};

/// V_j and theta(j): the closest facility, least index on ties. In the SCC setting this
/// is j itself at distance 0.
inline Nearest nearest(const Instance& instance, ClientIndex j) {
  check_client(instance, j);
  if (instance.scc()) return {j, 0.0};
  Nearest best{0, instance.dist(0, j)};
  for (FacilityIndex f = 1; f < instance.num_facilities(); ++f) {
    const double d = instance.dist(f, j);
    if (d < best.distance) best = {f, d};
  }
  return best;
}

/// The facility of S that j is matched to: closest, least index on ties.
inline Nearest matched_facility(const Instance& instance, ClientIndex j, const SolutionSet& s) {
  check_client(instance, j);
  if (s.empty()) throw input_error("service distance: solution set is empty");
  Nearest best{s.open.front(), instance.dist(s.open.front(), j)};
  for (std::size_t idx = 1; idx < s.open.size(); ++idx) {
    const double d = instance.dist(s.open[idx], j);
    if (d < best.distance) best = {s.open[idx], d};
  }
  return best;
}

/// d(j, S) = min over i in S of d(i, j).
inline double service_distance(const Instance& instance, ClientIndex j, const SolutionSet& s) {
  return matched_facility(instance, j, s).distance;
}

/// d(j, S) for every client at once (returns +inf for every client when S is empty).
inline std::vector<double> service_distances(const Instance& instance, const SolutionSet& s) {
  std::vector<double> out(instance.num_clients(), std::numeric_limits<double>::infinity());
  for (ClientIndex j = 0; j < instance.num_clients(); ++j)
    for (FacilityIndex f : s.open) out[j] = std::min(out[j], instance.dist(f, j));
  return out;
}

/// theta(j) for all clients.
inline std::vector<double> nearest_distances(const Instance& instance) {
  std::vector<double> out(instance.num_clients());
  for (ClientIndex j = 0; j < instance.num_clients(); ++j) out[j] = nearest(instance, j).distance;
  return out;
}

}  // namespace stoclot
