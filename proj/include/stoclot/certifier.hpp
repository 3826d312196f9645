#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/lottery.hpp"

namespace stoclot {

/// R-hat(m, u_1..u_L) for one (q_f, q_p) pair, evaluated literally: the alpha and beta
/// tail products, the m < M / m = M split and the u_L vs q_p split.
inline double rhat(int m, std::span<const double> u, double qf, double qp, int M = 10) {
  detail::require(M >= 1 && m >= 1 && m <= M, "rhat: need 1 <= m <= M");
  detail::require(!u.empty(), "rhat: u must be nonempty");
  detail::require(qf >= 0.0 && qf <= 1.0 && qp >= 0.0 && qp <= 1.0, "rhat: q values must lie in [0,1]");
  for (std::size_t i = 0; i < u.size(); ++i) {
    detail::require(u[i] >= 0.0 && u[i] <= 1.0, "rhat: u entries must lie in [0,1]");
    if (i + 1 < u.size()) detail::require(u[i] >= u[i + 1], "rhat: u must be nonincreasing");
  }
  const double gp = 1.0 - qp, gf = 1.0 - qf;
  const std::size_t L = u.size();
  double alpha = std::exp(-gp * u[L - 1]);
  double beta = u[L - 1] <= qp ? 1.0 - u[L - 1] : std::exp(-(u[L - 1] - qp) / (1.0 - qp)) * (1.0 - qp);
  for (std::size_t l = 0; l + 1 < L; ++l) {
    alpha *= 1.0 - gp * (u[l] - u[l + 1]);
    beta *= (1.0 - u[l]) + gp * u[l + 1];
  }
  const double ubar = 1.0 - u[0];
  const double md = static_cast<double>(m);
  if (m < M) return std::pow(1.0 - gf * ubar / md, md) * alpha + std::pow(gf * (1.0 - ubar / md), md) * beta;
  return std::exp(-gf * ubar) * alpha + std::pow(gf, M) * std::exp(-ubar) * beta;
}

/// E_Q R-hat over a QDistribution.
inline double expected_rhat(int m, std::span<const double> u, const QDistribution& qdist, int M = 10) {
  double out = 0.0;
  for (const auto& pt : qdist.support) out += pt.prob * rhat(m, u, pt.qf, pt.qp, M);
  return out;
}

struct CertifierOptions {
  int L = 7;
  int M = 10;
  double eps_grid = 1.0 / 4096.0;
  QDistribution qdist = QDistribution::reference();
  bool sweep_p = false;  // optimize the weight of the q_p = 0 point over [p_lo, p_hi]
  double p_lo = 0.0;
  double p_hi = 1.0;
  bool pareto = true;
  bool branch_and_bound = true;
  std::size_t beam_width = 16;
  double potential_grid = 1.0 / 512.0;  // cell width of the coarse value-to-go table
  int direction_grid = 32;              // subdivisions of the weight simplex in that table
  std::size_t frontier_cap = 100'000'000;
};

struct BoundCertificate {
  CertifierOptions options;
  double max_value = 0.0;  // upper bound on max E_Q R-hat over the continuous domain
  double bound = 0.0;      // 1 + max_value + slack
  double best_p = std::numeric_limits<double>::quiet_NaN();
  std::size_t peak_tuples = 0;
  double wall_seconds = 0.0;
};

namespace detail {

constexpr double kCertifierSlack = 1e-9;

struct Stat3 {
  double a1, a2, a3;
};

/// Drops every tuple weakly dominated by another (componentwise >=); keeps the first of
/// exact duplicates.
inline void pareto_filter(std::vector<Stat3>& v) {
  if (v.size() < 2) return;
  std::sort(v.begin(), v.end(), [](const Stat3& x, const Stat3& y) {
    if (x.a1 != y.a1) return x.a1 > y.a1;
    if (x.a2 != y.a2) return x.a2 > y.a2;
    return x.a3 > y.a3;
  });
  // Staircase over (a2, a3) of tuples seen so far: a3 strictly decreasing in a2.
  std::map<double, double> stair;
  std::size_t keep = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Stat3 t = v[i];
    auto it = stair.lower_bound(t.a2);
    if (it != stair.end() && it->second >= t.a3) continue;
    auto pos = stair.insert_or_assign(t.a2, t.a3).first;
    while (pos != stair.begin()) {
      auto prev = std::prev(pos);
      if (prev->second <= t.a3) stair.erase(prev);
      else break;
    }
    v[keep++] = t;
  }
  v.resize(keep);
}

class PartialBoundDp;

/// Value-to-go bounds h(C, s, w) = max over completions of w . (final coefficients),
/// tabulated at the vertices of a triangulated weight simplex and interpolated inside
/// each triangle. h is convex in w, so interpolation over-estimates it; recursing on
/// interpolated values keeps every entry an upper bound.
class SupportTable {
 public:
  SupportTable(const PartialBoundDp& dp, int L, int K);

  double eval(int c, int s, const Stat3& x) const {
    const double sigma = x.a1 + x.a2 + x.a3;
    if (!(sigma > 0.0)) return 0.0;
    return sigma * interp(at(s, c), x.a1 / sigma, x.a2 / sigma);
  }

 private:
  const double* at(int s, int c) const {
    return h_.data() + (static_cast<std::size_t>(s) * n_ + static_cast<std::size_t>(c)) * V_;
  }
  std::size_t vertex(int i, int j) const {
    return static_cast<std::size_t>(i) * (K_ + 1) - static_cast<std::size_t>(i) * (i - 1) / 2 + j;
  }
  double interp(const double* h, double w1, double w2) const {
    const double x = w1 * K_, y = w2 * K_;
    const int i = std::min(static_cast<int>(x), K_ - 1);
    const int j = std::min(static_cast<int>(y), K_ - 1 - i);
    const double fx = x - i, fy = y - j;
    if (fx + fy <= 1.0)
      return (1.0 - fx - fy) * h[vertex(i, j)] + fx * h[vertex(i + 1, j)] + fy * h[vertex(i, j + 1)];
    const double gx = 1.0 - fx, gy = 1.0 - fy;
    return (1.0 - gx - gy) * h[vertex(i + 1, j + 1)] + gx * h[vertex(i, j + 1)] + gy * h[vertex(i + 1, j)];
  }

  int n_ = 0, K_ = 0;
  std::size_t V_ = 0;
  std::vector<double> h_;
};

/// Cell-endpoint bounding of E_Q R-hat. Cells are [c eps, (c+1) eps], c = 0..N-1.
class PartialBoundDp {
 public:
  explicit PartialBoundDp(const CertifierOptions& opt) : opt_(opt) {
    const double inv = 1.0 / opt.eps_grid;
    detail::require(opt.L >= 1 && opt.M >= 1, "certify: L and M must be positive");
    detail::require(opt.eps_grid > 0.0 && opt.eps_grid <= 0.5 && std::abs(inv - std::round(inv)) < 1e-9 &&
                        std::exp2(std::round(std::log2(inv))) == std::round(inv),
                    "certify: eps_grid must be a power of two no larger than 1/2");
    opt.qdist.validate();
    n_ = static_cast<int>(std::round(inv));
    eps_ = opt.eps_grid;
    std::size_t partial_points = 0;
    for (const auto& pt : opt.qdist.support)
      if (pt.qp > 0.0) {
        ++partial_points;
        qp_ = pt.qp;
      }
    detail::require(partial_points <= 1, "certify: at most one support point may have q_p > 0");
    detail::require(qp_ < 1.0, "certify: q_p must be below 1");
    gp_ = 1.0 - qp_;
    if (opt.sweep_p) {
      detail::require(opt.qdist.support.size() == 2 && partial_points == 1,
                      "certify: p-sweep needs one q_p = 0 point and one q_p > 0 point");
      detail::require(0.0 <= opt.p_lo && opt.p_lo <= opt.p_hi && opt.p_hi <= 1.0, "certify: bad p range");
    }
    build_heads();
  }

  int cells() const { return n_; }

  Stat3 tail(int c) const {
    const double u = c * eps_;
    const double t2 = u <= qp_ ? 1.0 - u : std::exp(-(u - qp_) / (1.0 - qp_)) * (1.0 - qp_);
    return {std::exp(-gp_ * u), t2, std::exp(-u)};
  }

  /// Upper bounds of the three per-step factors for u_l in cell ca above u_{l+1} in cb.
  Stat3 step(int ca, int cb) const {
    const double gap = std::max(0, ca - cb - 1) * eps_;
    const double f2 = ca == cb ? 1.0 - qp_ * ca * eps_ : 1.0 - ca * eps_ + gp_ * (cb + 1) * eps_;
    return {1.0 - gp_ * gap, std::min(1.0, f2), 1.0 - gap};
  }

  /// Per-(c1, m) coefficients of (a1, a2, a3); split by q_p = 0 and q_p > 0 points.
  struct Head {
    double k1, k2, k3;     // weighted by the QDistribution
    double v0, v1a, v1b;   // unweighted: q_p = 0 point (F+G), q_p > 0 point F and G
  };

  const Head& head(int c1, int m) const { return heads_[static_cast<std::size_t>(c1) * opt_.M + (m - 1)]; }

  double value(int c1, const Stat3& t) const {
    double best = 0.0;
    for (int m = 1; m <= opt_.M; ++m) {
      const Head& h = head(c1, m);
      best = std::max(best, h.k3 * t.a3 + h.k1 * t.a1 + h.k2 * t.a2);
    }
    return best;
  }

  /// Upper bound on the final value reachable from tuple t in cell c with s steps left.
  double potential(int c, int s, const Stat3& t) const {
    if (s == 0) return value(c, t);
    return table_->eval(c >> shift_, s, t);
  }

  void attach_table(const PartialBoundDp& coarse, int shift);

 private:
  void build_heads() {
    heads_.assign(static_cast<std::size_t>(n_) * opt_.M, Head{});
    for (int c = 0; c < n_; ++c) {
      const double ubar = 1.0 - std::min(1.0, (c + 1) * eps_);
      for (int m = 1; m <= opt_.M; ++m) {
        Head& h = heads_[static_cast<std::size_t>(c) * opt_.M + (m - 1)];
        for (const auto& pt : opt_.qdist.support) {
          const double gf = 1.0 - pt.qf, md = m;
          double F, G;
          if (m < opt_.M) {
            F = std::pow(1.0 - gf * ubar / md, md);
            G = std::pow(gf * (1.0 - ubar / md), md);
          } else {
            F = std::exp(-gf * ubar);
            G = std::pow(gf, opt_.M) * std::exp(-ubar);
          }
          if (pt.qp > 0.0) {
            h.k1 += pt.prob * F;
            h.k2 += pt.prob * G;
            h.v1a = F;
            h.v1b = G;
          } else {
            h.k3 += pt.prob * (F + G);
            h.v0 = F + G;
          }
        }
      }
    }
  }

  CertifierOptions opt_;
  int n_ = 0;
  double eps_ = 0.0;
  double qp_ = 0.0;
  double gp_ = 1.0;
  std::vector<Head> heads_;
  std::shared_ptr<const SupportTable> table_;
  int shift_ = 0;
};

inline SupportTable::SupportTable(const PartialBoundDp& dp, int L, int K) : n_(dp.cells()), K_(K) {
  detail::require(K >= 1, "certify: direction_grid must be positive");
  V_ = static_cast<std::size_t>(K + 1) * (K + 2) / 2;
  h_.assign(static_cast<std::size_t>(L) * n_ * V_, 0.0);
  std::vector<Stat3> dirs(V_);
  for (int i = 0; i <= K; ++i)
    for (int j = 0; i + j <= K; ++j)
      dirs[vertex(i, j)] = {double(i) / K, double(j) / K, double(K - i - j) / K};
  for (int c = 0; c < n_; ++c) {
    double* row = h_.data() + static_cast<std::size_t>(c) * V_;
    for (std::size_t v = 0; v < V_; ++v) row[v] = dp.value(c, dirs[v]);
  }
  for (int s = 1; s < L; ++s)
    for (int cb = 0; cb < n_; ++cb) {
      double* row = h_.data() + (static_cast<std::size_t>(s) * n_ + cb) * V_;
      for (int ca = cb; ca < n_; ++ca) {
        const Stat3 f = dp.step(ca, cb);
        const double* prev = at(s - 1, ca);
        for (std::size_t v = 0; v < V_; ++v) {
          const Stat3 x{dirs[v].a1 * f.a1, dirs[v].a2 * f.a2, dirs[v].a3 * f.a3};
          const double sigma = x.a1 + x.a2 + x.a3;
          if (!(sigma > 0.0)) continue;
          row[v] = std::max(row[v], sigma * interp(prev, x.a1 / sigma, x.a2 / sigma));
        }
      }
    }
}

/// Coarse cells dominate the fine cells they contain factor by factor, so the coarse
/// table bounds fine value-to-go as well.
inline void PartialBoundDp::attach_table(const PartialBoundDp& coarse, int shift) {
  table_ = std::make_shared<const SupportTable>(coarse, opt_.L, opt_.direction_grid);
  shift_ = shift;
}

/// One pass of the level DP. `incumbent` prunes tuples whose potential falls short;
/// `beam` > 0 keeps only the best tuples per bucket. Returns the frontier over u_1
/// cells and records the peak tuple count.
inline std::vector<std::vector<Stat3>> run_levels(const PartialBoundDp& dp, const CertifierOptions& opt,
                                                  double incumbent, std::size_t beam, std::size_t& peak) {
  const int n = dp.cells();
  const double cut = incumbent * (1.0 - 1e-12);
  std::vector<std::vector<Stat3>> frontier(n);
  auto trim = [&](std::vector<Stat3>& bucket, int c, int s) {
    if (opt.pareto) pareto_filter(bucket);
    if (beam > 0 && bucket.size() > beam) {
      std::partial_sort(bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(beam), bucket.end(),
                        [&](const Stat3& x, const Stat3& y) { return dp.potential(c, s, x) > dp.potential(c, s, y); });
      bucket.resize(beam);
    }
  };
  std::size_t total = 0;
  for (int c = 0; c < n; ++c) {
    const Stat3 t = dp.tail(c);
    if (incumbent > 0.0 && dp.potential(c, opt.L - 1, t) < cut) continue;
    frontier[c].push_back(t);
    ++total;
  }
  peak = std::max(peak, total);
  // Buckets are built in one scratch vector and copied out at their trimmed size, so
  // the transient pre-filter peak is not retained as capacity by every bucket.
  std::vector<Stat3> bucket;
  for (int s = opt.L - 1; s >= 1; --s) {
    std::vector<std::vector<Stat3>> next(n);
    total = 0;
    for (int ca = 0; ca < n; ++ca) {
      bucket.clear();
      std::size_t retrim = std::size_t{1} << 16;
      for (int cb = 0; cb <= ca; ++cb) {
        if (frontier[cb].empty()) continue;
        const Stat3 f = dp.step(ca, cb);
        for (const auto& t : frontier[cb]) {
          const Stat3 nt{t.a1 * f.a1, t.a2 * f.a2, t.a3 * f.a3};
          if (incumbent > 0.0 && dp.potential(ca, s - 1, nt) < cut) continue;
          bucket.push_back(nt);
        }
        // Filtering early bounds memory; dominance is transitive, so the result is unchanged.
        if (opt.pareto && bucket.size() > retrim) {
          pareto_filter(bucket);
          retrim = std::max(retrim, 2 * bucket.size());
        }
        if (bucket.size() > opt.frontier_cap)
          throw resource_error("certify: frontier exceeded " + std::to_string(opt.frontier_cap) +
                               " tuples; use a coarser eps_grid");
      }
      trim(bucket, ca, s - 1);
      next[ca].assign(bucket.begin(), bucket.end());
      total += bucket.size();
      if (total > opt.frontier_cap)
        throw resource_error("certify: frontier exceeded " + std::to_string(opt.frontier_cap) +
                             " tuples; use a coarser eps_grid");
    }
    frontier = std::move(next);
    peak = std::max(peak, total);
  }
  return frontier;
}

inline double frontier_max(const PartialBoundDp& dp, const std::vector<std::vector<Stat3>>& frontier) {
  double best = 0.0;
  for (int c = 0; c < dp.cells(); ++c)
    for (const auto& t : frontier[c]) best = std::max(best, dp.value(c, t));
  return best;
}

}  // namespace detail

/// Upper bound on 1 + max over m <= M and 1 >= u_1 >= ... >= u_L >= 0 of E_Q R-hat.
///
/// u is discretized into cells of width eps_grid and every factor is replaced by its
/// maximum over the cell (or cell pair), so the result bounds the continuous maximum.
/// The DP runs from u_L up to u_1 over (a1, a2, a3) statistics bucketed by the cell of
/// the most recent u, keeping only Pareto-maximal tuples. A beam pass supplies an
/// incumbent for branch-and-bound; pruning never changes the computed maximum.
inline BoundCertificate certify_partial_bound(const CertifierOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  detail::PartialBoundDp dp(options);
  BoundCertificate cert;
  cert.options = options;
  if (!options.sweep_p) {
    double incumbent = 0.0;
    if (options.branch_and_bound) {
      CertifierOptions coarse_opt = options;
      coarse_opt.eps_grid = std::max(options.eps_grid, options.potential_grid);
      const detail::PartialBoundDp coarse(coarse_opt);
      dp.attach_table(coarse, static_cast<int>(std::lround(std::log2(coarse_opt.eps_grid / options.eps_grid))));
      std::size_t ignored = 0;
      incumbent = detail::frontier_max(dp, detail::run_levels(dp, options, 0.0, options.beam_width, ignored));
    }
    const auto frontier = detail::run_levels(dp, options, incumbent, 0, cert.peak_tuples);
    cert.max_value = std::max(incumbent, detail::frontier_max(dp, frontier));
  } else {
    const auto frontier = detail::run_levels(dp, options, 0.0, 0, cert.peak_tuples);
    // Value at weight p: p V0 + (1-p) V1 over all (tuple, m); keep the 2D Pareto set.
    std::vector<std::pair<double, double>> lines;
    for (int c = 0; c < dp.cells(); ++c)
      for (const auto& t : frontier[c])
        for (int m = 1; m <= options.M; ++m) {
          const auto& h = dp.head(c, m);
          lines.emplace_back(h.v0 * t.a3, h.v1a * t.a1 + h.v1b * t.a2);
        }
    std::sort(lines.begin(), lines.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second > y.second;
    });
    std::vector<std::pair<double, double>> hull;
    for (const auto& l : lines)
      if (hull.empty() || l.second > hull.back().second) hull.push_back(l);
    auto envelope = [&](double p) {
      double best = 0.0;
      for (const auto& [v0, v1] : hull) best = std::max(best, p * v0 + (1.0 - p) * v1);
      return best;
    };
    // The envelope is convex in p, so golden-section search finds its minimum.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = options.p_lo, hi = options.p_hi;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = envelope(x1), f2 = envelope(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = envelope(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = envelope(x2);
      }
    }
    cert.best_p = f1 <= f2 ? x1 : x2;
    for (double edge : {options.p_lo, options.p_hi})
      if (envelope(edge) < envelope(cert.best_p)) cert.best_p = edge;
    cert.max_value = envelope(cert.best_p);
  }
  cert.bound = 1.0 + cert.max_value + detail::kCertifierSlack;
  cert.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cert;
}

struct SccCertificate {
  double q = 0.0;
  double grid = 0.0;
  int t_max = 64;
  double bound = 0.0;
  double argmax_s = 0.0;  // lower end of the maximizing cell
  int argmax_t = 0;       // t_max + 1 denotes the analytic tail
  double wall_seconds = 0.0;
};

/// Upper bound on max over s in [0,1] and integer t >= 1 of
/// 1 + e^{s-1} ((1 - (1-q) s/t)^t + (1-q)^t (1 - s/t)^t).
///
/// Each s-cell uses e^{s_hi - 1} and the decreasing factors at s_lo. For t > t_max the
/// bracket is at most e^{-(1-q) s_lo} + (1-q)^{t_max+1} e^{-s_lo}, since (1 - x/t)^t <= e^{-x}.
inline SccCertificate certify_scc_bound(double q = 0.464587, double grid = std::exp2(-18), int t_max = 64) {
  detail::require(q >= 0.0 && q <= 1.0, "certify_scc: q must lie in [0,1]");
  detail::require(grid > 0.0 && grid <= 1.0, "certify_scc: grid must lie in (0,1]");
  detail::require(t_max >= 1, "certify_scc: t_max must be positive");
  const auto start = std::chrono::steady_clock::now();
  SccCertificate out;
  out.q = q;
  out.grid = grid;
  out.t_max = t_max;
  const double g = 1.0 - q;
  const auto cells = static_cast<long>(std::ceil(1.0 / grid - 1e-9));
  std::vector<double> gpow(t_max + 2, 1.0);
  for (int t = 1; t <= t_max + 1; ++t) gpow[t] = gpow[t - 1] * g;
  double best = -1.0;
  for (long c = 0; c < cells; ++c) {
    const double lo = c * grid, hi = std::min(1.0, (c + 1) * grid);
    const double lead = std::exp(hi - 1.0);
    for (int t = 1; t <= t_max + 1; ++t) {
      double bracket;
      if (t <= t_max) {
        const double td = t;
        bracket = std::pow(1.0 - g * lo / td, td) + gpow[t] * std::pow(1.0 - lo / td, td);
      } else {
        bracket = std::exp(-g * lo) + gpow[t_max + 1] * std::exp(-lo);
      }
      const double v = 1.0 + lead * bracket;
      if (v > best) {
        best = v;
        out.argmax_s = lo;
        out.argmax_t = t;
      }
    }
  }
  out.bound = best + detail::kCertifierSlack;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace stoclot
