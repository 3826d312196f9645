#pragma once

#include <cstdint>
#include <vector>

#include "stoclot/stoclot.hpp"

namespace stoclot::testing {

/// Dense instance from a row-major facility-by-client table. Facilities and clients
/// become distinct points; point-to-point distances go through the bipartite
/// shortest-path closure so the metric is valid.
inline Instance bipartite(const std::vector<std::vector<double>>& fc, int k) {
  const std::size_t nf = fc.size(), nc = fc.front().size(), n = nf + nc;
  std::vector<double> d(n * n, 1e18);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t c = 0; c < nc; ++c) d[f * n + nf + c] = d[(nf + c) * n + f] = fc[f][c];
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) d[a * n + b] = std::min(d[a * n + b], d[a * n + m] + d[m * n + b]);
  std::vector<std::size_t> fp(nf), cp(nc);
  for (std::size_t f = 0; f < nf; ++f) fp[f] = f;
  for (std::size_t c = 0; c < nc; ++c) cp[c] = nf + c;
  return Instance(Metric::dense(n, std::move(d)), fp, cp, k, false);
}

inline Instance uniform_gadget(std::size_t n, int k) {
  GenParams p;
  p.kind = InstanceKind::uniform_gadget;
  p.n = n;
  p.k = k;
  return gen_instance(p, 0);
}

inline Instance random_scc(std::size_t n, int k, std::uint64_t seed, InstanceKind kind = InstanceKind::euclidean) {
  GenParams p;
  p.kind = kind;
  p.n = n;
  p.k = k;
  return gen_instance(p, seed);
}

inline Instance random_split(std::size_t nf, std::size_t nc, int k, std::uint64_t seed,
                             InstanceKind kind = InstanceKind::euclidean) {
  GenParams p;
  p.kind = kind;
  p.n = nf + nc;
  p.facilities = nf;
  p.k = k;
  p.scc = false;
  return gen_instance(p, seed);
}

/// Empirical frequency standard: Hoeffding 99% radius for N Bernoulli draws.
inline double radius99(std::size_t n) { return hoeffding_radius(n, 0.01, 1.0); }

}  // namespace stoclot::testing
