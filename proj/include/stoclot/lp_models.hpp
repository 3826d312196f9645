#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stoclot/error.hpp"
#include "stoclot/instance.hpp"
#include "stoclot/simplex.hpp"

namespace stoclot {

/// Fractional facility opening b over the facilities of an instance.
struct FractionalOpening {
  std::vector<double> b;
  int k = 0;

  double mass() const {
    double s = 0.0;
    for (double v : b) s += v;
    return s;
  }
  double mass_of(const std::vector<FacilityIndex>& facilities) const {
    double s = 0.0;
    for (auto f : facilities) s += b[f];
    return s;
  }
};

/// Fractional assignment a_{f,j}, stored client-major.
struct AssignmentFractional {
  std::size_t num_facilities = 0;
  std::vector<double> a;

  double operator()(FacilityIndex f, ClientIndex j) const { return a[j * num_facilities + f]; }
};

struct ChanceLpResult {
  std::optional<FractionalOpening> opening;
  double certificate = 0.0;  // phase-1 infeasibility when no opening exists
  lp::LinearProgram program;

  bool feasible() const { return opening.has_value(); }
};

struct ExpectationLpResult {
  std::optional<FractionalOpening> opening;
  std::optional<AssignmentFractional> assignment;
  double certificate = 0.0;
  lp::LinearProgram program;

  bool feasible() const { return opening.has_value(); }
};

namespace detail {

constexpr double kLpResidualTol = 1e-8;

inline double snap_unit(double v) {
  if (std::abs(v) < 1e-12) return 0.0;
  if (std::abs(v - 1.0) < 1e-12) return 1.0;
  return std::clamp(v, 0.0, 1.0);
}

inline lp::Result run_checked(const lp::LinearProgram& program) {
  lp::Result res = lp::solve(program);
  if (res.status == lp::Status::iteration_limit) throw solver_error("simplex: iteration cap reached");
  if (res.status == lp::Status::unbounded) throw solver_error("simplex: unexpected unbounded program");
  return res;
}

}  // namespace detail

/// Builds { b : b(B(j,r_j)) >= p_j, b(F) = k, 0 <= b <= 1 } with the secondary
/// objective max sum_j p_j b(B(j,r_j)).
inline lp::LinearProgram chance_program(const Instance& instance, const DemandChance& demand) {
  const std::size_t nf = instance.num_facilities();
  lp::LinearProgram program(nf);
  for (std::size_t f = 0; f < nf; ++f) program.var_names.push_back("b_" + std::to_string(f));
  for (ClientIndex j = 0; j < instance.num_clients(); ++j) {
    if (demand.p[j] <= 0.0) continue;
    std::vector<std::pair<std::size_t, double>> terms;
    for (auto f : ball(instance, j, demand.r[j])) {
      terms.emplace_back(f, 1.0);
      program.objective[f] -= demand.p[j];
    }
    program.add_row(std::move(terms), lp::Sense::greater_equal, demand.p[j], "cover_" + std::to_string(j));
  }
  std::vector<std::pair<std::size_t, double>> all;
  for (std::size_t f = 0; f < nf; ++f) all.emplace_back(f, 1.0);
  program.add_row(std::move(all), lp::Sense::equal, static_cast<double>(instance.k()), "budget");
  for (std::size_t f = 0; f < nf; ++f)
    program.add_row({{f, 1.0}}, lp::Sense::less_equal, 1.0, "cap_" + std::to_string(f));
  return program;
}

inline ChanceLpResult solve_chance_lp(const Instance& instance, const DemandChance& demand) {
  demand.validate(instance);
  ChanceLpResult out;
  out.program = chance_program(instance, demand);
  const std::size_t nf = instance.num_facilities();
  const bool vacuous = std::all_of(demand.p.begin(), demand.p.end(), [](double p) { return p <= 0.0; });
  if (vacuous) {
    FractionalOpening canonical{std::vector<double>(nf, 0.0), instance.k()};
    for (int f = 0; f < instance.k(); ++f) canonical.b[static_cast<std::size_t>(f)] = 1.0;
    out.opening = std::move(canonical);
    return out;
  }
  const lp::Result res = detail::run_checked(out.program);
  if (res.status == lp::Status::infeasible) {
    out.certificate = res.infeasibility;
    return out;
  }
  FractionalOpening opening{res.x, instance.k()};
  for (double& v : opening.b) v = detail::snap_unit(v);
  const double violation = out.program.max_violation(opening.b);
  if (violation > detail::kLpResidualTol)
    throw solver_error("chance LP: residual " + std::to_string(violation) + " exceeds tolerance");
  out.opening = std::move(opening);
  return out;
}

/// Variables: b_f (first |F|), then a_{f,j} at |F| + j|F| + f.
inline lp::LinearProgram expectation_program(const Instance& instance, const DemandExpected& demand) {
  const std::size_t nf = instance.num_facilities(), nc = instance.num_clients();
  lp::LinearProgram program(nf + nf * nc);
  auto a_var = [&](std::size_t f, std::size_t j) { return nf + j * nf + f; };
  for (std::size_t f = 0; f < nf; ++f) program.var_names.push_back("b_" + std::to_string(f));
  for (std::size_t j = 0; j < nc; ++j)
    for (std::size_t f = 0; f < nf; ++f)
      program.var_names.push_back("a_" + std::to_string(f) + "_" + std::to_string(j));
  for (std::size_t j = 0; j < nc; ++j) {
    std::vector<std::pair<std::size_t, double>> dist_terms, mass_terms;
    for (std::size_t f = 0; f < nf; ++f) {
      if (instance.dist(f, j) > 0.0) dist_terms.emplace_back(a_var(f, j), instance.dist(f, j));
      mass_terms.emplace_back(a_var(f, j), 1.0);
    }
    program.add_row(std::move(dist_terms), lp::Sense::less_equal, demand.t[j], "dist_" + std::to_string(j));
    program.add_row(std::move(mass_terms), lp::Sense::equal, 1.0, "assign_" + std::to_string(j));
  }
  for (std::size_t j = 0; j < nc; ++j)
    for (std::size_t f = 0; f < nf; ++f)
      program.add_row({{a_var(f, j), 1.0}, {f, -1.0}}, lp::Sense::less_equal, 0.0,
                      "link_" + std::to_string(f) + "_" + std::to_string(j));
  for (std::size_t f = 0; f < nf; ++f)
    program.add_row({{f, 1.0}}, lp::Sense::less_equal, 1.0, "cap_" + std::to_string(f));
  std::vector<std::pair<std::size_t, double>> all;
  for (std::size_t f = 0; f < nf; ++f) all.emplace_back(f, 1.0);
  program.add_row(std::move(all), lp::Sense::less_equal, static_cast<double>(instance.k()), "budget");
  return program;
}

inline ExpectationLpResult solve_expectation_lp(const Instance& instance, const DemandExpected& demand) {
  demand.validate(instance);
  ExpectationLpResult out;
  out.program = expectation_program(instance, demand);
  const lp::Result res = detail::run_checked(out.program);
  if (res.status == lp::Status::infeasible) {
    out.certificate = res.infeasibility;
    return out;
  }
  const std::size_t nf = instance.num_facilities();
  std::vector<double> x = res.x;
  for (double& v : x) v = detail::snap_unit(v);
  const double violation = out.program.max_violation(x);
  if (violation > detail::kLpResidualTol * std::max(1.0, static_cast<double>(instance.k())))
    throw solver_error("expectation LP: residual " + std::to_string(violation) + " exceeds tolerance");
  out.opening = FractionalOpening{std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nf)),
                                  instance.k()};
  out.assignment = AssignmentFractional{nf, std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(nf), x.end())};
  return out;
}

}  // namespace stoclot
