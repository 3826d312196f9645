#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stoclot/error.hpp"

namespace stoclot::lp {

enum class Sense { less_equal, equal, greater_equal };

/// minimize c'x subject to rows, x >= 0.
struct LinearProgram {
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    Sense sense;
    double rhs;
    std::string name;
  };

  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;
  std::vector<std::string> var_names;

  explicit LinearProgram(std::size_t n = 0) : num_vars(n), objective(n, 0.0) {}

  void add_row(std::vector<std::pair<std::size_t, double>> terms, Sense sense, double rhs, std::string name = {}) {
    for (const auto& t : terms) stoclot::detail::require(t.first < num_vars, "lp: row references unknown variable");
    rows.push_back({std::move(terms), sense, rhs, std::move(name)});
  }

  /// max |row(x) - rhs| violation over all rows, and the worst bound violation.
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (double v : x) worst = std::max(worst, -v);
    for (const auto& row : rows) {
      double lhs = 0.0;
      for (const auto& [var, coef] : row.terms) lhs += coef * x[var];
      switch (row.sense) {
        case Sense::less_equal: worst = std::max(worst, lhs - row.rhs); break;
        case Sense::greater_equal: worst = std::max(worst, row.rhs - lhs); break;
        case Sense::equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
      }
    }
    return worst;
  }
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  /// Phase-1 optimum (sum of artificial values). Positive iff the system is infeasible,
  /// in which case it is the infeasibility certificate reported upward.
  double infeasibility = 0.0;
  std::size_t iterations = 0;
};

struct Options {
  std::size_t iteration_cap = 1'000'000;
  double pivot_tol = 1e-9;
  double cost_tol = 1e-9;
  double feasibility_tol = 1e-9;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), a_(rows * (cols + 1), 0.0), obj_(cols + 1, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return a_[i * (n_ + 1) + n_]; }
  double& cost(std::size_t j) { return obj_[j]; }
  double& value() { return obj_[n_]; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  void pivot(std::size_t r, std::size_t c) {
    double* prow = &a_[r * (n_ + 1)];
    const double inv = 1.0 / prow[c];
    nz_.clear();
    for (std::size_t j = 0; j <= n_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nz_.push_back(j);
      }
    }
    prow[c] = 1.0;
    auto eliminate = [&](double* row) {
      const double f = row[c];
      if (f == 0.0) return;
      for (std::size_t j : nz_) row[j] -= f * prow[j];
      row[c] = 0.0;
    };
    for (std::size_t i = 0; i < m_; ++i)
      if (i != r) eliminate(&a_[i * (n_ + 1)]);
    eliminate(obj_.data());
  }

  void drop_row(std::size_t r) {
    a_.erase(a_.begin() + static_cast<std::ptrdiff_t>(r * (n_ + 1)),
             a_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (n_ + 1)));
    --m_;
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<double> obj_;
  std::vector<std::size_t> nz_;
};

// Dantzig pricing (most negative reduced cost) with a switch to Bland's rule after a run of
// degenerate pivots; Bland stays on until the objective moves again, which rules out cycling.
inline Status run_simplex(Tableau& t, std::vector<std::size_t>& basis, const std::vector<char>& allowed,
                          const Options& opt, std::size_t& iterations) {
  constexpr std::size_t kStallLimit = 50;
  std::size_t stalled = 0;
  while (true) {
    if (iterations >= opt.iteration_cap) return Status::iteration_limit;
    const bool bland = stalled >= kStallLimit;
    std::size_t enter = t.cols();
    double most = -opt.cost_tol;
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (!allowed[j] || t.cost(j) >= most) continue;
      enter = j;
      if (bland) break;
      most = t.cost(j);
    }
    if (enter == t.cols()) return Status::optimal;
    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, enter);
      if (a <= opt.pivot_tol) continue;
      const double ratio = std::max(0.0, t.rhs(i)) / a;
      if (leave == t.rows() || ratio < best - 1e-12) {
        best = ratio;
        leave = i;
      } else if (ratio <= best + 1e-12) {
        // Ties: Bland wants the least basic index; Dantzig prefers the larger pivot.
        const bool take = bland ? basis[i] < basis[leave] : a > t.at(leave, enter);
        if (take) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
    }
    if (leave == t.rows()) return Status::unbounded;
    stalled = best * std::abs(t.cost(enter)) <= 1e-12 ? stalled + 1 : 0;
    t.pivot(leave, enter);
    basis[leave] = enter;
    ++iterations;
  }
}

}  // namespace detail

/// Two-phase dense primal simplex; Bland's rule guards against cycling on degenerate stalls.
inline Result solve(const LinearProgram& program, const Options& opt = {}) {
  const std::size_t n = program.num_vars;
  const std::size_t m = program.rows.size();

  // Column layout: structural | slack/surplus (one per inequality row) | artificial.
  std::vector<int> sign(m, 1);
  std::vector<Sense> sense(m);
  std::size_t n_slack = 0, n_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sense[i] = program.rows[i].sense;
    if (program.rows[i].rhs < 0) {
      sign[i] = -1;
      if (sense[i] == Sense::less_equal) sense[i] = Sense::greater_equal;
      else if (sense[i] == Sense::greater_equal) sense[i] = Sense::less_equal;
    }
    if (sense[i] != Sense::equal) ++n_slack;
    if (sense[i] != Sense::less_equal) ++n_art;
  }
  const std::size_t cols = n + n_slack + n_art;
  detail::Tableau t(m, cols);
  std::vector<std::size_t> basis(m);
  std::vector<char> is_art(cols, 0);
  std::size_t next_slack = n, next_art = n + n_slack;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = program.rows[i];
    for (const auto& [var, coef] : row.terms) t.at(i, var) += sign[i] * coef;
    t.rhs(i) = sign[i] * row.rhs;
    if (sense[i] == Sense::less_equal) {
      t.at(i, next_slack) = 1.0;
      basis[i] = next_slack++;
    } else {
      if (sense[i] == Sense::greater_equal) t.at(i, next_slack++) = -1.0;
      t.at(i, next_art) = 1.0;
      is_art[next_art] = 1;
      basis[i] = next_art++;
    }
  }

  Result result;
  std::size_t iterations = 0;

  // Phase 1: minimize the sum of artificials.
  for (std::size_t i = 0; i < m; ++i) {
    if (!is_art[basis[i]]) continue;
    for (std::size_t j = 0; j < cols; ++j)
      if (!is_art[j]) t.cost(j) -= t.at(i, j);
    t.value() -= t.rhs(i);
  }
  std::vector<char> allowed(cols, 1);
  if (n_art > 0) {
    const Status s1 = detail::run_simplex(t, basis, allowed, opt, iterations);
    if (s1 == Status::iteration_limit) {
      result.status = s1;
      result.iterations = iterations;
      return result;
    }
    double scale = 1.0;
    for (const auto& row : program.rows) scale = std::max(scale, std::abs(row.rhs));
    result.infeasibility = std::max(0.0, -t.value());
    if (result.infeasibility > opt.feasibility_tol * scale) {
      result.status = Status::infeasible;
      result.iterations = iterations;
      return result;
    }
    // Drive zero-level artificials out of the basis; rows where that is impossible are
    // linearly dependent and get dropped.
    for (std::size_t i = 0; i < t.rows();) {
      if (!is_art[basis[i]]) {
        ++i;
        continue;
      }
      std::size_t col = cols;
      double best = opt.pivot_tol;
      for (std::size_t j = 0; j < cols; ++j)
        if (!is_art[j] && std::abs(t.at(i, j)) > best) {
          best = std::abs(t.at(i, j));
          col = j;
        }
      if (col == cols) {
        t.drop_row(i);
        basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      t.pivot(i, col);
      basis[i] = col;
      ++i;
    }
    for (std::size_t j = 0; j < cols; ++j) allowed[j] = !is_art[j];
  }

  // Phase 2: reduced costs of the true objective with respect to the current basis.
  for (std::size_t j = 0; j <= cols; ++j) t.cost(j) = 0.0;
  for (std::size_t j = 0; j < n; ++j) t.cost(j) = program.objective[j];
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const std::size_t bv = basis[i];
    const double cb = bv < n ? program.objective[bv] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) t.cost(j) -= cb * t.at(i, j);
    t.value() -= cb * t.rhs(i);
  }
  const Status s2 = detail::run_simplex(t, basis, allowed, opt, iterations);
  result.status = s2;
  result.iterations = iterations;
  result.x.assign(n, 0.0);
  for (std::size_t i = 0; i < t.rows(); ++i)
    if (basis[i] < n) result.x[basis[i]] = std::max(0.0, t.rhs(i));
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += program.objective[j] * result.x[j];
  result.objective = obj;
  return result;
}

/// CPLEX-style LP text, for cross-checking with external solvers.
inline std::string to_lp_format(const LinearProgram& program) {
  std::ostringstream out;
  out << std::setprecision(17);
  auto var = [&](std::size_t v) {
    return v < program.var_names.size() && !program.var_names[v].empty() ? program.var_names[v]
                                                                          : "x" + std::to_string(v);
  };
  auto terms = [&](const auto& list) {
    bool first = true;
    for (const auto& [v, c] : list) {
      if (c == 0.0) continue;
      out << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ")) << std::abs(c) << " " << var(v);
      first = false;
    }
    if (first) out << "0 " << var(0);
  };
  out << "Minimize\n obj: ";
  std::vector<std::pair<std::size_t, double>> obj;
  for (std::size_t j = 0; j < program.num_vars; ++j) obj.emplace_back(j, program.objective[j]);
  terms(obj);
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < program.rows.size(); ++i) {
    const auto& row = program.rows[i];
    out << " " << (row.name.empty() ? "r" + std::to_string(i) : row.name) << ": ";
    terms(row.terms);
    out << (row.sense == Sense::less_equal ? " <= " : row.sense == Sense::equal ? " = " : " >= ") << row.rhs << "\n";
  }
  out << "End\n";
  return out.str();
}

}  // namespace stoclot::lp
