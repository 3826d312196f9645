#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stoclot {

/// Malformed or out-of-contract input (unknown ids, bad ranges, violated preconditions).
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The demand vector cannot be met by any k-lottery. Carries the numeric evidence
/// (phase-1 objective of the LP, or a potential-function excess).
class infeasible_error : public std::runtime_error {
 public:
  infeasible_error(const std::string& what, double certificate)
      : std::runtime_error(what), certificate_(certificate) {}

  double certificate() const noexcept { return certificate_; }

 private:
  double certificate_;
};

/// A configured cap (iterations, frontier size, retries) was exhausted.
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside the simplex solver.
class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant or a hard per-sample guarantee was violated. Always a bug
/// signal (or an intentionally faulty sampler under test).
class invariant_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw input_error(message);
}

inline void ensure(bool condition, const std::string& message) {
  if (!condition) throw invariant_error(message);
}

}  // namespace detail
}  // namespace stoclot
