#pragma once

#include <stdexcept>
#include <string>

namespace friable {

// Input violates a documented precondition (bad argument, out of range).
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Exact representation or sieve span would exceed what the kernels support.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loop-iteration budget exhausted before the sum could be evaluated.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative solver or quadrature failed to meet its tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename E = PreconditionError>
inline void require(bool cond, const std::string& what) {
  if (!cond) throw E(what);
}

}  // namespace detail
}  // namespace friable
