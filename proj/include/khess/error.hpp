#pragma once

#include <stdexcept>
#include <string>

namespace khess {

/// Malformed input: non-Hermitian matrix, bad config value, shape mismatch.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Request exceeds the size the brute-force oracles are allowed to run at.
struct OracleLimitError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Quadrature rule fails to reproduce a closed-form integral.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A field leaves the closure of the positive cone where the caller required it.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

inline void require_range(bool ok, const std::string& what) {
  if (!ok) throw std::out_of_range(what);
}

}  // namespace detail
}  // namespace khess
