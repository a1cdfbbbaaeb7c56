#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace effectop {

using Real = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

inline constexpr Real kInf = std::numeric_limits<Real>::infinity();

// Graph-membership tolerances: closed-form kinds vs iteratively computed points.
inline constexpr Real kGraphTolClosed = 1e-10;
inline constexpr Real kGraphTolIterative = 1e-8;

// Default tolerance below which a representation gap counts as "on the graph".
inline constexpr Real kRecoverGapTol = 1e-8;

/// Thrown when a user-supplied representative function dips below the duality
/// pairing by more than rounding allows (it is then not in class F).
class ClassFViolation : public std::runtime_error {
 public:
  explicit ClassFViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an inner iterative solve fails to reach its tolerance.
class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

inline bool nearly_equal(Real a, Real b, Real tol) { return std::abs(a - b) <= tol; }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace effectop
