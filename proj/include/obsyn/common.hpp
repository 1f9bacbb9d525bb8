#ifndef OBSYN_COMMON_HPP
#define OBSYN_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace obsyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Wrong array/matrix shape at an API boundary.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Evaluation left the model's admissible region (sensor singularity,
/// log of a non-positive number, division by zero).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Trajectory blew up; `time` is the first grid time at which a
/// non-finite state was produced.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, double t)
      : std::runtime_error(what + " at t=" + std::to_string(t)), time(t) {}
  double time;
};

/// Scenario or configuration rejected before any numerics ran.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver (Riccati, Lyapunov) failed to produce a valid result.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace obsyn

#endif
