#ifndef OBSYN_GRAMIAN_HPP
#define OBSYN_GRAMIAN_HPP

#include <functional>
#include <vector>

#include "obsyn/model.hpp"
#include "obsyn/ode.hpp"

namespace obsyn {

/// State-feedback or open-loop policy u(t, x).
using ControlLaw = std::function<Vec(double, const Vec&)>;

ControlLaw control_from_gain(const Mat& K);
ControlLaw control_from_signal(std::function<Vec(double)> u_of_t);
/// Switches gains at segment boundaries; gains must tile the horizon.
ControlLaw control_from_piecewise(std::vector<GainMatrix> gains);

struct GramianResult {
  Mat W;
  double epsilon = 0.0;
  double horizon = 0.0;
  double trace_index = 0.0;

  // Read-only diagnostics; only the trace participates in the cost.
  double min_eigenvalue() const;
  double determinant() const;
  Vec singular_values() const;
};

/// x0 +/- eps e_i in the fixed order (+1, -1, +2, -2, ...).
std::vector<Vec> perturbed_initial_conditions(const Vec& x0, double eps);

/// Empirical observability Gramian: every perturbed trajectory evolves
/// under the same policy, output differences are accumulated by the
/// trapezoid rule on the integration grid, and the result is symmetrized.
GramianResult empirical_gramian(const ControlAffineSystem& sys, const ControlLaw& policy,
                                const Vec& x0, double eps, double t_f,
                                const IntegratorConfig& cfg);

/// trace(W), recomputed from the integrand; equals the matrix trace.
double trace_index(const GramianResult& g);

/// Analytic linear observability Gramian  int_0^tf e^{A't} C'C e^{At} dt
/// by composite Simpson quadrature of the matrix exponential. Test oracle.
Mat linear_gramian(const Mat& A, const Mat& C, double t_f);

/// Determinant of the first two rows of the bearing-output observability
/// matrix for the planar holonomic system: (1/x1^3)(u2 - (x2/x1) u1).
double bearing_obs_det(const Vec& x, const Vec& u);

}  // namespace obsyn

#endif
