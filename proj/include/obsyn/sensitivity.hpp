#ifndef OBSYN_SENSITIVITY_HPP
#define OBSYN_SENSITIVITY_HPP

#include <vector>

#include "obsyn/cost.hpp"
#include "obsyn/gramian.hpp"
#include "obsyn/model.hpp"
#include "obsyn/ode.hpp"

namespace obsyn {

/// Nominal state, the 2n perturbed states (ordered +1, -1, +2, -2, ...)
/// and the running-cost accumulator, stacked as one vector of dimension
/// n(2n+1)+1.
struct AugmentedState {
  Vec nominal;
  std::vector<Vec> perturbed;
  double running_cost = 0.0;

  /// Segment-start state: nominal = x_j, perturbed = x_j +/- eps e_i,
  /// running_cost = terminal cost at x_j.
  static AugmentedState seed(const Vec& x_j, double eps, const Mat& Qf);
  static AugmentedState unpack(const Vec& z, int n);
  Vec pack() const;
  int dim() const;
};

/// Time derivative of the augmented state: closed-loop dynamics for the
/// nominal and every perturbed state, and Gamma + Ldot for the last row.
Vec build_H(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
            double zeta, double t, const AugmentedState& z);

/// Per-grid-point samples recorded while integrating one segment.
struct SegmentEval {
  AugmentedState final_state;
  double J = 0.0;
  double l1_integral = 0.0;
  double l2_integral = 0.0;
  double l2_unsat_integral = 0.0;  // e^{-t} * pre-saturation integrand
  double terminal = 0.0;
  double zeta = 0.0;
  std::vector<double> times;
  std::vector<Vec> nominal_states;
  std::vector<double> l1_samples, l2_samples, l2_unsat_samples;
};

/// Integrates the augmented system over [t0, t1]. The state rows advance
/// by RK4; the cost row accumulates Gamma by the trapezoid rule on the
/// same grid, so J coincides exactly with the direct quadrature of the
/// segment cost. zeta is chosen from z0.nominal via the spec's policy.
SegmentEval integrate_augmented(const ControlAffineSystem& sys, const CostSpec& spec,
                                const Mat& K, double t0, double t1,
                                const AugmentedState& z0, const IntegratorConfig& cfg);

/// Continuous sensitivity right-hand side (dH/dxbar) Xbar + dH/dK with
/// Jacobians of H by central finite differences. Gain entries are
/// flattened row-major.
Mat sensitivity_rhs(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                    double zeta, double t, const AugmentedState& z, const Mat& Xbar);

/// Gradient of the discretized segment cost with respect to the gain,
/// flattened row-major. State sensitivities are co-integrated with the
/// states on the same RK4 grid; the cost-row sensitivity mirrors the
/// trapezoid accumulation of integrate_augmented, so this is the exact
/// derivative of the J that integrate_augmented returns.
Vec gradient(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
             double t0, double t1, const AugmentedState& z0, const IntegratorConfig& cfg);

/// Central finite difference of integrate_augmented's J (test oracle).
Vec fd_gradient(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                double t0, double t1, const AugmentedState& z0,
                const IntegratorConfig& cfg, double delta);

}  // namespace obsyn

#endif
