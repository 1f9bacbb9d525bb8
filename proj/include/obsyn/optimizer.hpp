#ifndef OBSYN_OPTIMIZER_HPP
#define OBSYN_OPTIMIZER_HPP

#include <vector>

#include "obsyn/sensitivity.hpp"

namespace obsyn {

struct OptimizerConfig {
  double mu0 = 0.1;       // initial step size
  double grad_tol = 1e-4; // termination tolerance on ||g||
  int max_iters = 200;
  double psd_tol = 1e-9;

  void validate() const;
};

enum class TerminationStatus { Converged, IterationCapped };

struct IterationRecord {
  Mat K;            // gain the gradient was evaluated at
  double J = 0.0;
  double grad_norm = 0.0;
  double mu = 0.0;  // step applied from this iterate
  bool cvx_check = true;
  double l1_integral = 0.0;
  double l2_integral = 0.0;
  double l2_unsat_integral = 0.0;
  double terminal = 0.0;
};

struct SegmentOptResult {
  GainMatrix gain;             // best-so-far gain
  double J = 0.0;              // cost at the returned gain
  TerminationStatus status = TerminationStatus::IterationCapped;
  int iterations = 0;
  double zeta = 0.0;
  std::vector<IterationRecord> trace;
};

/// Diminishing step-size schedule mu_i = mu0 / i.
double step_size(int i, double mu0);

/// Elementwise secant difference-quotient matrix, symmetrized. Entries
/// whose gain displacement is below 1e-12 in magnitude are set to 0.
Mat secant_hessian(const Vec& g_curr, const Vec& g_prev, const Vec& k_next,
                   const Vec& k_curr);

/// True iff the minimum eigenvalue of the symmetrized matrix is >= -psd_tol.
bool psd_check(const Mat& H, double psd_tol);

/// Gradient descent over one segment's gain: co-integrates the augmented
/// state and its gain sensitivity, updates K every iteration, and gates
/// step-size advancement and termination on the secant convexity check.
/// A step whose integration diverges is retried with the step halved.
SegmentOptResult optimize_segment(const ControlAffineSystem& sys, const CostSpec& spec,
                                  double t0, double t1, const AugmentedState& z0,
                                  const Mat& K_init, const OptimizerConfig& opt_cfg,
                                  const IntegratorConfig& int_cfg);

/// Convex sandwich around the non-convex segment cost: the looser bound
/// subtracts the constant zeta over the segment, the refined one the
/// integrable envelope zeta e^{-t}.
struct CostBounds {
  double lower_paper = 0.0;    // int (l1 - zeta) dt + L
  double lower_refined = 0.0;  // int (l1 - zeta e^{-t}) dt + L
  double upper = 0.0;          // int l1 dt + L
  double J = 0.0;
};

CostBounds cost_bounds(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                       double t0, double t1, const AugmentedState& z0,
                       const IntegratorConfig& cfg);

}  // namespace obsyn

#endif
