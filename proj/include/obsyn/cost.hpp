#ifndef OBSYN_COST_HPP
#define OBSYN_COST_HPP

#include <vector>

#include "obsyn/common.hpp"

namespace obsyn {

struct ZetaPolicy {
  enum class Kind { Fixed, Decay } kind = Kind::Fixed;
  double value = 1.0;  // the saturation level for Fixed, the decay rate beta for Decay

  static ZetaPolicy fixed(double zeta) { return {Kind::Fixed, zeta}; }
  static ZetaPolicy decay(double beta) { return {Kind::Decay, beta}; }
};

struct CostSpec {
  Mat Q;   // state weight, symmetric positive definite
  Mat R;   // control weight, symmetric positive definite
  Mat Qf;  // terminal weight, symmetric positive semidefinite
  double epsilon = 0.01;
  ZetaPolicy zeta;
  double t_f = 0.0;

  void validate(int n, int p) const;
};

/// Saturation value on one segment.
struct ZetaValue {
  double value = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
};

/// min(x, zeta): clamps the observability reward at zeta.
double sat(double x, double zeta);

/// Clamped one-sided derivative: 1 below the threshold, 0 at/above it.
double sat_derivative(double x, double zeta);

/// x'Qx + u'Ru.
double l1(const Vec& x, const Vec& u, const CostSpec& spec);

/// (1/4eps^2) sum_i ||y^{+i} - y^{-i}||^2 over outputs ordered
/// (+1, -1, +2, -2, ...). The pre-saturation observability integrand.
double unsaturated_obs(const std::vector<Vec>& perturbed_outputs, double eps);

/// e^{-t} * sat_zeta(unsaturated_obs). t is global time.
double l2(double t, const std::vector<Vec>& perturbed_outputs, double zeta, double eps);

/// Saturation level for a segment ending at t_next (global time):
/// Fixed returns the configured level; Decay returns ||x(t_j)||_Q^2 for
/// 0 < beta <= 1/2 and e^{(1-2 beta) t_next} ||x(t_j)||_Q^2 otherwise.
ZetaValue zeta_for_segment(const ZetaPolicy& policy, const Vec& x_tj, const Mat& Q,
                           double t_begin, double t_next);

/// x'Qf x.
double terminal_cost(const Vec& x, const Mat& Qf);

/// Combined integrand x'(K'RK + Q)x - l2(t, ...).
double gamma_integrand(double t, const Vec& x, const std::vector<Vec>& perturbed_outputs,
                       const Mat& K, const CostSpec& spec, double zeta);

}  // namespace obsyn

#endif
