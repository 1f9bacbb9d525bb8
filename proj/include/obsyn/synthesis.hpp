#ifndef OBSYN_SYNTHESIS_HPP
#define OBSYN_SYNTHESIS_HPP

#include <optional>
#include <vector>

#include "obsyn/optimizer.hpp"

namespace obsyn {

struct SegmentPlan {
  std::vector<double> boundaries;  // 0 = t_0 < t_1 < ... < t_f

  static SegmentPlan uniform(double t_f, double segment_length);
  void validate() const;
  std::size_t segments() const { return boundaries.size() - 1; }
};

/// Solves A'P + PA + Q = 0 for Hurwitz A (Kronecker form; small n).
Mat solve_lyapunov(const Mat& A, const Mat& Q);

/// Infinite-horizon LQR gain K = -R^{-1} B' P via Newton-Kleinman
/// iteration on the algebraic Riccati equation. When no stabilizing K0 is
/// supplied and A is not Hurwitz, a Bass-type initialization is used.
GainMatrix lqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                    std::optional<Mat> K0 = std::nullopt);

struct SegmentSummary {
  double J = 0.0;
  int iterations = 0;
  TerminationStatus status = TerminationStatus::IterationCapped;
  double zeta = 0.0;
  double l1_integral = 0.0;
  double l2_integral = 0.0;
  double l2_unsat_integral = 0.0;
  double terminal = 0.0;
  std::vector<IterationRecord> trace;
};

struct SynthesisResult {
  std::vector<GainMatrix> gains;
  Trajectory trajectory;  // closed-loop nominal trajectory with controls/outputs
  std::vector<SegmentSummary> per_segment;
  std::vector<int> segment_of_sample;  // segment index per trajectory sample
  std::vector<double> l1_samples, l2_samples, l2_unsat_samples;
  double total_cost = 0.0;          // int (l1 - l2) dt + L(x(t_f))
  double total_l1_integral = 0.0;
  double total_l2_integral = 0.0;
  double total_l2_unsat = 0.0;
};

/// Sequential piecewise synthesis: each segment re-seeds the perturbed
/// states from the current nominal state, picks zeta by the spec's
/// policy, and warm-starts the gain from the previous segment's optimum
/// (the LQR gain of the linearization at x0 for the first segment).
SynthesisResult synthesize(const ControlAffineSystem& sys, const CostSpec& spec,
                           const SegmentPlan& plan, const OptimizerConfig& opt_cfg,
                           const IntegratorConfig& int_cfg, const Vec& x0,
                           std::optional<Mat> K0 = std::nullopt);

/// Evaluates a fixed gain schedule with the same bookkeeping as
/// synthesize (no optimization); used for baselines.
SynthesisResult evaluate_piecewise(const ControlAffineSystem& sys, const CostSpec& spec,
                                   const SegmentPlan& plan, const IntegratorConfig& int_cfg,
                                   const Vec& x0, const Mat& K);

/// Closed-loop simulation switching gains at their boundaries.
Trajectory simulate_piecewise(const ControlAffineSystem& sys,
                              const std::vector<GainMatrix>& gains, const Vec& x0,
                              const IntegratorConfig& cfg);

struct LyapunovTrace {
  std::vector<double> times;
  std::vector<double> values;
  bool nonincreasing = false;  // within every segment, tolerance 1e-9 per step
};

/// Samples V(t) = int_t^{t+dT} (l1 - l2 + b) + Lcal(t+dT) + L(x(t+dT))
/// with b(t) = zeta e^{-t}, Lcal(t) = zeta e^{-t} and dT = one segment
/// length, using the synthesis samples; only t with t+dT <= t_f are
/// representable.
LyapunovTrace lyapunov_trace(const SynthesisResult& result, const CostSpec& spec,
                             const SegmentPlan& plan);

/// Largest per-segment empirical decay rate for which the trajectory
/// stays above e^{-beta (t - t_j)} ||x(t_j)||_Q.
double decay_rate_estimate(const Trajectory& traj, const Mat& Q,
                           const std::vector<double>& boundaries);

}  // namespace obsyn

#endif
