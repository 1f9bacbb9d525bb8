#include "obsyn/synthesis.hpp"

#include <cmath>
#include <limits>

namespace obsyn {

SegmentPlan SegmentPlan::uniform(double t_f, double segment_length) {
  if (t_f <= 0.0 || segment_length <= 0.0)
    throw ValidationError("horizon and segment length must be positive");
  SegmentPlan plan;
  double t = 0.0;
  plan.boundaries.push_back(0.0);
  while (t + segment_length < t_f - 1e-9) {
    t += segment_length;
    plan.boundaries.push_back(t);
  }
  plan.boundaries.push_back(t_f);
  plan.validate();
  return plan;
}

void SegmentPlan::validate() const {
  if (boundaries.size() < 2) throw ValidationError("plan needs at least one segment");
  if (boundaries.front() != 0.0) throw ValidationError("plan must start at t = 0");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
    if (!(boundaries[i] < boundaries[i + 1]))
      throw ValidationError("plan boundaries must be strictly increasing");
}

Mat solve_lyapunov(const Mat& A, const Mat& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw DimensionError("Lyapunov inputs must be square and matching");
  // vec(A'P) + vec(PA) = (I kron A') vec(P) + (A' kron I) vec(P).
  Mat M = Mat::Zero(n * n, n * n);
  const Mat At = A.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    M.block(i * n, i * n, n, n) += At;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      M.block(i * n, j * n, n, n) += At(i, j) * Mat::Identity(n, n);
  const Vec q = Eigen::Map<const Vec>(Q.data(), n * n);
  Eigen::FullPivLU<Mat> lu(M);
  if (!lu.isInvertible()) throw SolverError("Lyapunov equation is singular");
  const Vec p = lu.solve(-q);
  Mat P = Eigen::Map<const Mat>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

namespace {

bool is_hurwitz(const Mat& A) {
  return Eigen::EigenSolver<Mat>(A).eigenvalues().real().maxCoeff() < 0.0;
}

double riccati_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                        const Mat& P) {
  const Mat res =
      A.transpose() * P + P * A - P * B * R.llt().solve(B.transpose()) * P + Q;
  return res.norm();
}

}  // namespace

GainMatrix lqr_gain(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                    std::optional<Mat> K0) {
  const Eigen::Index n = A.rows(), p = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || R.rows() != p)
    throw DimensionError("LQR matrix shapes inconsistent");
  Eigen::LLT<Mat> R_llt(R);
  if (R_llt.info() != Eigen::Success) throw ValidationError("R must be positive definite");

  Mat K;
  if (K0) {
    K = *K0;
    if (!is_hurwitz(A + B * K)) throw SolverError("supplied K0 does not stabilize (A, B)");
  } else if (is_hurwitz(A)) {
    K = Mat::Zero(p, n);
  } else {
    // Bass initialization: with beta > ||A||, X solving
    // (A + beta I) X + X (A + beta I)' = 2 B B' gives the stabilizing
    // K0 = -B' X^{-1}.
    const double beta = 2.0 * A.norm() + 1.0;
    const Mat M = -(A + beta * Mat::Identity(n, n));
    const Mat X = solve_lyapunov(M.transpose(), 2.0 * B * B.transpose());
    Eigen::FullPivLU<Mat> lu(X);
    if (!lu.isInvertible())
      throw SolverError("(A, B) appears non-stabilizable: Bass initialization failed");
    K = -B.transpose() * lu.inverse();
    if (!is_hurwitz(A + B * K))
      throw SolverError("Bass initialization failed to stabilize (A, B)");
  }

  // Newton-Kleinman: each iterate solves the closed-loop Lyapunov equation.
  Mat P;
  for (int it = 0; it < 100; ++it) {
    const Mat Acl = A + B * K;
    if (!is_hurwitz(Acl)) throw SolverError("Newton-Kleinman iterate lost stability");
    P = solve_lyapunov(Acl, Q + K.transpose() * R * K);
    K = -R_llt.solve(B.transpose() * P);
    if (riccati_residual(A, B, Q, R, P) <= 1e-10)
      return GainMatrix(K, 0.0, std::numeric_limits<double>::infinity());
  }
  throw SolverError("Newton-Kleinman iteration did not reach the residual tolerance");
}

namespace {

void append_segment_samples(SynthesisResult& out, const SegmentEval& ev, int segment,
                            const Mat& K, const ControlAffineSystem& sys) {
  const std::size_t start = out.trajectory.times.empty() ? 0 : 1;  // skip shared boundary
  for (std::size_t k = start; k < ev.times.size(); ++k) {
    out.trajectory.times.push_back(ev.times[k]);
    out.trajectory.states.push_back(ev.nominal_states[k]);
    out.trajectory.controls->push_back(K * ev.nominal_states[k]);
    out.trajectory.outputs->push_back(eval_output(sys, ev.nominal_states[k]));
    out.segment_of_sample.push_back(segment);
    out.l1_samples.push_back(ev.l1_samples[k]);
    out.l2_samples.push_back(ev.l2_samples[k]);
    out.l2_unsat_samples.push_back(ev.l2_unsat_samples[k]);
  }
  if (start == 1) {
    // The boundary sample belongs to the new segment's gain for plotting;
    // the state itself is identical by construction.
    out.segment_of_sample.back() = segment;
  }
}

SynthesisResult run_segments(const ControlAffineSystem& sys, const CostSpec& spec,
                             const SegmentPlan& plan, const IntegratorConfig& int_cfg,
                             const Vec& x0, const Mat& K_start,
                             const OptimizerConfig* opt_cfg) {
  SynthesisResult out;
  out.trajectory.controls.emplace();
  out.trajectory.outputs.emplace();

  Mat K = K_start;
  Vec x = x0;
  for (std::size_t j = 0; j < plan.segments(); ++j) {
    const double t0 = plan.boundaries[j];
    const double t1 = plan.boundaries[j + 1];
    const AugmentedState z0 = AugmentedState::seed(x, spec.epsilon, spec.Qf);

    SegmentSummary summary;
    try {
      if (opt_cfg != nullptr) {
        SegmentOptResult opt = optimize_segment(sys, spec, t0, t1, z0, K, *opt_cfg, int_cfg);
        K = opt.gain.K;
        summary.iterations = opt.iterations;
        summary.status = opt.status;
        summary.trace = std::move(opt.trace);
      } else {
        summary.iterations = 0;
        summary.status = TerminationStatus::Converged;
      }
      const SegmentEval ev = integrate_augmented(sys, spec, K, t0, t1, z0, int_cfg);
      summary.J = ev.J;
      summary.zeta = ev.zeta;
      summary.l1_integral = ev.l1_integral;
      summary.l2_integral = ev.l2_integral;
      summary.l2_unsat_integral = ev.l2_unsat_integral;
      summary.terminal = ev.terminal;

      append_segment_samples(out, ev, static_cast<int>(j), K, sys);
      out.gains.emplace_back(K, t0, t1);
      out.per_segment.push_back(std::move(summary));
      out.total_l1_integral += ev.l1_integral;
      out.total_l2_integral += ev.l2_integral;
      out.total_l2_unsat += ev.l2_unsat_integral;
      x = ev.final_state.nominal;
    } catch (const DomainError& e) {
      throw DomainError("segment " + std::to_string(j) + ": " + e.what());
    } catch (const DivergenceError& e) {
      throw DivergenceError("segment " + std::to_string(j) + ": " + e.what(), e.time);
    }
  }
  out.total_cost =
      out.total_l1_integral - out.total_l2_integral + terminal_cost(x, spec.Qf);
  return out;
}

}  // namespace

SynthesisResult synthesize(const ControlAffineSystem& sys, const CostSpec& spec,
                           const SegmentPlan& plan, const OptimizerConfig& opt_cfg,
                           const IntegratorConfig& int_cfg, const Vec& x0,
                           std::optional<Mat> K0) {
  plan.validate();
  spec.validate(sys.n(), sys.p());
  opt_cfg.validate();

  Mat K_init;
  if (K0) {
    K_init = *K0;
  } else {
    // LQR of the Jacobian linearization at x0.
    Mat A = sys.drift_jacobian(x0);
    Mat B(sys.n(), sys.p());
    for (int i = 0; i < sys.p(); ++i) B.col(i) = sys.control_field(i, x0);
    K_init = lqr_gain(A, B, spec.Q, spec.R).K;
  }
  return run_segments(sys, spec, plan, int_cfg, x0, K_init, &opt_cfg);
}

SynthesisResult evaluate_piecewise(const ControlAffineSystem& sys, const CostSpec& spec,
                                   const SegmentPlan& plan, const IntegratorConfig& int_cfg,
                                   const Vec& x0, const Mat& K) {
  plan.validate();
  spec.validate(sys.n(), sys.p());
  return run_segments(sys, spec, plan, int_cfg, x0, K, nullptr);
}

Trajectory simulate_piecewise(const ControlAffineSystem& sys,
                              const std::vector<GainMatrix>& gains, const Vec& x0,
                              const IntegratorConfig& cfg) {
  Trajectory out;
  if (gains.empty()) {
    out.times.push_back(0.0);
    out.states.push_back(x0);
    return out;
  }
  for (std::size_t j = 0; j + 1 < gains.size(); ++j)
    if (gains[j].t_end != gains[j + 1].t_begin)
      throw ValidationError("gains must tile the horizon");

  Vec x = x0;
  for (const auto& g : gains) {
    const Rhs rhs = [&](double, const Vec& s) { return eval_closed_loop(sys, s, g.K); };
    const Trajectory piece = integrate(rhs, x, g.t_begin, g.t_end, cfg);
    const std::size_t start = out.times.empty() ? 0 : 1;
    for (std::size_t k = start; k < piece.size(); ++k) {
      out.times.push_back(piece.times[k]);
      out.states.push_back(piece.states[k]);
    }
    x = piece.states.back();
  }
  return out;
}

LyapunovTrace lyapunov_trace(const SynthesisResult& result, const CostSpec& spec,
                             const SegmentPlan& plan) {
  const auto& times = result.trajectory.times;
  const std::size_t npts = times.size();
  if (npts < 2) throw ValidationError("synthesis result has no samples");
  const double t_f = times.back();

  // b(t) = zeta_j e^{-t} with the zeta of the segment containing t.
  auto zeta_at = [&](std::size_t k) {
    return result.per_segment[static_cast<std::size_t>(result.segment_of_sample[k])].zeta;
  };
  std::vector<double> integrand(npts);
  for (std::size_t k = 0; k < npts; ++k)
    integrand[k] = result.l1_samples[k] - result.l2_samples[k] +
                   zeta_at(k) * std::exp(-times[k]);
  std::vector<double> cumulative(npts, 0.0);
  for (std::size_t k = 1; k < npts; ++k)
    cumulative[k] = cumulative[k - 1] + 0.5 * (times[k] - times[k - 1]) *
                                            (integrand[k - 1] + integrand[k]);

  auto cum_at = [&](double t) {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
    std::size_t k = static_cast<std::size_t>(it - times.begin());
    if (k >= npts) k = npts - 1;
    if (std::abs(times[k] - t) < 1e-9) return cumulative[k];
    // interpolate between grid points
    const double a = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - a) * cumulative[k - 1] + a * cumulative[k];
  };
  auto seg_index_at = [&](double t) {
    auto it = std::upper_bound(plan.boundaries.begin(), plan.boundaries.end(), t);
    std::size_t j = static_cast<std::size_t>(it - plan.boundaries.begin());
    if (j > 0) --j;
    if (j >= plan.segments()) j = plan.segments() - 1;
    return j;
  };

  LyapunovTrace out;
  out.nonincreasing = true;
  int prev_segment = -1;
  double prev_value = 0.0;
  for (std::size_t k = 0; k < npts; ++k) {
    const int seg = result.segment_of_sample[k];
    const double dT = plan.boundaries[static_cast<std::size_t>(seg) + 1] -
                      plan.boundaries[static_cast<std::size_t>(seg)];
    const double t_end = times[k] + dT;
    if (t_end > t_f + 1e-9) continue;
    const double zeta_end =
        result.per_segment[seg_index_at(std::min(t_end, t_f - 1e-12))].zeta;
    const double v = cum_at(t_end) - cumulative[k] + zeta_end * std::exp(-t_end) +
                     terminal_cost(result.trajectory.state_at(t_end), spec.Qf);
    out.times.push_back(times[k]);
    out.values.push_back(v);
    if (seg == prev_segment && v > prev_value + 1e-9) out.nonincreasing = false;
    prev_segment = seg;
    prev_value = v;
  }
  return out;
}

double decay_rate_estimate(const Trajectory& traj, const Mat& Q,
                           const std::vector<double>& boundaries) {
  if (boundaries.size() < 2) throw ValidationError("need at least one segment");
  auto q_norm = [&](const Vec& x) { return std::sqrt(std::max(0.0, x.dot(Q * x))); };

  double beta_max = 0.0;
  for (std::size_t j = 0; j + 1 < boundaries.size(); ++j) {
    const double t0 = boundaries[j], t1 = boundaries[j + 1];
    const double q0 = q_norm(traj.state_at(t0));
    if (q0 <= 0.0) continue;  // rate undefined for this segment
    double min_slope = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const double t = traj.times[k];
      if (t <= t0 + 1e-12 || t > t1 + 1e-12) continue;
      const double r = q_norm(traj.states[k]) / q0;
      if (r <= 0.0) continue;
      min_slope = std::min(min_slope, std::log(r) / (t - t0));
    }
    if (std::isfinite(min_slope)) beta_max = std::max(beta_max, -min_slope);
  }
  return std::max(0.0, beta_max);
}

}  // namespace obsyn
