#include "obsyn/optimizer.hpp"

#include <cmath>
#include <limits>

namespace obsyn {

void OptimizerConfig::validate() const {
  if (mu0 <= 0.0) throw ValidationError("mu0 must be positive");
  if (grad_tol <= 0.0) throw ValidationError("grad_tol must be positive");
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
}

double step_size(int i, double mu0) {
  if (i < 1) throw ValidationError("iteration index starts at 1");
  return mu0 / static_cast<double>(i);
}

Mat secant_hessian(const Vec& g_curr, const Vec& g_prev, const Vec& k_next,
                   const Vec& k_curr) {
  const Eigen::Index P = g_curr.size();
  if (g_prev.size() != P || k_next.size() != P || k_curr.size() != P)
    throw DimensionError("secant inputs must share one flattened dimension");
  Mat H(P, P);
  for (Eigen::Index m = 0; m < P; ++m) {
    for (Eigen::Index n = 0; n < P; ++n) {
      const double dk = k_next[n] - k_curr[n];
      H(m, n) = std::abs(dk) < 1e-12 ? 0.0 : (g_curr[m] - g_prev[m]) / dk;
    }
  }
  return 0.5 * (H + H.transpose());
}

bool psd_check(const Mat& H, double psd_tol) {
  if (H.rows() != H.cols()) throw DimensionError("H must be square");
  const Mat S = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  return es.eigenvalues().minCoeff() >= -psd_tol;
}

namespace {

Vec flatten_rowmajor(const Mat& K) {
  Vec v(K.size());
  for (Eigen::Index a = 0; a < K.rows(); ++a)
    for (Eigen::Index b = 0; b < K.cols(); ++b) v[a * K.cols() + b] = K(a, b);
  return v;
}

Mat unflatten_rowmajor(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  Mat K(rows, cols);
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < cols; ++b) K(a, b) = v[a * cols + b];
  return K;
}

struct Evaluation {
  SegmentEval ev;
  Vec g;
};

Evaluation evaluate(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                    double t0, double t1, const AugmentedState& z0,
                    const IntegratorConfig& cfg) {
  Evaluation e;
  e.ev = integrate_augmented(sys, spec, K, t0, t1, z0, cfg);
  e.g = gradient(sys, spec, K, t0, t1, z0, cfg);
  return e;
}

}  // namespace

SegmentOptResult optimize_segment(const ControlAffineSystem& sys, const CostSpec& spec,
                                  double t0, double t1, const AugmentedState& z0,
                                  const Mat& K_init, const OptimizerConfig& opt_cfg,
                                  const IntegratorConfig& int_cfg) {
  opt_cfg.validate();

  SegmentOptResult res;
  Mat K = K_init;
  Mat K_prev;
  Vec g_prev;
  double mu_prev = 0.0;

  int schedule = 1;  // advances only when the convexity check passes
  double mu = step_size(schedule, opt_cfg.mu0);
  bool cvx = true;   // Algorithm 1 initializes cvxCheck TRUE

  Mat K_best = K_init;
  double J_best = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opt_cfg.max_iters; ++iter) {
    Evaluation e;
    int halvings = 0;
    for (;;) {
      try {
        e = evaluate(sys, spec, K, t0, t1, z0, int_cfg);
        break;
      } catch (const std::runtime_error&) {
        // The previous step drove the closed loop out of its stable/
        // admissible region: reject it and retake it with mu halved.
        if (iter == 1 || halvings >= 10) throw;
        ++halvings;
        mu_prev *= 0.5;
        K = K_prev - mu_prev * unflatten_rowmajor(g_prev, K.rows(), K.cols());
      }
    }

    const double gnorm = e.g.norm();
    if (e.ev.J < J_best) {
      J_best = e.ev.J;
      K_best = K;
    }
    res.zeta = e.ev.zeta;

    const Mat K_next = K - mu * unflatten_rowmajor(e.g, K.rows(), K.cols());

    if (iter > 1) {
      const Mat H = secant_hessian(e.g, g_prev, flatten_rowmajor(K_next),
                                   flatten_rowmajor(K));
      cvx = psd_check(H, opt_cfg.psd_tol);
    }

    IterationRecord rec;
    rec.K = K;
    rec.J = e.ev.J;
    rec.grad_norm = gnorm;
    rec.mu = mu;
    rec.cvx_check = cvx;
    rec.l1_integral = e.ev.l1_integral;
    rec.l2_integral = e.ev.l2_integral;
    rec.l2_unsat_integral = e.ev.l2_unsat_integral;
    rec.terminal = e.ev.terminal;
    res.trace.push_back(std::move(rec));
    res.iterations = iter;

    if (gnorm <= opt_cfg.grad_tol && cvx) {
      res.status = TerminationStatus::Converged;
      break;
    }

    K_prev = K;
    g_prev = e.g;
    mu_prev = mu;
    K = K_next;
    if (cvx) {
      ++schedule;
      mu = step_size(schedule, opt_cfg.mu0);
    }
    // else: "Do not change step size"
  }

  res.gain = GainMatrix(K_best, t0, t1);
  res.J = J_best;
  return res;
}

CostBounds cost_bounds(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                       double t0, double t1, const AugmentedState& z0,
                       const IntegratorConfig& cfg) {
  const SegmentEval ev = integrate_augmented(sys, spec, K, t0, t1, z0, cfg);
  CostBounds b;
  b.upper = ev.l1_integral + ev.terminal;
  b.lower_paper = ev.l1_integral - ev.zeta * (t1 - t0) + ev.terminal;
  b.lower_refined = ev.l1_integral - ev.zeta * (std::exp(-t0) - std::exp(-t1)) + ev.terminal;
  b.J = ev.J;
  return b;
}

}  // namespace obsyn
