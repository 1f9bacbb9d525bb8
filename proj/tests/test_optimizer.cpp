#include <doctest.h>

#include <cmath>

#include "obsyn/optimizer.hpp"
#include "obsyn/scenario.hpp"

using namespace obsyn;

namespace {

Mat m1(double v) { return (Mat(1, 1) << v).finished(); }

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

ControlAffineSystem scalar_integrator(double c) {
  return lti_system(Mat::Zero(1, 1), m1(1.0), m1(c));
}

CostSpec scalar_spec() {
  CostSpec spec;
  spec.Q = m1(1.0);
  spec.R = m1(1.0);
  spec.Qf = m1(0.0);
  spec.epsilon = 0.01;
  spec.zeta = ZetaPolicy::fixed(1.0);
  spec.t_f = 5.0;
  return spec;
}

CostSpec bearing_spec() {
  CostSpec spec;
  spec.Q = Mat::Identity(2, 2);
  spec.R = Mat::Identity(2, 2);
  spec.Qf = 0.1 * Mat::Identity(2, 2);
  spec.epsilon = 0.01;
  spec.zeta = ZetaPolicy::fixed(10.0);
  spec.t_f = 1.0;
  return spec;
}

double scalar_J(double k) {
  const ControlAffineSystem sys = scalar_integrator(0.0);
  const AugmentedState z0 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  return integrate_augmented(sys, scalar_spec(), m1(k), 0.0, 5.0, z0, {1e-3}).J;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("diminishing step sizes") {
  CHECK(step_size(4, 1.0) == 0.25);
  CHECK(step_size(1, 0.1) == 0.1);
  double sum_sq = 0.0;
  const double bound = 1.0 * M_PI * M_PI / 6.0;
  for (int i = 1; i <= 10000; ++i) {
    sum_sq += step_size(i, 1.0) * step_size(i, 1.0);
    CHECK(sum_sq < bound);
  }
}

TEST_CASE("secant difference quotient on a quadratic") {
  // g = A k with A = diag(2, 3); an axis-aligned step exposes one column
  const Mat A = (Mat(2, 2) << 2, 0, 0, 3).finished();
  const Vec k_curr = v2(1, 1), k_next = v2(1.5, 1);
  const Mat H = secant_hessian(A * k_next, A * k_curr, k_next, k_curr);
  CHECK(H(0, 0) == doctest::Approx(2.0));
  CHECK(H.allFinite());
}

TEST_CASE("identical gradients give the zero matrix") {
  const Vec g = v2(1, 2), ka = v2(0, 0), kb = v2(1, 1);
  const Mat H = secant_hessian(g, g, kb, ka);
  CHECK(H.norm() == 0.0);
  CHECK(psd_check(H, 1e-9));
}

TEST_CASE("tiny displacements are guarded to zero") {
  const Vec g1 = v2(1, 2), g0 = v2(3, -4);
  const Vec ka = v2(1, 1), kb = v2(1 + 1e-15, 1);
  const Mat H = secant_hessian(g1, g0, kb, ka);
  CHECK(H.allFinite());
  CHECK(H.norm() == 0.0);
}

TEST_CASE("convexity check on definite matrices") {
  CHECK(psd_check(Mat::Identity(2, 2), 1e-9));
  CHECK(!psd_check(-Mat::Identity(2, 2), 1e-9));
  CHECK(psd_check(Mat::Zero(2, 2), 1e-9));
}

TEST_CASE("scalar segment optimum approaches the infinite-horizon gain") {
  const ControlAffineSystem sys = scalar_integrator(0.0);
  const AugmentedState z0 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  OptimizerConfig cfg;
  cfg.mu0 = 0.5;  // the harmonic schedule needs enough total travel
  cfg.max_iters = 3000;
  const SegmentOptResult res =
      optimize_segment(sys, scalar_spec(), 0.0, 5.0, z0, m1(-0.5), cfg, {1e-3});
  CHECK(std::abs(res.gain.K(0, 0) - (-1.0)) <= 0.05);
  // cross-check against a dense parameter sweep
  double best = 1e300;
  for (double k = -2.0; k <= -0.2; k += 0.005) best = std::min(best, scalar_J(k));
  CHECK(res.J <= best + 1e-3);
}

TEST_CASE("a stationary start returns immediately") {
  const ControlAffineSystem sys = scalar_integrator(0.0);
  const AugmentedState z0 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  OptimizerConfig loose;
  loose.grad_tol = 0.5;  // -1 is well inside this ball
  const SegmentOptResult res =
      optimize_segment(sys, scalar_spec(), 0.0, 5.0, z0, m1(-1.0), loose, {1e-3});
  CHECK(res.status == TerminationStatus::Converged);
  CHECK(res.iterations == 1);
  CHECK(res.gain.K(0, 0) == -1.0);  // best-so-far is the start
}

TEST_CASE("descent from the plain LQR gain on the bearing segment") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  const CostSpec spec = bearing_spec();
  const AugmentedState z0 = AugmentedState::seed(v2(-1, 2), spec.epsilon, spec.Qf);
  OptimizerConfig cfg;
  cfg.max_iters = 60;
  const SegmentOptResult res =
      optimize_segment(sys, spec, 0.0, 1.0, z0, -Mat::Identity(2, 2), cfg, {1e-3});
  const double J_lqr =
      integrate_augmented(sys, spec, -Mat::Identity(2, 2), 0.0, 1.0, z0, {1e-3}).J;
  CHECK(res.J < J_lqr);

  // best-so-far cost is nonincreasing along the trace
  double best = 1e300;
  for (const auto& rec : res.trace) {
    CHECK(std::min(best, rec.J) <= best);
    best = std::min(best, rec.J);
  }
  // step sizes strictly decrease across accepted (convex) iterations
  double last_mu = 1e300;
  for (const auto& rec : res.trace) {
    if (rec.cvx_check) {
      CHECK(rec.mu < last_mu);
      last_mu = rec.mu;
    }
  }
  CHECK(static_cast<int>(res.trace.size()) <= cfg.max_iters);
}

TEST_CASE("cost bounds bracket the augmented cost") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  const CostSpec spec = bearing_spec();
  const AugmentedState z0 = AugmentedState::seed(v2(-1, 2), spec.epsilon, spec.Qf);
  const CostBounds cb = cost_bounds(sys, spec, -Mat::Identity(2, 2), 0.0, 1.0, z0, {1e-3});
  const double tol = 1e-9 * std::max(1.0, std::abs(cb.J));
  CHECK(cb.lower_paper <= cb.J + tol);
  CHECK(cb.lower_paper <= cb.lower_refined + tol);
  CHECK(cb.J <= cb.upper + tol);

  // with no output spread the upper bound is tight
  const ControlAffineSystem flat = scalar_integrator(0.0);
  const AugmentedState z1 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  const CostBounds cb0 = cost_bounds(flat, scalar_spec(), m1(-1.0), 0.0, 5.0, z1, {1e-3});
  CHECK(std::abs(cb0.J - cb0.upper) <= 1e-12);
}

TEST_CASE("configuration validation") {
  OptimizerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.mu0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = OptimizerConfig{};
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

}  // TEST_SUITE
