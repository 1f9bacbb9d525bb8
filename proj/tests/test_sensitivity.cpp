#include <doctest.h>

#include <cmath>

#include "obsyn/scenario.hpp"
#include "obsyn/sensitivity.hpp"

using namespace obsyn;

namespace {

Mat m1(double v) { return (Mat(1, 1) << v).finished(); }

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// scalar xdot = u with output y = c*x
ControlAffineSystem scalar_integrator(double c) {
  return lti_system(Mat::Zero(1, 1), m1(1.0), m1(c));
}

CostSpec spec1(double qf = 0.0) {
  CostSpec spec;
  spec.Q = m1(1.0);
  spec.R = m1(1.0);
  spec.Qf = m1(qf);
  spec.epsilon = 0.01;
  spec.zeta = ZetaPolicy::fixed(10.0);
  spec.t_f = 1.0;
  return spec;
}

CostSpec spec2() {
  CostSpec spec;
  spec.Q = Mat::Identity(2, 2);
  spec.R = Mat::Identity(2, 2);
  spec.Qf = 0.1 * Mat::Identity(2, 2);
  spec.epsilon = 0.01;
  spec.zeta = ZetaPolicy::fixed(10.0);
  spec.t_f = 1.0;
  return spec;
}

}  // namespace

TEST_SUITE("sensitivity") {

TEST_CASE("seeded augmented state layout") {
  const AugmentedState z = AugmentedState::seed(v2(-1, 2), 0.1, 0.5 * Mat::Identity(2, 2));
  CHECK(z.dim() == 2 * (2 * 2 + 1) + 1);
  CHECK((z.perturbed[0] - v2(-0.9, 2)).norm() <= 1e-15);
  CHECK((z.perturbed[1] - v2(-1.1, 2)).norm() <= 1e-15);
  CHECK((z.perturbed[2] - v2(-1, 2.1)).norm() <= 1e-15);
  CHECK((z.perturbed[3] - v2(-1, 1.9)).norm() <= 1e-15);
  CHECK(z.running_cost == doctest::Approx(0.5 * 5.0));  // terminal cost at the seed

  const Vec packed = z.pack();
  const AugmentedState back = AugmentedState::unpack(packed, 2);
  CHECK((back.pack() - packed).norm() == 0.0);
}

TEST_CASE("zero dynamics leave only the cost row active") {
  ControlAffineSystem frozen(
      2, 2, 1, [](const Vec&) { return Vec(Vec::Zero(2)); },
      {[](const Vec&) { return Vec(Vec::Zero(2)); }, [](const Vec&) { return Vec(Vec::Zero(2)); }},
      [](const Vec& x) { return Vec((Vec(1) << x[0] + x[1]).finished()); });
  const CostSpec spec = spec2();
  const AugmentedState z = AugmentedState::seed(v2(1, -1), 0.01, spec.Qf);
  const Vec dz = build_H(frozen, spec, -Mat::Identity(2, 2), 1.0, 0.0, z);
  CHECK(dz.head(z.dim() - 1).norm() == 0.0);
  std::vector<Vec> outs;
  for (const Vec& xp : z.perturbed) outs.push_back(frozen.output(xp));
  CHECK(dz[z.dim() - 1] ==
        doctest::Approx(gamma_integrand(0.0, z.nominal, outs, -Mat::Identity(2, 2), spec, 1.0)));
}

TEST_CASE("segment cost of the scalar integrator under u = -x") {
  // constant output: the observability reward vanishes
  const ControlAffineSystem sys = scalar_integrator(0.0);
  const AugmentedState z0 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  const SegmentEval ev = integrate_augmented(sys, spec1(), m1(-1.0), 0.0, 1.0, z0, {1e-3});
  CHECK(ev.J == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-6));
  CHECK(ev.l2_integral == 0.0);
}

TEST_CASE("reported cost equals direct quadrature of its samples") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  const CostSpec spec = spec2();
  const AugmentedState z0 = AugmentedState::seed(v2(-1, 2), spec.epsilon, spec.Qf);
  const SegmentEval ev = integrate_augmented(sys, spec, -Mat::Identity(2, 2), 0.0, 1.0, z0, {1e-3});
  double quad = 0.0;
  for (std::size_t k = 0; k + 1 < ev.times.size(); ++k) {
    const double g0 = ev.l1_samples[k] - ev.l2_samples[k];
    const double g1 = ev.l1_samples[k + 1] - ev.l2_samples[k + 1];
    quad += 0.5 * (g0 + g1) * (ev.times[k + 1] - ev.times[k]);
  }
  quad += ev.terminal;
  CHECK(std::abs(ev.J - quad) <= 1e-9 * std::max(1.0, std::abs(quad)));
}

TEST_CASE("sensitivity forcing matches the scalar closed form") {
  // xdot = k x: d(xdot)/dk = x, so sdot = k s + x for the nominal row
  const ControlAffineSystem sys = scalar_integrator(0.0);
  const double k = -0.7, s = 0.3, x = 2.0;
  AugmentedState z = AugmentedState::seed((Vec(1) << x).finished(), 0.01, m1(0.0));
  Mat Xbar = Mat::Zero(z.dim(), 1);
  Xbar(0, 0) = s;
  const Mat rhs = sensitivity_rhs(sys, spec1(), m1(k), 1.0, 0.0, z, Xbar);
  CHECK(rhs(0, 0) == doctest::Approx(k * s + x).epsilon(1e-5));
}

TEST_CASE("sensitivity starts from zero forcing only") {
  const ControlAffineSystem sys = scalar_integrator(0.0);
  AugmentedState z = AugmentedState::seed((Vec(1) << 2.0).finished(), 0.01, m1(0.0));
  const Mat rhs0 = sensitivity_rhs(sys, spec1(), m1(-0.7), 1.0, 0.0, z, Mat::Zero(z.dim(), 1));
  // with Xbar = 0 the rhs is the pure gain forcing dH/dK
  CHECK(rhs0(0, 0) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("gradient matches finite differences on the scalar problem") {
  const ControlAffineSystem sys = scalar_integrator(0.0);
  const AugmentedState z0 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  const Vec g = gradient(sys, spec1(), m1(-1.0), 0.0, 1.0, z0, {1e-3});
  const Vec fd = fd_gradient(sys, spec1(), m1(-1.0), 0.0, 1.0, z0, {1e-3}, 1e-5);
  CHECK(std::abs(g[0] - fd[0]) / std::max(1.0, std::abs(fd[0])) <= 1e-5);
}

TEST_CASE("observability term makes the plain LQR gain non-stationary") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  const CostSpec spec = spec2();
  const AugmentedState z0 = AugmentedState::seed(v2(-1, 2), spec.epsilon, spec.Qf);
  const Vec g = gradient(sys, spec, -Mat::Identity(2, 2), 0.0, 1.0, z0, {1e-3});
  CHECK(g.norm() > 1e-4);
  const Vec fd = fd_gradient(sys, spec, -Mat::Identity(2, 2), 0.0, 1.0, z0, {1e-3}, 1e-5);
  CHECK((g - fd).norm() / std::max(1.0, fd.norm()) <= 1e-4);
}

TEST_CASE("finite-difference oracle basics") {
  // zero cost function: Q = R = Qf = 0 and constant output
  const ControlAffineSystem sys = scalar_integrator(0.0);
  CostSpec zero = spec1();
  zero.Q = m1(0.0);
  zero.R = m1(0.0);
  const AugmentedState z0 = AugmentedState::seed((Vec(1) << 1.0).finished(), 0.01, m1(0.0));
  CHECK(fd_gradient(sys, zero, m1(-1.0), 0.0, 1.0, z0, {1e-3}, 1e-5).norm() <= 1e-12);

  // scaling every weight by alpha scales the gradient by alpha
  CostSpec spec = spec1();
  CostSpec scaled = spec;
  const double alpha = 3.0;
  scaled.Q *= alpha;
  scaled.R *= alpha;
  scaled.Qf *= alpha;
  const Vec base = fd_gradient(sys, spec, m1(-1.2), 0.0, 1.0, z0, {1e-3}, 1e-5);
  const Vec big = fd_gradient(sys, scaled, m1(-1.2), 0.0, 1.0, z0, {1e-3}, 1e-5);
  CHECK((big - alpha * base).norm() <= 1e-6 * std::max(1.0, base.norm()));
}

}  // TEST_SUITE
