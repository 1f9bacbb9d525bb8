#include <doctest.h>

#include <limits>
#include <random>

#include "obsyn/model.hpp"
#include "obsyn/scenario.hpp"

using namespace obsyn;

namespace {

Mat m22(double a, double b, double c, double d) {
  Mat M(2, 2);
  M << a, b, c, d;
  return M;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero input leaves only the drift") {
  const ControlAffineSystem sys = lti_system(m22(0, 1, -2, -3), Mat::Identity(2, 2),
                                             Mat::Identity(2, 2));
  const Vec x = v2(1.5, -0.25);
  CHECK((eval_dynamics(sys, x, Vec::Zero(2)) - sys.drift(x)).norm() == 0.0);
}

TEST_CASE("double integrator arithmetic") {
  Mat B(2, 1);
  B << 0, 1;
  const ControlAffineSystem sys = lti_system(m22(0, 1, 0, 0), B, Mat::Identity(2, 2));
  const Vec xdot = eval_dynamics(sys, v2(1, 0), (Vec(1) << 2.0).finished());
  CHECK(xdot[0] == 0.0);
  CHECK(xdot[1] == 2.0);
}

TEST_CASE("closed loop with zero gain is the drift") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  const Vec x = v2(-1, 2);
  CHECK((eval_closed_loop(sys, x, Mat::Zero(2, 2)) - sys.drift(x)).norm() == 0.0);
}

TEST_CASE("scalar integrator under u = -3x") {
  Mat A(1, 1), B(1, 1), C(1, 1), K(1, 1);
  A << 0;
  B << 1;
  C << 1;
  K << -3;
  const ControlAffineSystem sys = lti_system(A, B, C);
  CHECK(eval_closed_loop(sys, (Vec(1) << 2.0).finished(), K)[0] == -6.0);
}

TEST_CASE("identity output map returns the state") {
  const ControlAffineSystem sys = lti_system(m22(0, 1, -1, 0), Mat::Identity(2, 2),
                                             Mat::Identity(2, 2));
  const Vec x = v2(0.7, -1.3);
  CHECK((eval_output(sys, x) - x).norm() == 0.0);
}

TEST_CASE("bearing output is singular on the x2 axis") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  CHECK_THROWS_AS(eval_output(sys, v2(0, 1)), DomainError);
}

TEST_CASE("dynamics are affine in the control") {
  const ControlAffineSystem sys = holonomic_bearing_system();
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = v2(unif(rng), unif(rng));
    const Vec u1 = v2(unif(rng), unif(rng)), u2 = v2(unif(rng), unif(rng));
    const double a = unif(rng);
    const Vec lhs = eval_dynamics(sys, x, a * u1 + (1 - a) * u2);
    const Vec rhs = a * eval_dynamics(sys, x, u1) + (1 - a) * eval_dynamics(sys, x, u2);
    CHECK((lhs - rhs).norm() <= 1e-14 * (1 + rhs.norm()));
  }
}

TEST_CASE("closed loop equals dynamics at u = Kx") {
  const ControlAffineSystem sys = lti_system(m22(0.2, 1, -1, -0.5), Mat::Identity(2, 2),
                                             Mat::Identity(2, 2));
  const Mat K = m22(-1, -0.4, 0.3, -2);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = v2(unif(rng), unif(rng));
    CHECK((eval_closed_loop(sys, x, K) - eval_dynamics(sys, x, K * x)).norm() == 0.0);
  }
}

TEST_CASE("gain matrices reject non-finite entries and empty intervals") {
  Mat K = m22(1, 2, 3, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(GainMatrix(K, 0.0, 1.0), std::exception);
  CHECK_THROWS_AS(GainMatrix(Mat::Identity(2, 2), 1.0, 1.0), std::exception);
}

TEST_CASE("analytic and finite-difference Jacobians agree on the bearing system") {
  const ControlAffineSystem with = holonomic_bearing_system();
  // same maps, no analytic Jacobians
  ControlAffineSystem without(
      2, 2, 1, [&](const Vec& x) { return with.drift(x); },
      {[&](const Vec& x) { return with.control_field(0, x); },
       [&](const Vec& x) { return with.control_field(1, x); }},
      [&](const Vec& x) { return with.output(x); });
  const Vec x = v2(-1.2, 1.7);
  CHECK(with.has_jacobians());
  CHECK(!without.has_jacobians());
  CHECK((with.output_jacobian(x) - without.output_jacobian(x)).norm() <= 1e-6);
  CHECK((with.drift_jacobian(x) - without.drift_jacobian(x)).norm() <= 1e-6);
}

TEST_CASE("trajectory interpolation is exact at grid points and linear between") {
  Trajectory tr;
  tr.times = {0.0, 1.0, 2.0};
  tr.states = {v2(0, 0), v2(1, 2), v2(4, 0)};
  CHECK((tr.state_at(1.0) - v2(1, 2)).norm() == 0.0);
  CHECK((tr.state_at(0.5) - v2(0.5, 1)).norm() <= 1e-15);
  CHECK((tr.state_at(1.5) - v2(2.5, 1)).norm() <= 1e-15);
}

}  // TEST_SUITE
