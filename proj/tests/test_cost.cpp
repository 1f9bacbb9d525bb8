#include <doctest.h>

#include <cmath>
#include <random>

#include "obsyn/cost.hpp"

using namespace obsyn;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// outputs for a single scalar pair (+1, -1) whose unsaturated integrand is
// `target` at perturbation size eps: ||dy||^2 / (4 eps^2) = target.
std::vector<Vec> pair_with(double target, double eps) {
  const double dy = 2.0 * eps * std::sqrt(target);
  return {(Vec(1) << dy).finished(), (Vec(1) << 0.0).finished()};
}

CostSpec unit_spec(int n) {
  CostSpec spec;
  spec.Q = Mat::Identity(n, n);
  spec.R = Mat::Identity(n, n);
  spec.Qf = 0.1 * Mat::Identity(n, n);
  spec.epsilon = 0.01;
  spec.zeta = ZetaPolicy::fixed(1.0);
  spec.t_f = 1.0;
  return spec;
}

}  // namespace

TEST_SUITE("cost") {

TEST_CASE("saturation clamps at the threshold") {
  CHECK(sat(3, 2) == 2.0);
  CHECK(sat(1.5, 2) == 1.5);
  CHECK(sat(2, 2) == 2.0);
  CHECK(sat_derivative(1.5, 2) == 1.0);
  CHECK(sat_derivative(2, 2) == 0.0);
  CHECK(sat_derivative(3, 2) == 0.0);
}

TEST_CASE("saturation is monotone and 1-Lipschitz") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = unif(rng), b = unif(rng), z = std::abs(unif(rng));
    if (a <= b) CHECK(sat(a, z) <= sat(b, z));
    CHECK(std::abs(sat(a, z) - sat(b, z)) <= std::abs(a - b) + 1e-15);
  }
}

TEST_CASE("quadratic running cost") {
  CostSpec spec = unit_spec(1);
  spec.Q = 2.0 * Mat::Identity(1, 1);
  CHECK(l1((Vec(1) << 3.0).finished(), (Vec(1) << 1.0).finished(), spec) == 19.0);
  CHECK(l1(Vec::Zero(1), Vec::Zero(1), spec) == 0.0);
}

TEST_CASE("observability reward saturates and decays in time") {
  CHECK(unsaturated_obs({v2(1, 1), v2(1, 1)}, 0.01) == 0.0);
  CHECK(l2(0.0, pair_with(5.0, 0.5), 2.0, 0.5) == doctest::Approx(2.0));          // clamped
  CHECK(l2(std::log(2.0), pair_with(1.0, 0.5), 2.0, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("observability reward bound by the decaying envelope") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double t = unif(rng), zeta = unif(rng) + 0.1, inner = unif(rng);
    const double v = l2(t, pair_with(inner, 0.5), zeta, 0.5);
    CHECK(v >= 0.0);
    CHECK(v <= std::exp(-t) * zeta + 1e-15);
  }
}

TEST_CASE("segment saturation levels") {
  const Mat Q = Mat::Identity(2, 2);
  const Vec x = v2(-1, 2);
  CHECK(zeta_for_segment(ZetaPolicy::fixed(3.0), x, Q, 0.0, 1.0).value == 3.0);
  CHECK(zeta_for_segment(ZetaPolicy::decay(0.5), x, Q, 0.0, 1.0).value ==
        doctest::Approx(5.0));  // ||x||_Q^2
  CHECK(zeta_for_segment(ZetaPolicy::decay(1.0), x, Q, 2.0, 3.0).value ==
        doctest::Approx(std::exp(-3.0) * 5.0));  // e^{(1-2b) t_next} ||x||_Q^2
}

TEST_CASE("terminal cost") {
  CHECK(terminal_cost(Vec::Zero(2), Mat::Identity(2, 2)) == 0.0);
  CHECK(terminal_cost(v2(1, 2), Mat::Zero(2, 2)) == 0.0);
  CHECK(terminal_cost(v2(1, 2), 0.1 * Mat::Identity(2, 2)) == doctest::Approx(0.5));
}

TEST_CASE("combined integrand reduces to the quadratic part without output spread") {
  CostSpec spec = unit_spec(2);
  const Vec x = v2(1.0, -0.5);
  const std::vector<Vec> same = {v2(1, 1), v2(1, 1), v2(1, 1), v2(1, 1)};
  CHECK(gamma_integrand(0.3, x, same, Mat::Zero(2, 2), spec, 1.0) ==
        doctest::Approx(x.squaredNorm()));
  CHECK(gamma_integrand(0.0, Vec::Zero(2), same, Mat::Zero(2, 2), spec, 1.0) == 0.0);
}

TEST_CASE("cost spec validation rejects indefinite weights") {
  CostSpec spec = unit_spec(2);
  CHECK_NOTHROW(spec.validate(2, 2));
  spec.Q(0, 0) = -1.0;
  CHECK_THROWS_AS(spec.validate(2, 2), ValidationError);
  spec = unit_spec(2);
  spec.epsilon = 0.0;
  CHECK_THROWS_AS(spec.validate(2, 2), ValidationError);
  spec = unit_spec(2);
  CHECK_THROWS_AS(spec.validate(3, 2), DimensionError);
}

}  // TEST_SUITE
