#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "obsyn/ode.hpp"

using namespace obsyn;

TEST_SUITE("ode") {

TEST_CASE("scalar decay hits the analytic endpoint") {
  const Trajectory tr = integrate([](double, const Vec& z) { return Vec(-z); },
                                  (Vec(1) << 1.0).finished(), 0.0, 1.0, {1e-3});
  CHECK(std::abs(tr.states.back()[0] - std::exp(-1.0)) <= 1e-10);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 1.0);
}

TEST_CASE("zero field keeps the state constant") {
  const Vec z0 = (Vec(2) << 3.5, -1.25).finished();
  const Trajectory tr = integrate([](double, const Vec& z) { return Vec(Vec::Zero(z.size())); },
                                  z0, 0.0, 2.0, {1e-3});
  for (const Vec& z : tr.states) CHECK((z - z0).norm() == 0.0);
}

TEST_CASE("quadratic blow-up raises a divergence error before t = 2") {
  try {
    integrate([](double, const Vec& z) { return Vec(z.array().square().matrix()); },
              (Vec(1) << 1.0).finished(), 0.0, 2.0, {1e-3});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time < 2.0);
    CHECK(e.time > 0.5);  // analytic blow-up is at t = 1
  }
}

TEST_CASE("fourth-order convergence on scalar decay") {
  auto endpoint_error = [](double dt) {
    const Trajectory tr = integrate([](double, const Vec& z) { return Vec(-z); },
                                    (Vec(1) << 1.0).finished(), 0.0, 1.0, {dt});
    return std::abs(tr.states.back()[0] - std::exp(-1.0));
  };
  const double ratio = endpoint_error(2e-2) / endpoint_error(1e-2);
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("linear systems match the matrix exponential") {
  Mat A(3, 3);
  A << -0.5, 2.0, 0.0, -2.0, -0.5, 1.0, 0.3, -0.2, -1.0;
  REQUIRE(A.norm() <= 5.0);
  const Vec z0 = (Vec(3) << 1.0, -1.0, 0.5).finished();
  const Trajectory tr =
      integrate([&](double, const Vec& z) { return Vec(A * z); }, z0, 0.0, 1.5, {1e-3});
  const Vec ref = (A * 1.5).exp() * z0;
  CHECK((tr.states.back() - ref).norm() / ref.norm() <= 1e-8);
}

TEST_CASE("integration is bit-deterministic") {
  auto run = [] {
    return integrate([](double t, const Vec& z) { return Vec(-z * std::cos(t)); },
                     (Vec(2) << 1.0, 2.0).finished(), 0.0, 3.0, {1e-3});
  };
  const Trajectory a = run(), b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.times[k] == b.times[k]);
    CHECK((a.states[k] - b.states[k]).norm() == 0.0);
  }
}

TEST_CASE("final partial step lands exactly on the end time") {
  const Trajectory tr = integrate([](double, const Vec& z) { return Vec(-z); },
                                  (Vec(1) << 1.0).finished(), 0.0, 0.12345, {1e-2});
  CHECK(tr.times.back() == 0.12345);
}

TEST_CASE("grid times do not drift") {
  const Trajectory tr = integrate([](double, const Vec& z) { return Vec(-z); },
                                  (Vec(1) << 1.0).finished(), 0.0, 1.0, {1e-3});
  CHECK(tr.times[500] == 0.0 + 500 * 1e-3);
}

}  // TEST_SUITE
