#include <doctest.h>

#include <cmath>
#include <random>

#include "obsyn/expr.hpp"

using namespace obsyn;
using expr::parse;

namespace {

double at(const expr::Expression& e, double x1, double x2, double u1 = 0, double t = 0) {
  return e.eval((Vec(2) << x1, x2).finished(), (Vec(1) << u1).finished(), t);
}

}  // namespace

TEST_SUITE("expr") {

TEST_CASE("literal zero") {
  const auto e = parse("0", 2, 1);
  CHECK(at(e, 1, 1) == 0.0);
  CHECK(e.is_zero());
}

TEST_CASE("malformed input reports the offset") {
  try {
    parse("x1 + * 2", 2, 1);
    FAIL("expected a parse error");
  } catch (const expr::ParseError& pe) {
    CHECK(pe.offset == 5);
  }
}

TEST_CASE("sin(0) evaluates to zero") { CHECK(at(parse("sin(0)", 2, 1), 3, 4) == 0.0); }

TEST_CASE("division by zero raises a domain error") {
  CHECK_THROWS_AS(at(parse("x2/x1", 2, 1), 0, 1), DomainError);
}

TEST_CASE("out-of-range variables are rejected") {
  CHECK_THROWS_AS(parse("x3", 2, 1), expr::ParseError);
  CHECK_THROWS_AS(parse("u2", 2, 1), expr::ParseError);
}

TEST_CASE("precedence and associativity") {
  CHECK(at(parse("2+3*4^2", 2, 1), 0, 0) == 50.0);
  CHECK(at(parse("2^3^2", 2, 1), 0, 0) == 64.0);  // left associative
  CHECK(at(parse("2-3-4", 2, 1), 0, 0) == -5.0);
  CHECK(at(parse("-2^2", 2, 1), 0, 0) == -4.0);  // unary minus over the power
}

TEST_CASE("derivative of the bearing map") {
  const auto d = parse("x2/x1", 2, 1).differentiate({expr::VarKind::State, 1});
  CHECK(at(d, -1, 2) == doctest::Approx(-2.0).epsilon(1e-12));
  // against a central finite difference of the original
  const auto e = parse("x2/x1", 2, 1);
  const double h = 1e-6;
  const double fd = (at(e, -1 + h, 2) - at(e, -1 - h, 2)) / (2 * h);
  CHECK(at(d, -1, 2) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("derivative of an unrelated variable is zero") {
  CHECK(parse("x2", 2, 1).differentiate({expr::VarKind::State, 1}).is_zero());
}

TEST_CASE("product rule with an input variable") {
  const auto d = parse("x1*u1", 2, 1).differentiate({expr::VarKind::Input, 1});
  CHECK(at(d, 3, 0, 7) == 3.0);
}

TEST_CASE("abs derivative is zero at the kink") {
  const auto d = parse("abs(x1)", 2, 1).differentiate({expr::VarKind::State, 1});
  CHECK(at(d, 0, 0) == 0.0);
  CHECK(at(d, 2, 0) == 1.0);
  CHECK(at(d, -2, 0) == -1.0);
}

TEST_CASE("time variable differentiates to one") {
  const auto d = parse("t*t", 2, 1).differentiate({expr::VarKind::Time, 0});
  CHECK(at(d, 0, 0, 0, 3.0) == 6.0);
}

TEST_CASE("round-trip and finite-difference derivative on a fixed battery") {
  const char* exprs[] = {
      "x1*x2 + sin(x1)",       "exp(-(x1^2))*cos(x2)",  "sqrt(abs(x1)+1)*u1",
      "log(abs(x2)+1) - x1^3", "(x1+x2)/(x1*x1+1)",     "tan(x1/4) + t*x2",
      "-(x1 - 2*x2)^2",        "x1^2*x2 - u1/(t+1)",
  };
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (const char* s : exprs) {
    const auto e = parse(s, 2, 1);
    const auto again = parse(e.print(), 2, 1);
    const auto dx2 = e.differentiate({expr::VarKind::State, 2});
    for (int trial = 0; trial < 15; ++trial) {
      const double x1 = unif(rng), x2 = unif(rng), u1 = unif(rng);
      const double t = std::abs(unif(rng));
      const double v = at(e, x1, x2, u1, t);
      CHECK(at(again, x1, x2, u1, t) == doctest::Approx(v).epsilon(1e-12));
      const double h = 1e-6;
      const double fd = (at(e, x1, x2 + h, u1, t) - at(e, x1, x2 - h, u1, t)) / (2 * h);
      CHECK(at(dx2, x1, x2, u1, t) ==
            doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
    }
  }
}

TEST_CASE("domain errors carry the offending subexpression") {
  try {
    at(parse("log(x1 - 5)", 2, 1), 1, 0);
    FAIL("expected a domain error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("log") != std::string::npos);
  }
}

}  // TEST_SUITE
