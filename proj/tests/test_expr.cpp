#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "mixedcurv/expr.hpp"

using namespace mixedcurv;

namespace {
double eval_d(const Expr& e, const std::map<std::string, double>& env) {
  return e.evaluate<double>(MapEnv<double>{env});
}
}  // namespace

TEST_CASE("jet arithmetic basics") {
  // f(x, y) = x^2 y + sin(x y), seeded symmetrically at second order.
  const double x = 0.7, y = -1.3;
  Jet2 X = seed_var2(x, 0), Y = seed_var2(y, 1);
  Jet2 f = ipow(X, 2) * Y + sin(X * Y);
  CHECK(value(f) == doctest::Approx(x * x * y + std::sin(x * y)).epsilon(1e-14));
  // df/dx = 2xy + y cos(xy); redundant slots must agree.
  const double fx = 2 * x * y + y * std::cos(x * y);
  CHECK(f.v.d[0] == doctest::Approx(fx).epsilon(1e-14));
  CHECK(f.d[0].v == doctest::Approx(fx).epsilon(1e-14));
  // d2f/dxdy = 2x + cos(xy) - xy sin(xy)
  const double fxy = 2 * x + std::cos(x * y) - x * y * std::sin(x * y);
  CHECK(f.d[0].d[1] == doctest::Approx(fxy).epsilon(1e-13));
  CHECK(f.d[1].d[0] == doctest::Approx(fxy).epsilon(1e-13));
  // d2f/dx2 = 2y - y^2 sin(xy)
  CHECK(f.d[0].d[0] ==
        doctest::Approx(2 * y - y * y * std::sin(x * y)).epsilon(1e-13));
}

TEST_CASE("jet division and elementary functions") {
  Jet2 X = seed_var2(2.0, 0);
  Jet2 g = exp(X) / (X * X + 1.0);
  auto f = [](double x) { return std::exp(x) / (x * x + 1.0); };
  const double h = 1e-5;
  const double fd1 = (f(2 + h) - f(2 - h)) / (2 * h);
  const double fd2 = (f(2 + h) - 2 * f(2) + f(2 - h)) / (h * h);
  CHECK(value(g) == doctest::Approx(f(2.0)).epsilon(1e-14));
  CHECK(g.v.d[0] == doctest::Approx(fd1).epsilon(1e-8));
  CHECK(g.d[0].d[0] == doctest::Approx(fd2).epsilon(1e-5));
  Jet2 s = sqrt(log(X));
  CHECK(value(s) == doctest::Approx(std::sqrt(std::log(2.0))).epsilon(1e-14));
}

TEST_CASE("parse basics and free names") {
  Expr e = Expr::parse("0.3*cos(x3)");
  REQUIRE(e.free_names().size() == 1);
  CHECK(e.free_names()[0] == "x3");
  CHECK(eval_d(e, {{"x3", 0.0}}) == doctest::Approx(0.3));

  Expr g = Expr::parse("1/(2*x2+c)");
  REQUIRE(g.free_names().size() == 2);
  CHECK(g.free_names()[0] == "x2");
  CHECK(g.free_names()[1] == "c");
  CHECK(eval_d(g, {{"x2", 1.0}, {"c", 1.0}}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("syntax errors carry byte offsets") {
  CHECK_THROWS_WITH_AS(Expr::parse("sin("),
                       "unexpected end of input at offset 4", ExprError);
  try {
    Expr::parse("sin(");
  } catch (const ExprError& err) {
    CHECK(err.offset == 4);
  }
  CHECK_THROWS_AS(Expr::parse("x1 + * 2"), ExprError);
  CHECK_THROWS_AS(Expr::parse("foo(x1)"), ExprError);
  CHECK_THROWS_AS(Expr::parse(""), ExprError);
  CHECK_THROWS_AS(Expr::parse("x1 @ 2"), ExprError);
}

TEST_CASE("precedence and associativity") {
  CHECK(eval_d(Expr::parse("2+3*4"), {}) == doctest::Approx(14.0));
  CHECK(eval_d(Expr::parse("2*3^2"), {}) == doctest::Approx(18.0));
  CHECK(eval_d(Expr::parse("-2^2"), {}) == doctest::Approx(-4.0));
  CHECK(eval_d(Expr::parse("2^-2"), {}) == doctest::Approx(0.25));
  CHECK(eval_d(Expr::parse("8/4/2"), {}) == doctest::Approx(1.0));
  CHECK(eval_d(Expr::parse("8-4-2"), {}) == doctest::Approx(2.0));
  CHECK(eval_d(Expr::parse("2^3^2"), {}) == doctest::Approx(64.0));
  CHECK(eval_d(Expr::parse("pi"), {}) == doctest::Approx(M_PI));
  CHECK(eval_d(Expr::parse("e"), {}) == doctest::Approx(M_E));
  CHECK(eval_d(Expr::parse("x1^2"), {{"x1", 3.0}}) == doctest::Approx(9.0));
  // Negative base with integer exponent goes through repeated multiplication.
  CHECK(eval_d(Expr::parse("x1^3"), {{"x1", -2.0}}) == doctest::Approx(-8.0));
}

TEST_CASE("domain errors") {
  Expr g = Expr::parse("1/(2*x2+c)");
  std::map<std::string, double> env{{"x2", -0.5}, {"c", 1.0}};
  CHECK_THROWS_AS(eval_d(g, env), ExprError);
  CHECK_THROWS_AS(eval_d(Expr::parse("log(x1)"), {{"x1", -1.0}}), ExprError);
  CHECK_THROWS_AS(eval_d(Expr::parse("sqrt(x1)"), {{"x1", -1.0}}), ExprError);
  CHECK_THROWS_AS(eval_d(Expr::parse("x1^0.5"), {{"x1", -1.0}}), ExprError);
  CHECK_THROWS_AS(eval_d(Expr::parse("x1"), {}), ExprError);  // unbound
}

TEST_CASE("jet evaluation: hand-checked derivative") {
  // 0.3*cos(x3) at x3 = pi/2: value 0, derivative -0.3.
  Expr e = Expr::parse("0.3*cos(x3)");
  std::map<std::string, Jet1> env{{"x3", seed_var1(M_PI / 2, 0)}};
  Jet1 r = e.evaluate<Jet1>(MapEnv<Jet1>{env});
  CHECK(value(r) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.d[0] == doctest::Approx(-0.3).epsilon(1e-14));
}

TEST_CASE("jet consistency vs central differences on random expressions") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> U(0.3, 2.0);
  const char* exprs[] = {
      "sin(x1)*cos(x2)+x1^2",      "exp(0.3*x1)/(x2+2)",
      "log(x1+1)*sqrt(x2+1)",      "x1^3-2*x2+x1*x2",
      "(x1+x2)^2/(1+x1^2)",        "cos(x1*x2)-sin(x2)^2",
      "sqrt(x1^2+x2^2)",           "exp(-x1)*x2+pi*x1",
      "x1/(x2+1)+x2/(x1+1)",       "2^x1+x2^2.5",
  };
  for (const char* src : exprs) {
    Expr e = Expr::parse(src);
    for (int rep = 0; rep < 2; ++rep) {
      const double a = U(rng), b = U(rng);
      std::map<std::string, Jet1> jenv{{"x1", seed_var1(a, 0)},
                                       {"x2", seed_var1(b, 1)}};
      Jet1 r = e.evaluate<Jet1>(MapEnv<Jet1>{jenv});
      const double h = 1e-5;
      auto at = [&](double x, double y) {
        return eval_d(e, {{"x1", x}, {"x2", y}});
      };
      const double d1 = (at(a + h, b) - at(a - h, b)) / (2 * h);
      const double d2 = (at(a, b + h) - at(a, b - h)) / (2 * h);
      CHECK(r.d[0] == doctest::Approx(d1).epsilon(1e-7));
      CHECK(r.d[1] == doctest::Approx(d2).epsilon(1e-7));
    }
  }
}

TEST_CASE("print round trip") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> U(0.2, 1.8);
  const char* exprs[] = {
      "0.3*cos(x3)",         "1/(2*x2+c)",
      "-x1^2+3*(x2-1)",      "x1-(x2-x3)",
      "x1/(x2*x3)",          "2^-2*x1+sin(x2+cos(x3))",
      "-(x1+x2)*x3",         "sqrt(x1)^3/(1+exp(x2))",
      "x1-x2+x3-1",          "(x1^2)^3",
  };
  for (const char* src : exprs) {
    Expr e = Expr::parse(src);
    Expr e2 = Expr::parse(e.print());
    for (int rep = 0; rep < 10; ++rep) {
      std::map<std::string, double> env{
          {"x1", U(rng)}, {"x2", U(rng)}, {"x3", U(rng)}, {"c", U(rng)}};
      CHECK(eval_d(e, env) == eval_d(e2, env));  // bit-exact
    }
  }
}

TEST_CASE("bind replaces parameters by constants") {
  Expr g = Expr::parse("1/(2*x2+c)").bind({{"c", 1.0}});
  REQUIRE(g.free_names().size() == 1);
  CHECK(g.free_names()[0] == "x2");
  CHECK(eval_d(g, {{"x2", 1.0}}) == doctest::Approx(1.0 / 3.0));
}
