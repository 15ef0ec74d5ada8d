#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mixedcurv/integrate.hpp"
#include "mixedcurv/models.hpp"
#include "test_util.hpp"

using namespace mixedcurv;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Independent 1-D oracle: adaptive Simpson.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 30);
}

// Random smooth periodic vector field as expression strings.
std::array<Expr, kMaxDim> random_field(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> C(-1.0, 1.0), P(0.0, kTwoPi);
  std::array<Expr, kMaxDim> out{};
  for (int mu = 0; mu < d; ++mu) {
    std::ostringstream s;
    s.precision(17);
    s << C(rng);
    for (int k = 0; k < d; ++k) {
      s << "+" << C(rng) << "*sin(x" << (k + 1) << "+" << P(rng) << ")";
      const int k2 = (k + 1) % d;
      s << "+" << C(rng) << "*cos(x" << (k + 1) << "+" << P(rng) << ")*sin(x"
        << (k2 + 1) << "+" << P(rng) << ")";
    }
    out[mu] = Expr::parse(s.str());
  }
  return out;
}

double divergence_at(const Model& m, const std::array<Expr, kMaxDim>& xi,
                     const double* x) {
  GeomSecond G = geom_second(m, x);
  Vec<Jet1> v(G.d);
  Pt1 p1 = seed_point<Jet1>(x, G.d);
  PtEnv<Jet1> env{p1};
  for (int mu = 0; mu < G.d; ++mu) v[mu] = xi[mu].evaluate<Jet1>(env);
  return div_vec(G, v);
}

// Flat torus with the warped-torus span roles exchanged: rank-one tangent
// side along the x3 axis of the warped metric.
Model wt_swapped(double a) {
  Model m = build_model("WT", {{"a", a}});
  m.name = "WTswap";
  m.n = 1;
  m.span.clear();
  std::array<Expr, kMaxDim> v{};
  v[0] = Expr::constant(0.0);
  v[1] = Expr::constant(0.0);
  v[2] = Expr::constant(1.0);
  v[3] = Expr::constant(0.0);
  m.span.push_back(v);
  m.reference.clear();
  return m;
}

}  // namespace

TEST_CASE("grid defaults and validation") {
  Model t3 = build_model("FlatTorus");
  Model t4 = build_model("NI4");
  CHECK(GridSpec::defaults(t3).npts[0] == 48);
  CHECK(GridSpec::defaults(t4).npts[0] == 24);
  CHECK_THROWS_AS(volume(t3, GridSpec::uniform(t3, 4)), ModelError);
  CHECK_THROWS_AS(volume(t4, GridSpec::uniform(t4, 100)), ModelError);
}

TEST_CASE("flat torus: volume and vanishing functionals") {
  Model flat = build_model("FlatTorus");
  GridSpec g = GridSpec::uniform(flat, 16);
  const double vol = volume(flat, g);
  CHECK(vol == doctest::Approx(kTwoPi * kTwoPi * kTwoPi).epsilon(1e-13));
  for (auto mth : {JMixMethod::Direct, JMixMethod::QForm, JMixMethod::Codim1})
    CHECK(std::abs(j_mix(flat, g, mth)) < 1e-10);
  for (Side side : {Side::D, Side::Dtilde}) {
    GlobalMeans gm = mean_and_s_star(flat, g, side);
    CHECK(gm.vol == doctest::Approx(vol).epsilon(1e-15));
    CHECK(std::abs(gm.s_mix) < 1e-13);
    CHECK(std::abs(gm.s_star) < 1e-12);
  }
}

TEST_CASE("warped torus: volume against independent oracles") {
  const double a = 0.3;
  Model wt = build_model("WT", {{"a", a}});
  const double vol = volume(wt, GridSpec::uniform(wt, 32));
  // density is exp(2a cos x3): Vol = (2pi)^2 * ∫ exp(2a cos z) dz
  const double oracle1d = adaptive_simpson(
      [a](double z) { return std::exp(2.0 * a * std::cos(z)); }, 0.0, kTwoPi);
  CHECK(vol == doctest::Approx(kTwoPi * kTwoPi * oracle1d).epsilon(1e-9));
  CHECK(vol == doctest::Approx(std::pow(kTwoPi, 3) *
                               std::cyl_bessel_i(0.0, 2.0 * a))
                   .epsilon(1e-11));
}

TEST_CASE("warped torus: total mixed curvature by all routes") {
  const double a = 0.3;
  Model wt = build_model("WT", {{"a", a}});
  GridSpec g = GridSpec::uniform(wt, 32);
  // J = (2pi)^2 ∫ 2a^2 sin^2 z · e^{2a cos z} dz = (2pi)^3 a I_1(2a)
  const double oracle1d = adaptive_simpson(
      [a](double z) {
        return 2.0 * a * a * std::sin(z) * std::sin(z) *
               std::exp(2.0 * a * std::cos(z));
      },
      0.0, kTwoPi);
  const double expect = kTwoPi * kTwoPi * oracle1d;
  CHECK(expect == doctest::Approx(std::pow(kTwoPi, 3) * a *
                                  std::cyl_bessel_i(1.0, 2.0 * a))
                      .epsilon(1e-11));
  const double jd = j_mix(wt, g, JMixMethod::Direct);
  const double jq = j_mix(wt, g, JMixMethod::QForm);
  const double jc = j_mix(wt, g, JMixMethod::Codim1);
  CHECK(jd == doctest::Approx(expect).epsilon(1e-9));
  CHECK(jq == doctest::Approx(jd).epsilon(1e-7));
  CHECK(jc == doctest::Approx(jd).epsilon(1e-7));
  // spectral convergence of the periodic rule
  const double jd16 = j_mix(wt, GridSpec::uniform(wt, 16), JMixMethod::Direct);
  CHECK(std::abs(jd16 - jd) < 1e-10);
  // determinism: bitwise identical re-evaluation
  CHECK(j_mix(wt, g, JMixMethod::Direct) == jd);
}

TEST_CASE("rank-one tangent side uses the flow form of the codim-1 route") {
  Model wts = wt_swapped(0.3);
  GridSpec g = GridSpec::uniform(wts, 24);
  const double jd = j_mix(wts, g, JMixMethod::Direct);
  const double jc = j_mix(wts, g, JMixMethod::Codim1);
  CHECK(jc == doctest::Approx(jd).epsilon(1e-7).scale(1.0));
}

TEST_CASE("nonintegrable codimension-one distribution rejects codim-1 route") {
  Model ct = build_model("CT");
  GridSpec g = GridSpec::uniform(ct, 16);
  CHECK_THROWS_AS(j_mix(ct, g, JMixMethod::Codim1), ModelError);
  // flat and closed: both remaining routes give zero
  CHECK(std::abs(j_mix(ct, g, JMixMethod::Direct)) < 1e-10);
  CHECK(std::abs(j_mix(ct, g, JMixMethod::QForm)) < 1e-10);
}

TEST_CASE("four-torus models: direct and Q-form routes agree") {
  for (const char* name : {"NI4", "DT"}) {
    Model m = build_model(name);
    GridSpec g = GridSpec::uniform(m, 10);
    const double jd = j_mix(m, g, JMixMethod::Direct);
    const double jq = j_mix(m, g, JMixMethod::QForm);
    INFO(name);
    CHECK(jq == doctest::Approx(jd).epsilon(1e-7).scale(1e-6));
  }
  // twisted product (constant f1): nonnegative total mixed curvature
  Model dt = build_model("DT", {}, {{"f1", "0"}});
  const double j = j_mix(dt, GridSpec::uniform(dt, 10), JMixMethod::QForm);
  CHECK(j >= 0.0);
  CHECK(j > 1e-3);  // genuinely twisted, not flat
}

TEST_CASE("divergence theorem on closed models") {
  std::mt19937 rng(71);
  struct Case {
    const char* name;
    int grid;
  };
  for (Case c : {Case{"FlatTorus", 16}, Case{"WT", 16}, Case{"CT", 16},
                 Case{"NI4", 8}, Case{"DT", 12}}) {
    Model m = build_model(c.name);
    GridSpec g = GridSpec::uniform(m, c.grid);
    for (int trial = 0; trial < 5; ++trial) {
      auto xi = random_field(m.dim(), rng);
      const double r = integrate_scalar(
          m, g, [&](const double* x) { return divergence_at(m, xi, x); });
      INFO(std::string(c.name) << " trial " << trial);
      CHECK(std::abs(r) < 1e-9);
    }
  }
}

TEST_CASE("mean values and the critical constant on the warped torus") {
  Model wt = build_model("WT", {{"a", 0.3}});
  GridSpec g = GridSpec::uniform(wt, 32);
  GlobalMeans gd = mean_and_s_star(wt, g, Side::D);
  GlobalMeans gt = mean_and_s_star(wt, g, Side::Dtilde);
  // total divergences drop out: mean mixed curvature equals mean s_ex
  CHECK(gd.s_mix == doctest::Approx(gd.s_ex).epsilon(1e-9));
  CHECK(std::abs(gd.st_ex) < 1e-15);
  CHECK(std::abs(gd.T2) < 1e-15);
  CHECK(std::abs(gd.Tt2) < 1e-15);
  // codimension-one, both distributions integrable:
  //   S*(D side) = mean(S_mix) - 2 mean(s_ex),  S*(D-tilde side) = mean(S_mix)
  CHECK(gd.s_star ==
        doctest::Approx(gd.s_mix - 2.0 * gd.s_ex).epsilon(1e-12));
  CHECK(gt.s_star == doctest::Approx(gt.s_mix).epsilon(1e-12));
}

TEST_CASE("box axes use Gauss-Legendre") {
  Model sp = build_model("SphereLeaf");
  GridSpec g;
  g.npts[0] = 24;
  g.npts[1] = 8;
  g.npts[2] = 8;
  // density sin(theta) cos(theta) over the theta box times the two circles
  const double lo = 0.05, hi = M_PI / 2 - 0.05;
  const double expect = kTwoPi * kTwoPi * 0.5 *
                        (std::sin(hi) * std::sin(hi) -
                         std::sin(lo) * std::sin(lo));
  CHECK(volume(sp, g) == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(j_mix(sp, g, JMixMethod::Direct), ModelError);
  CHECK_THROWS_AS(mean_and_s_star(sp, g, Side::D), ModelError);
}

TEST_CASE("non-finite samples are rejected") {
  Model flat = build_model("FlatTorus");
  GridSpec g = GridSpec::uniform(flat, 8);
  CHECK_THROWS_AS(integrate_scalar(
                      flat, g,
                      [](const double*) {
                        return std::numeric_limits<double>::quiet_NaN();
                      }),
                  ModelError);
}
