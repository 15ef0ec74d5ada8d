#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mixedcurv/models.hpp"
#include "mixedcurv/variation.hpp"
#include "test_util.hpp"

using namespace mixedcurv;

namespace {

// Random smooth periodic coefficient of modest amplitude.
std::string random_coeff(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> C(-0.4, 0.4), P(0.0, 2.0 * M_PI);
  std::uniform_int_distribution<int> K(1, d);
  std::ostringstream s;
  s.precision(17);
  s << C(rng) << "+" << C(rng) << "*sin(x" << K(rng) << "+" << P(rng) << ")+"
    << C(rng) << "*cos(x" << K(rng) << "+" << P(rng) << ")";
  return s.str();
}

// Adapted family g_t = g + t * sum_{ab} lam_ab theta^a ⊗ theta^b, where the
// covectors theta annihilate the complementary (fixed) distribution, so the
// variation tensor is truncated to the declared side.
MetricFamily covector_family(
    const Model& m, VarSide side,
    const std::vector<std::array<std::string, kMaxDim>>& thetas,
    std::mt19937& rng, const std::string& name) {
  const int d = m.dim();
  const int r = int(thetas.size());
  std::vector<std::string> lam(r * r);
  for (int a = 0; a < r; ++a)
    for (int b = a; b < r; ++b) lam[a * r + b] = random_coeff(d, rng);
  std::vector<Expr> upper;
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++idx) {
      std::string terms;
      for (int a = 0; a < r; ++a)
        for (int b = a; b < r; ++b) {
          const std::string &tai = thetas[a][i], &taj = thetas[a][j];
          const std::string &tbi = thetas[b][i], &tbj = thetas[b][j];
          std::string prod;
          if (a == b) {
            if (tai == "0" || taj == "0") continue;
            prod = "(" + tai + ")*(" + taj + ")";
          } else {
            std::string p1, p2;
            if (tai != "0" && tbj != "0")
              p1 = "(" + tai + ")*(" + tbj + ")";
            if (tbi != "0" && taj != "0")
              p2 = "(" + tbi + ")*(" + taj + ")";
            if (p1.empty() && p2.empty()) continue;
            prod = p1.empty() ? p2 : (p2.empty() ? p1 : p1 + "+" + p2);
          }
          terms += (terms.empty() ? "" : "+") + ("(" + lam[a * r + b] +
                                                 ")*(" + prod + ")");
        }
      std::string e = m.metric_exprs[idx].print();
      if (!terms.empty()) e += "+t*(" + terms + ")";
      upper.push_back(Expr::parse(e));
    }
  return make_family(m, side, std::move(upper), name);
}

struct SideSpec {
  VarSide side;
  std::vector<std::array<std::string, kMaxDim>> thetas;
};

// Annihilator covectors of the fixed distribution for each builtin used here.
SideSpec side_spec(const std::string& name, VarSide side) {
  if (name == "WT") {
    if (side == VarSide::D) return {side, {{"0", "0", "1", ""}}};
    return {side, {{"1", "0", "0", ""}, {"0", "1", "0", ""}}};
  }
  if (name == "CT")  // D-tilde = span(e1, e2 + 0.5 cos(x1) e3)
    return {VarSide::D, {{"0", "-0.5*cos(x1)", "1", ""}}};
  if (name == "NI4")  // D-tilde = span((0,-0.5cos(x1),1,0), e4)
    return {VarSide::D,
            {{"1", "0", "0", "0"}, {"0", "1", "0.5*cos(x1)", "0"}}};
  if (name == "DT")
    return {VarSide::D, {{"0", "0", "1", "0"}, {"0", "0", "0", "1"}}};
  throw std::logic_error("no side spec for " + name);
}

double fd_of_j(const MetricFamily& fam, const GridSpec& g) {
  return fd_derivative([&](double t) {
           return j_mix(fam.at(t), g, JMixMethod::QForm);
         })
      .value;
}

}  // namespace

TEST_CASE("finite-difference helper") {
  FdResult r = fd_derivative([](double t) { return std::sin(t); });
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.error < 1e-6);
}

TEST_CASE("static family: zero variation tensor, zero residuals") {
  Model wt = build_model("WT", {{"a", 0.3}});
  MetricFamily fam = builtin_family(wt, "static", VarSide::D);
  check_family(fam, 5);
  std::mt19937 rng(3);
  for (int k = 0; k < 3; ++k) {
    auto x = testutil::random_point(wt, rng);
    Mat<double> S = value_of(s_tensor(fam, x.data()));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(S(i, j) == 0.0);
    for (const auto& [key, res] : lemma_residuals_at(fam, x.data())) {
      INFO(key);
      CHECK(res < 1e-12);
    }
  }
}

TEST_CASE("homothety of the normal block on the warped torus") {
  Model wt = build_model("WT", {{"a", 0.3}});
  MetricFamily fam = builtin_family(wt, "homothety", VarSide::D);
  check_family(fam, 8);
  GridSpec g = GridSpec::uniform(wt, 16);
  const double j0 = j_mix(wt, g, JMixMethod::Direct);

  // variation tensor is the normal-block metric itself
  std::mt19937 rng(5);
  for (int k = 0; k < 3; ++k) {
    auto x = testutil::random_point(wt, rng);
    Mat<double> S = value_of(s_tensor(fam, x.data()));
    CHECK(S(2, 2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(S(0, 0)) < 1e-14);
    CHECK(std::abs(S(0, 2)) < 1e-14);
    CHECK(std::abs(S(1, 2)) < 1e-14);
  }

  // scaling law of the functional along the family
  for (double t : {-0.5, 0.25, 1.0}) {
    const double jt = j_mix(fam.at(t), g, JMixMethod::Direct);
    CHECK(jt == doctest::Approx(j0 / std::sqrt(1.0 + t)).epsilon(1e-6));
  }
  CHECK(fd_of_j(fam, g) == doctest::Approx(-0.5 * j0).epsilon(1e-6));
  CHECK(dj_gradient_pairing(fam, g) == doctest::Approx(-0.5 * j0).epsilon(1e-4));

  // conformal specializations fire: S = g restricted to the normal block
  auto x = testutil::random_point(wt, rng);
  auto res = lemma_residuals_at(fam, x.data());
  CHECK(res.count("conf-sff-varied") == 1);
  CHECK(res.count("conf-norm-sff2-varied") == 1);
  for (const auto& [key, r] : res) {
    INFO(key);
    CHECK(r < 1e-5);
  }

  // volume normalization undoes a pure scaling of a rank-one block
  NormalizedFamily nf = normalize(fam, g);
  for (double t : {-0.4, 0.3, 0.8}) {
    CHECK(nf.phi(t) == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-9));
    CHECK(volume(nf.at(t), g) == doctest::Approx(nf.vol0).epsilon(1e-9));
  }
  // normalized derivative = raw derivative - (1/2) S* ∫ Tr_g S dvol
  GlobalMeans gm = mean_and_s_star(wt, g, Side::D);
  const double trS_int = volume(wt, g);  // Tr_g S = 1 here
  const double dj_norm =
      fd_derivative([&](double t) {
        return j_mix(nf.at(t), g, JMixMethod::QForm);
      }).value;
  CHECK(dj_norm == doctest::Approx(-0.5 * j0 - 0.5 * gm.s_star * trS_int)
                       .epsilon(1e-6)
                       .scale(std::abs(j0)));
  CHECK(std::abs(dj_norm) < 1e-6 * std::abs(j0));
}

TEST_CASE("volume evolves by half the metric trace of the variation") {
  std::mt19937 rng(11);
  Model wt = build_model("WT", {{"a", 0.3}});
  SideSpec sp = side_spec("WT", VarSide::D);
  MetricFamily fam = covector_family(wt, sp.side, sp.thetas, rng, "WT:vol");
  GridSpec g = GridSpec::uniform(wt, 12);
  const double lhs =
      fd_derivative([&](double t) { return volume(fam.at(t), g); }).value;
  const double rhs = integrate_scalar(wt, g, [&](const double* x) {
    GeomFirst G = geom_first(wt, x);
    const Mat<double> Sv = value_of(s_tensor(fam, x));
    const Mat<double> gi = value_of(G.ginv);
    double tr = 0.0;
    for (int mu = 0; mu < 3; ++mu)
      for (int nu = 0; nu < 3; ++nu) tr += gi(mu, nu) * Sv(mu, nu);
    return 0.5 * tr;
  });
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6).scale(1.0));
}

TEST_CASE("variation lemmas on random adapted families") {
  std::mt19937 rng(23);
  struct Cfg {
    const char* model;
    VarSide side;
    int grid;
  };
  for (Cfg c : {Cfg{"WT", VarSide::D, 12}, Cfg{"WT", VarSide::Dtilde, 12},
                Cfg{"CT", VarSide::D, 12}, Cfg{"NI4", VarSide::D, 8},
                Cfg{"DT", VarSide::D, 8}}) {
    Model m = build_model(c.model);
    SideSpec sp = side_spec(c.model, c.side);
    GridSpec g = GridSpec::uniform(m, c.grid);
    for (int trial = 0; trial < 3; ++trial) {
      MetricFamily fam = covector_family(m, sp.side, sp.thetas, rng,
                                         std::string(c.model) + ":rand");
      check_family(fam, 5, 100 * trial + 1);
      for (int k = 0; k < 4; ++k) {
        auto x = testutil::random_point(m, rng);
        for (const auto& [key, res] : lemma_residuals_at(fam, x.data())) {
          INFO(std::string(c.model) << " trial " << trial << " " << key);
          // both integrability tensors are metric-independent
          const double tol = key.rfind("integrability", 0) == 0 ? 1e-10 : 1e-5;
          CHECK(res < tol);
        }
      }
      for (const auto& [key, res] : lemma_residuals_integrated(fam, g)) {
        INFO(std::string(c.model) << " trial " << trial << " " << key);
        CHECK(res < 1e-4);
      }
    }
  }
}

TEST_CASE("commutator term is exercised on the non-integrable model") {
  // the integrated s.f.f. norm line fixes the sign of the commutator term;
  // make sure the adjudicating model does not degenerate
  Model m = build_model("NI4");
  std::mt19937 rng(31);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    auto x = testutil::random_point(m, rng);
    GeomFirst G = geom_first(m, x.data());
    const Mat<double> K = frame_forms(G).comm_t();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(K(i, j)));
  }
  CHECK(worst > 1e-3);
}

TEST_CASE("normal variations preserve umbilic tangent leaves") {
  std::mt19937 rng(41);
  Model dt = build_model("DT");
  SideSpec sp = side_spec("DT", VarSide::D);
  MetricFamily fam = covector_family(dt, sp.side, sp.thetas, rng, "DT:umb");
  for (double t : {-0.2, 0.0, 0.2}) {
    Model mt = fam.at(t);
    for (int k = 0; k < 6; ++k) {
      auto x = testutil::random_point(dt, rng);
      GeomFirst G = geom_first(mt, x.data());
      FrameForms ff = frame_forms(G);
      // umbilicity defect |h|^2 - |H|^2 / n
      CHECK(std::abs(ff.h2 - ff.H2 / 2.0) < 1e-9);
    }
  }
}

TEST_CASE("gradient pairing matches finite differences of the functional") {
  std::mt19937 rng(53);
  struct Cfg {
    const char* model;
    VarSide side;
    int grid;
  };
  for (Cfg c : {Cfg{"WT", VarSide::D, 12}, Cfg{"WT", VarSide::Dtilde, 12},
                Cfg{"CT", VarSide::D, 12}, Cfg{"NI4", VarSide::D, 8},
                Cfg{"DT", VarSide::D, 8}}) {
    Model m = build_model(c.model);
    SideSpec sp = side_spec(c.model, c.side);
    GridSpec g = GridSpec::uniform(m, c.grid);
    MetricFamily fam = covector_family(m, sp.side, sp.thetas, rng,
                                       std::string(c.model) + ":grad");
    const double fd = fd_of_j(fam, g);
    const double pair = dj_gradient_pairing(fam, g);
    INFO(std::string(c.model) << (c.side == VarSide::Dtilde ? " Dtilde" : " D"));
    CHECK(pair == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("family validation rejects misdeclared variations") {
  Model wt = build_model("WT", {{"a", 0.3}});
  // varies the tangent block but claims a normal variation
  std::mt19937 rng(61);
  SideSpec sp = side_spec("WT", VarSide::Dtilde);
  MetricFamily fam =
      covector_family(wt, VarSide::D, sp.thetas, rng, "WT:misdeclared");
  CHECK_THROWS_AS(check_family(fam), ModelError);
  // family that does not start at the base metric
  std::vector<Expr> upper = wt.metric_exprs;
  upper[5] = Expr::parse("2+t");
  MetricFamily off = make_family(wt, VarSide::D, upper, "WT:offset");
  CHECK_THROWS_AS(check_family(off), ModelError);
  // malformed component lists and stray names
  CHECK_THROWS_AS(make_family(wt, VarSide::D, {Expr::parse("1")}, "short"),
                  ModelError);
  std::vector<Expr> bad = wt.metric_exprs;
  bad[0] = Expr::parse("1+q");
  CHECK_THROWS_AS(make_family(wt, VarSide::D, bad, "names"), ModelError);
}

TEST_CASE("families declared in model configs") {
  Model wt = build_model("WT", {{"a", 0.3}});
  CHECK_THROWS_AS(family_from_model(wt), ModelError);
  Model m = wt;
  m.family = FamilyExprSpec{"D", {}};
  std::size_t idx = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j, ++idx) {
      std::string e = wt.metric_exprs[idx].print();
      if (i == 2 && j == 2) e = "(1+t)*(" + e + ")";
      m.family->upper.push_back(Expr::parse(e));
    }
  MetricFamily fam = family_from_model(m);
  CHECK(fam.side == VarSide::D);
  check_family(fam, 5);
  GridSpec g = GridSpec::uniform(wt, 12);
  const double j0 = j_mix(wt, g, JMixMethod::Direct);
  CHECK(fd_of_j(fam, g) == doctest::Approx(-0.5 * j0).epsilon(1e-6));
}
