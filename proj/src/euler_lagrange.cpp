#include "mixedcurv/euler_lagrange.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "mixedcurv/geometry.hpp"

namespace mixedcurv {

namespace {

struct Ctx {
  GeomSecond G;
  SecondForms<Jet1> sf;
  Frames fr;
  FrameForms ff;
};

Ctx make_ctx(const Model& m, const double* x) {
  Ctx c{geom_second(m, x)};
  c.sf = second_forms(c.G);
  c.fr = adapted_frame(c.G);
  c.ff = frame_forms(c.G, c.sf, c.fr);
  return c;
}

double frob(const Mat<double>& A) {
  double s = 0.0;
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) s += A(i, j) * A(i, j);
  return std::sqrt(s);
}

double maxabs(const Mat<double>& A) {
  double s = 0.0;
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) s = std::max(s, std::abs(A(i, j)));
  return s;
}

Mat<double> scaled(const Mat<double>& A, double c) {
  Mat<double> B(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) B(i, j) = c * A(i, j);
  return B;
}

Mat<double> plus_diag(const Mat<double>& A, double c) {
  Mat<double> B = A;
  for (int i = 0; i < A.n; ++i) B(i, i) += c;
  return B;
}

double walczak(const Ctx& c, double divH, double divHt) {
  const FrameForms& f = c.ff;
  return f.H2 - f.h2 + f.T2 + f.Ht2 - f.ht2 + f.Tt2 + divH + divHt;
}

// g(u, v) at first order.
Jet1 pair_g(const GeomSecond& G, const Vec<Jet1>& u, const Vec<Jet1>& v) {
  Jet1 s(0.0);
  for (int mu = 0; mu < G.d; ++mu)
    for (int nu = 0; nu < G.d; ++nu)
      s += lower(G.g(mu, nu)) * u[mu] * v[nu];
  return s;
}

using Coord02 = std::array<std::array<Jet1, kMaxDim>, kMaxDim>;

// Scalar second fundamental form paired with a unit section w of the value
// distribution, carried at first order: B_{μν} = g_{λκ} w^κ X^λ_{μν}.
Coord02 pair_down(const GeomSecond& G, const Coord12& X, const Vec<Jet1>& w) {
  const int d = G.d;
  Coord02 B{};
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      Jet1 s(0.0);
      for (int lam = 0; lam < d; ++lam)
        for (int ka = 0; ka < d; ++ka)
          s += lower(G.g(lam, ka)) * w[ka] * X[lam][mu][nu];
      B[mu][nu] = s;
    }
  return B;
}

Mat<double> value_02(const Coord02& B, int d) {
  Mat<double> V(d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) V(mu, nu) = value(B[mu][nu]);
  return V;
}

// (∇_w B)_{μν} at values for a (0,2)-tensor carried at first order.
Mat<double> dir_deriv02(const GeomSecond& G, const Coord02& B,
                        const Vec<Jet1>& w) {
  const int d = G.d;
  Mat<double> out(d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      double s = 0.0;
      for (int al = 0; al < d; ++al) {
        double t = B[mu][nu].d[al];
        for (int sg = 0; sg < d; ++sg)
          t -= value(G.Gamma[sg][al][mu]) * value(B[sg][nu]) +
               value(G.Gamma[sg][al][nu]) * value(B[mu][sg]);
        s += value(w[al]) * t;
      }
      out(mu, nu) = s;
    }
  return out;
}

double ricci_nn(const CurvatureBlock& C, const Vec<Jet1>& N, int d) {
  double s = 0.0;
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      s += C.Ric[mu][nu] * value(N[mu]) * value(N[nu]);
  return s;
}

// Partial Ricci blocks via frame sums of the curvature.
Mat<double> partial_ricci_block(const Ctx& c, const CurvatureBlock& C,
                                bool dual) {
  const int pv = dual ? c.G.n : c.G.p;
  const int nf = dual ? c.G.p : c.G.n;
  auto vframe = [&](int i) {
    return dual ? c.fr.E[i].data() : c.fr.F[i].data();
  };
  auto fframe = [&](int a) {
    return dual ? c.fr.F[a].data() : c.fr.E[a].data();
  };
  Mat<double> r(pv);
  for (int i = 0; i < pv; ++i)
    for (int j = 0; j < pv; ++j) {
      double s = 0.0;
      for (int a = 0; a < nf; ++a)
        s += C.curv(fframe(a), vframe(i), fframe(a), vframe(j));
      r(i, j) = s;
    }
  return r;
}

// Partial-Ricci form of the general one-sided equation (lhs - rhs of the
// curvature grouping); equals the negative of el_matrix, which is how the
// two assemblies cross-check each other.
Mat<double> ricci_form(const Ctx& c, bool dual, double s_star) {
  const CurvatureBlock C = curvature_block(c.G);
  const Mat<double> rr = partial_ricci_block(c, C, dual);
  const FrameForms& f = c.ff;
  const double divH = div_vec(c.G, c.sf.H);
  const double divHt = div_vec(c.G, c.sf.Ht);
  const double smix = walczak(c, divH, divHt);
  const double divvH = dual ? divH : divHt;  // varied mean curvature
  const double divfH = dual ? divHt : divH;  // fixed mean curvature
  const Mat<double> dots = dual ? f.h_dot_H() : f.ht_dot_Ht();
  const Mat<double> casA = dual ? f.cas_shape() : f.cas_shape_t();
  const Mat<double> casT = dual ? f.cas_skew() : f.cas_skew_t();
  const Mat<double> psi = dual ? f.psi_t() : f.psi();
  const Mat<double> km = dual ? f.comm() : f.comm_t();
  const Mat<double> ph = dual ? f.phi_ht() : f.phi_h();
  const Mat<double> pT = dual ? f.phi_Tt() : f.phi_T();
  const Mat<double> grad_fH = grad_cov(c.G, dual ? c.sf.Ht : c.sf.H);
  const Mat<double> def =
      dual ? restrict_tan(sym2(grad_fH), c.fr)
           : restrict_perp(sym2(grad_fH), c.fr);
  Mat<double> out = rr - dots + casA - casT + psi - def + ph + pT - km;
  return plus_diag(out, -0.5 * (smix - s_star + divvH - divfH));
}

struct PointEval {
  Mat<double> R{0};   // residual in varied-frame components (1x1 for scalars)
  double cross = 0.0; // discrepancy between the two equivalent forms
};

PointEval eval_general(const Model& m, Side side, double s_star,
                       const double* x) {
  PointEval pe;
  pe.R = el_matrix(m, side, s_star, x);
  Ctx c = make_ctx(m, x);
  const Mat<double> rf = ricci_form(c, side == Side::Dtilde, s_star);
  pe.cross = maxabs(pe.R + rf);
  return pe;
}

// n = 1 flow-form cross-check: the curvature route through the unit tangent
// field N, free of the skew/shape commutator.
PointEval eval_unitfield_D(const Model& m, double s_star, const double* x) {
  PointEval pe;
  pe.R = el_matrix(m, Side::D, s_star, x);
  Ctx c = make_ctx(m, x);
  const int p = c.G.p, d = c.G.d;
  const CurvatureBlock C = curvature_block(c.G);
  const Vec<Jet1> N = unit_field(c.G, true);
  double Nv[kMaxDim];
  for (int mu = 0; mu < d; ++mu) Nv[mu] = value(N[mu]);
  Mat<double> RN(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      RN(i, j) = C.curv(Nv, c.fr.F[i].data(), Nv, c.fr.F[j].data());
  const Mat<double> At = c.ff.shape_t(0);
  const Mat<double> Kt = c.ff.skew_t(0);
  const Jet1 tau = pair_g(c.G, c.sf.Ht, N);  // Tr of the flow Weingarten
  const Mat<double> hb =
      restrict_perp(value_02(pair_down(c.G, c.sf.ht, N), d), c.fr);
  Mat<double> HH(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) HH(i, j) = c.ff.H[i] * c.ff.H[j];
  const Mat<double> defH =
      restrict_perp(sym2(grad_cov(c.G, c.sf.H)), c.fr);
  Vec<Jet1> w(d);
  for (int mu = 0; mu < d; ++mu) w[mu] = tau * N[mu] - c.sf.H[mu];
  const double rhs_half =
      0.5 * (ricci_nn(C, N, d) - s_star + div_vec(c.G, w));
  // the skew/shape commutator enters with the same orientation that the
  // finite-difference adjudication fixed for the general equation
  Mat<double> form = RN + At * At - Kt * Kt - c.ff.comm_t() -
                     scaled(hb, value(tau)) + HH - defH;
  form = plus_diag(form, -rhs_half);
  pe.cross = maxabs(pe.R + form);
  return pe;
}

PointEval eval_unitfield_TF(const Model& m, double s_star, const double* x) {
  Ctx c = make_ctx(m, x);
  PointEval pe;
  pe.R = Mat<double>(1);
  pe.R(0, 0) = c.ff.st_ex() - 3.0 * c.ff.Tt2 + s_star;
  const CurvatureBlock C = curvature_block(c.G);
  const Vec<Jet1> N = unit_field(c.G, true);
  const Jet1 tau = pair_g(c.G, c.sf.Ht, N);
  Vec<Jet1> w(c.G.d);
  for (int mu = 0; mu < c.G.d; ++mu) w[mu] = tau * N[mu] + c.sf.H[mu];
  const double ric = ricci_nn(C, N, c.G.d) + s_star - 4.0 * c.ff.Tt2 -
                     div_vec(c.G, w);
  pe.cross = std::abs(pe.R(0, 0) - ric);
  return pe;
}

PointEval eval_codim1_D(const Model& m, double s_star, const double* x) {
  Ctx c = make_ctx(m, x);
  PointEval pe;
  pe.R = Mat<double>(1);
  pe.R(0, 0) = c.ff.s_ex() + s_star;  // tau1^2 - tau2 + S*
  const CurvatureBlock C = curvature_block(c.G);
  const Vec<Jet1> N = unit_field(c.G, false);
  const Jet1 tau = pair_g(c.G, c.sf.H, N);
  Vec<Jet1> w(c.G.d);
  for (int mu = 0; mu < c.G.d; ++mu) w[mu] = tau * N[mu] + c.sf.Ht[mu];
  const double ric = ricci_nn(C, N, c.G.d) + s_star - div_vec(c.G, w);
  pe.cross = std::abs(pe.R(0, 0) - ric);
  return pe;
}

PointEval eval_codim1_TF(const Model& m, double s_star, const double* x) {
  Ctx c = make_ctx(m, x);
  const int d = c.G.d, n = c.G.n;
  const Vec<Jet1> N = unit_field(c.G, false);
  const Coord02 B = pair_down(c.G, c.sf.h, N);
  const Mat<double> nablaNh = restrict_tan(dir_deriv02(c.G, B, N), c.fr);
  const Mat<double> hb = restrict_tan(value_02(B, d), c.fr);
  const Jet1 tau = pair_g(c.G, c.sf.H, N);
  const double tv = value(tau);
  double Ntau = 0.0;
  for (int mu = 0; mu < d; ++mu) Ntau += value(N[mu]) * tau.d[mu];
  const double half = 0.5 * (c.ff.s_ex() - s_star);  // (tau1^2-tau2-S*)/2
  // flow route: div((h - tau1 g~)N) = grad_N h - N(tau1) g~ - tau1 h
  //             + tau1^2 g~
  Mat<double> A = nablaNh - scaled(hb, tv);
  A = plus_diag(A, tv * tv - Ntau - half);
  // Newton-operator route: the same divergence written through div(tau1 N)
  Vec<Jet1> w(d);
  for (int mu = 0; mu < d; ++mu) w[mu] = tau * N[mu];
  Mat<double> Bm = nablaNh - scaled(hb, tv);
  Bm = plus_diag(Bm, -div_vec(c.G, w) - half);
  (void)n;
  PointEval pe;
  pe.R = A;
  pe.cross = maxabs(A - Bm);
  return pe;
}

double conformal_scalar(const Ctx& c, bool dual, double s_star) {
  const FrameForms& f = c.ff;
  if (!dual) {
    const int p = c.G.p;
    return (p - 2) * f.s_ex() + p * f.st_ex() + (p + 2) * f.T2 +
           (p - 4) * f.Tt2 + 2.0 * (p - 1) * div_vec(c.G, c.sf.Ht) -
           p * s_star;
  }
  const int n = c.G.n;
  return (n - 2) * f.st_ex() + n * f.s_ex() + (n + 2) * f.Tt2 +
         (n - 4) * f.T2 + 2.0 * (n - 1) * div_vec(c.G, c.sf.H) - n * s_star;
}

Side variant_side(const std::string& v) {
  if (v == "Dtilde-general" || v == "foliated-TF" || v == "unitfield-TF" ||
      v == "codim1-TF" || v == "conformal-Dtilde")
    return Side::Dtilde;
  return Side::D;
}

bool known_variant(const std::string& v) {
  static const char* names[] = {
      "D-general",    "Dtilde-general", "foliated-D",      "foliated-TF",
      "unitfield-D",  "unitfield-TF",   "codim1-D",        "codim1-TF",
      "conformal-D",  "conformal-Dtilde", "trace-check"};
  for (const char* n : names)
    if (v == n) return true;
  return false;
}

// Deterministic interior lattice for pointwise checks.
std::vector<std::array<double, kMaxDim>> lattice(const Model& m,
                                                 int per_axis) {
  const int d = m.dim();
  std::vector<std::array<double, kMaxDim>> pts;
  std::array<int, kMaxDim> idx{};
  const int total = [&] {
    int t = 1;
    for (int i = 0; i < d; ++i) t *= per_axis;
    return t;
  }();
  pts.reserve(total);
  for (int k = 0; k < total; ++k) {
    int r = k;
    std::array<double, kMaxDim> x{};
    for (int i = 0; i < d; ++i) {
      idx[i] = r % per_axis;
      r /= per_axis;
      const AxisSpec& a = m.chart.axes[i];
      if (a.periodic)
        x[i] = (idx[i] + 0.31) * a.period / per_axis;
      else
        x[i] = a.lo + (idx[i] + 0.5) * (a.hi - a.lo) / per_axis;
    }
    pts.push_back(x);
  }
  return pts;
}

double max_tangent_nonintegrability(const Model& m, int per_axis) {
  double worst = 0.0;
  for (const auto& x : lattice(m, per_axis)) {
    GeomFirst G = geom_first(m, x.data());
    worst = std::max(worst, frame_forms(G).T2);
  }
  return worst;
}

void require_foliation(const Model& m, const std::string& variant) {
  if (max_tangent_nonintegrability(m, 5) > 1e-8)
    throw ModelError("variant '" + variant +
                     "' needs an integrable tangent distribution");
}

PointEval eval_point(const Model& m, const std::string& variant, Side side,
                     double s_star, const double* x) {
  if (variant == "D-general" || variant == "Dtilde-general" ||
      variant == "foliated-D" || variant == "foliated-TF")
    return eval_general(m, side, s_star, x);
  if (variant == "unitfield-D") return eval_unitfield_D(m, s_star, x);
  if (variant == "unitfield-TF") return eval_unitfield_TF(m, s_star, x);
  if (variant == "codim1-D") return eval_codim1_D(m, s_star, x);
  if (variant == "codim1-TF") return eval_codim1_TF(m, s_star, x);
  throw ModelError("unknown variant '" + variant + "'");
}

ELResidual el_residual_with(const Model& m, const GridSpec& grid,
                            const std::string& variant,
                            const GlobalMeans& means) {
  ELResidual out;
  out.variant = variant;
  out.means = means;
  const Side side = variant_side(variant);

  if (variant == "trace-check") {
    // integrated trace identity of the general equation; the constant is
    // the mean of the pointwise bracket, so the integral vanishes on any
    // closed adapted metric once the divergence terms drop out
    const int p = m.p();
    const double cmean = p * means.s_mix + 4.0 * means.T2 - 2.0 * means.Tt2 +
                         2.0 * means.s_ex;
    const double val = integrate_scalar(m, grid, [&](const double* x) {
      Ctx c = make_ctx(m, x);
      const double divH = div_vec(c.G, c.sf.H);
      const double divHt = div_vec(c.G, c.sf.Ht);
      const double frak = p * walczak(c, divH, divHt) + 4.0 * c.ff.T2 -
                          2.0 * c.ff.Tt2 + 2.0 * c.ff.s_ex();
      return frak - cmean - 2.0 * (1 - p) * divHt - p * divH;
    });
    out.sup_norm = std::abs(val);
    out.integral_norm = std::abs(val);
    return out;
  }

  if (variant == "conformal-D" || variant == "conformal-Dtilde") {
    const bool dual = side == Side::Dtilde;
    std::mutex mx;
    double sup = 0.0;
    auto v = integrate_multi(m, grid, 2, [&](const double* x, double* o) {
      Ctx c = make_ctx(m, x);
      const double r = conformal_scalar(c, dual, means.s_star);
      o[0] = r * r;
      o[1] = r;
      std::lock_guard<std::mutex> lk(mx);
      sup = std::max(sup, std::abs(r));
    });
    out.sup_norm = sup;
    out.integral_norm = std::sqrt(std::max(v[0], 0.0));
    // the mean of the conformal bracket vanishes identically on closed
    // models (that is how S* is defined), an assembly cross-check
    out.cross_check = std::abs(v[1]) / means.vol;
    return out;
  }

  if (variant == "foliated-D" || variant == "foliated-TF" ||
      variant == "codim1-D" || variant == "codim1-TF")
    require_foliation(m, variant);
  if ((variant == "unitfield-D" || variant == "unitfield-TF") && m.n != 1)
    throw ModelError("variant '" + variant +
                     "' needs a rank-one tangent distribution");
  if ((variant == "codim1-D" || variant == "codim1-TF") && m.p() != 1)
    throw ModelError("variant '" + variant +
                     "' needs a codimension-one tangent distribution");

  std::mutex mx;
  double sup = 0.0, cross = 0.0;
  const double I2 = integrate_scalar(m, grid, [&](const double* x) {
    PointEval pe = eval_point(m, variant, side, means.s_star, x);
    const double f = frob(pe.R);
    {
      std::lock_guard<std::mutex> lk(mx);
      sup = std::max(sup, f);
      cross = std::max(cross, pe.cross);
    }
    return f * f;
  });
  out.sup_norm = sup;
  out.integral_norm = std::sqrt(std::max(I2, 0.0));
  out.cross_check = cross;
  return out;
}

}  // namespace

Mat<double> el_matrix(const Model& m, Side side, double s_star,
                      const double* coords) {
  return plus_diag(dj_gradient_matrix(m, side, coords), -0.5 * s_star);
}

std::vector<std::string> el_variants(const Model& m) {
  std::vector<std::string> out{"D-general", "Dtilde-general", "conformal-D",
                               "conformal-Dtilde", "trace-check"};
  const bool tan_integrable = max_tangent_nonintegrability(m, 4) < 1e-8;
  if (tan_integrable) {
    out.push_back("foliated-D");
    out.push_back("foliated-TF");
  }
  if (m.n == 1) {
    out.push_back("unitfield-D");
    out.push_back("unitfield-TF");
  }
  if (m.p() == 1 && tan_integrable) {
    out.push_back("codim1-D");
    out.push_back("codim1-TF");
  }
  return out;
}

ELResidual el_residual(const Model& m, const GridSpec& grid,
                       const std::string& variant) {
  if (!known_variant(variant))
    throw ModelError("unknown variant '" + variant + "'");
  if (!m.closed())
    throw ModelError("residuals of the global equations need a closed model");
  grid.validate(m);
  const GlobalMeans means = mean_and_s_star(m, grid, variant_side(variant));
  return el_residual_with(m, grid, variant, means);
}

CriticalityReport criticality_report(const Model& m, const GridSpec& grid,
                                     double tol) {
  CriticalityReport rep;
  rep.model = m.name;
  rep.tol = tol;
  rep.tol_fd = 1e-4;
  rep.closed = m.closed();

  if (rep.closed) {
    grid.validate(m);
    rep.means_D = mean_and_s_star(m, grid, Side::D);
    rep.means_Dt = mean_and_s_star(m, grid, Side::Dtilde);
    for (const std::string& v : el_variants(m)) {
      const GlobalMeans& means =
          variant_side(v) == Side::Dtilde ? rep.means_Dt : rep.means_D;
      ELResidual r = el_residual_with(m, grid, v, means);
      rep.entries.push_back({v, r.sup_norm, r.integral_norm, r.cross_check,
                             r.sup_norm < tol, "global"});
    }
  } else {
    rep.notes.push_back(
        "open chart: the closed-manifold variants are skipped; pointwise "
        "criteria are reported instead");
    if (m.dim() == 2 && m.dist_mode == DistMode::Span) {
      double sup = 0.0;
      bool conformal = true;
      try {
        for (const auto& x : lattice(m, 24))
          sup = std::max(sup, std::abs(surface_conformal(m, x.data()).K));
      } catch (const ModelError&) {
        conformal = false;
        sup = 0.0;
        for (const auto& x : lattice(m, 24))
          sup = std::max(sup,
                         std::abs(s_mix(m, x.data(), SMixMethod::Walczak)));
      }
      rep.entries.push_back({"pointwise-K", sup, 0.0, 0.0, sup < tol,
                             conformal ? "pointwise K = 0 (conformal surface)"
                                       : "pointwise mixed curvature = 0"});
    }
    if (m.scalar_u) {
      double sup = 0.0;
      for (const auto& x : lattice(m, 12)) {
        LevelSetQuantities q = level_set_quantities(m, x.data());
        sup = std::max(sup, std::abs(q.res_levelset));
      }
      rep.entries.push_back({"pointwise-levelset", sup, 0.0, 0.0, sup < tol,
                             "pointwise level-set criterion"});
    }
  }

  // codimension-one flow triple (volume-preserving flow criterion)
  if (m.p() == 1 && m.dist_mode == DistMode::Span &&
      max_tangent_nonintegrability(m, 5) < 1e-8) {
    double tau_sup = 0.0, s2min = 0.0, s2max = 0.0, dnh_sup = 0.0;
    bool first = true;
    const int per = m.dim() <= 3 ? 10 : 6;
    for (const auto& x : lattice(m, per)) {
      Ctx c = make_ctx(m, x.data());
      const double tau1 = std::sqrt(std::max(c.ff.H2, 0.0));
      const double s2 = 0.5 * (c.ff.H2 - c.ff.h2);
      const Vec<Jet1> N = unit_field(c.G, false);
      const Coord02 B = pair_down(c.G, c.sf.h, N);
      const double dnh =
          frob(restrict_tan(dir_deriv02(c.G, B, N), c.fr));
      tau_sup = std::max(tau_sup, tau1);
      dnh_sup = std::max(dnh_sup, dnh);
      if (first) {
        s2min = s2max = s2;
        first = false;
      } else {
        s2min = std::min(s2min, s2);
        s2max = std::max(s2max, s2);
      }
    }
    rep.has_flow_data = true;
    rep.tau1_sup = tau_sup;
    rep.sigma2_defect = s2max - s2min;
    rep.sigma2_max = s2max;
    rep.nabla_N_h_sup = dnh_sup;
    const double sup = std::max({tau_sup, s2max - s2min, dnh_sup});
    rep.entries.push_back(
        {"flow-volume-preserving", sup, 0.0, 0.0,
         sup < tol && s2max <= tol,
         "pointwise: tau1 = 0, sigma2 a nonpositive constant, nabla_N h = "
         "0"});
    if (m.dim() == 3 && m.n == 2)
      rep.notes.push_back(
          "dimension 3: principal curvatures are constant iff tau1 and "
          "sigma2 are; the eigenvector-parallelism condition is monitored "
          "through the frame-covariant surrogate |nabla_N h| = 0");
  }
  return rep;
}

SurfaceConformal surface_conformal(const Model& m, const double* coords) {
  const int d = m.dim();
  if (d != 2 || m.n != 1 || m.dist_mode != DistMode::Span)
    throw ModelError("surface criterion needs d = 2 with a rank-1 span");
  Pt<Jet1> p1 = seed_point<Jet1>(coords, d);
  PtEnv<Jet1> env{p1};
  const double v0 = value(m.span[0][0].evaluate<Jet1>(env));
  const double v1 = value(m.span[0][1].evaluate<Jet1>(env));
  if (std::abs(v1) > 1e-12 * std::max(1.0, std::abs(v0)))
    throw ModelError("surface criterion needs leaves along the first axis");
  Mat<Jet1> g1(d);
  m.metric.at(p1, g1);
  const double scale = std::max(std::abs(value(g1(0, 0))), 1e-30);
  if (std::abs(value(g1(0, 1))) > 1e-12 * scale ||
      std::abs(value(g1(0, 0)) - value(g1(1, 1))) > 1e-12 * scale ||
      value(g1(0, 0)) <= 0.0)
    throw ModelError("surface criterion needs a conformally flat metric");
  SurfaceConformal out;
  const double ephi = value(g1(0, 0));
  out.phi = std::log(ephi);
  const double px = g1(0, 0).d[0] / ephi;  // phi_mu = d_mu g11 / g11
  const double py = g1(0, 0).d[1] / ephi;
  out.pde = px * px + 0.5 * py * py + ephi * py;
  out.K = -0.5 * out.pde / ephi;
  return out;
}

LevelSetQuantities level_set_quantities(const Model& m, const double* coords) {
  if (!m.scalar_u)
    throw ModelError("model '" + m.name + "' carries no level-set scalar");
  const int d = m.dim();
  LevelSetQuantities out;

  // closed-formula route: metric at first order for the connection, u at
  // second order for the Hessian
  Pt<Jet1> p1 = seed_point<Jet1>(coords, d);
  Mat<Jet1> g1(d);
  m.metric.at(p1, g1);
  const Mat<Jet1> gi1 = inverse(g1);
  double Gam[kMaxDim][kMaxDim][kMaxDim];
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l)
          s += value(gi1(k, l)) * (g1(l, j).d[i] + g1(l, i).d[j] -
                                   g1(i, j).d[l]);
        Gam[k][i][j] = 0.5 * s;
      }
  Pt<Jet2> p2 = seed_point<Jet2>(coords, d);
  PtEnv<Jet2> env{p2};
  const Jet2 u2 = m.scalar_u->evaluate<Jet2>(env);
  Jet1 du[kMaxDim];
  for (int mu = 0; mu < d; ++mu) du[mu] = deriv(u2, mu);
  Jet1 lam2(0.0);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) lam2 += gi1(mu, nu) * du[mu] * du[nu];
  if (value(lam2) < 1e-14)
    throw ModelError("grad u vanishes at the requested point");
  const Jet1 lam = sqrt(lam2);
  out.lambda = value(lam);

  double Hess[kMaxDim][kMaxDim];
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      double s = du[mu].d[nu];
      for (int sg = 0; sg < d; ++sg) s -= Gam[sg][mu][nu] * value(du[sg]);
      Hess[mu][nu] = s;
    }
  double lap = 0.0, hess2 = 0.0, gul = 0.0, gradlam2 = 0.0;
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      lap += value(gi1(mu, nu)) * Hess[mu][nu];
      gul += value(gi1(mu, nu)) * value(du[mu]) * lam.d[nu];
      gradlam2 += value(gi1(mu, nu)) * lam.d[mu] * lam.d[nu];
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be)
          hess2 += value(gi1(mu, al)) * value(gi1(nu, be)) * Hess[mu][nu] *
                   Hess[al][be];
    }
  const double n2u = gul / value(lam);  // N(N(u)) = (grad u)(lambda)/lambda
  out.tau1_formula = -lap / value(lam) + gul / value(lam2);
  // |Hess u|^2 splits as |A lambda|^2 (tangential block, giving tau2 after
  // the 1/lambda^2 scale) + 2 |tangential grad lambda|^2 (mixed row/column)
  // + (N(N(u)))^2 (normal-normal entry); remove the last two pieces.
  out.tau2_formula =
      (hess2 - 2.0 * (gradlam2 - n2u * n2u) - n2u * n2u) / value(lam2);
  out.res_levelset = (lap - n2u) * (lap - n2u) - hess2 + n2u * n2u;

  if (d == 2) {
    const double ux = value(du[0]), uy = value(du[1]);
    const double uxx = du[0].d[0], uxy = du[0].d[1];
    out.Lu = (ux * ux - uy * uy) * uxx + 2.0 * ux * uy * uxy;
    const double l02 = ux * ux + uy * uy;
    out.res_planar = -2.0 * (uxx * uxx + uxy * uxy) + out.Lu / l02 +
                     out.Lu * out.Lu / (l02 * l02);
  }

  // Weingarten (engine) route
  GeomFirst G = geom_first(m, coords);
  SecondForms<double> sf = second_forms(G);
  FrameForms ff = frame_forms(G, sf, adapted_frame(G));
  // orient tau1 against N = grad u / lambda, not the frame section
  double Nup[kMaxDim];
  for (int mu = 0; mu < d; ++mu) {
    double s = 0.0;
    for (int nu = 0; nu < d; ++nu) s += value(gi1(mu, nu)) * value(du[nu]);
    Nup[mu] = s / value(lam);
  }
  double tau1 = 0.0;
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      tau1 += value(g1(mu, nu)) * value(sf.H[mu]) * Nup[nu];
  out.tau1 = tau1;
  out.tau2 = ff.h2;
  return out;
}

}  // namespace mixedcurv
