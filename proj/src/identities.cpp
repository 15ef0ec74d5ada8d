#include "mixedcurv/identities.hpp"

#include <cmath>

namespace mixedcurv {

namespace {

struct Ctx {
  GeomSecond G;
  SecondForms<Jet1> sf;
  Frames fr;
  FrameForms ff;
  CurvatureBlock C;
};

Ctx make_ctx(const Model& m, const double* coords) {
  Ctx c{geom_second(m, coords)};
  c.sf = second_forms(c.G);
  c.fr = adapted_frame(c.G);
  c.ff = frame_forms(c.G, c.sf, c.fr);
  c.C = curvature_block(c.G);
  return c;
}

PartialRicci partial_ricci_from(const Ctx& c) {
  PartialRicci pr{Mat<double>(c.G.p), Mat<double>(c.G.n)};
  for (int i = 0; i < c.G.p; ++i)
    for (int j = 0; j < c.G.p; ++j) {
      double s = 0.0;
      for (int a = 0; a < c.G.n; ++a)
        s += c.C.curv(c.fr.E[a].data(), c.fr.F[i].data(), c.fr.E[a].data(),
                      c.fr.F[j].data());
      pr.rD(i, j) = s;
    }
  for (int a = 0; a < c.G.n; ++a)
    for (int b = 0; b < c.G.n; ++b) {
      double s = 0.0;
      for (int i = 0; i < c.G.p; ++i)
        s += c.C.curv(c.fr.F[i].data(), c.fr.E[a].data(), c.fr.F[i].data(),
                      c.fr.E[b].data());
      pr.rF(a, b) = s;
    }
  return pr;
}

double walczak_sum(const Ctx& c) {
  const FrameForms& f = c.ff;
  return f.H2 - f.h2 + f.T2 + f.Ht2 - f.ht2 + f.Tt2 +
         div_vec(c.G, c.sf.H) + div_vec(c.G, c.sf.Ht);
}

double frob(const Mat<double>& A) {
  double s = 0.0;
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) s += A(i, j) * A(i, j);
  return std::sqrt(s);
}

Mat<double> outer(const double* v, int n) {
  Mat<double> M(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = v[i] * v[j];
  return M;
}

// Scalar second fundamental form paired with a unit section w of the value
// distribution, carried at first order: B_{μν} = g_{λκ} w^κ X^λ_{μν}.
using Coord02 = std::array<std::array<Jet1, kMaxDim>, kMaxDim>;
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

double ricci_of(const Ctx& c, const Vec<Jet1>& N) {
  double s = 0.0;
  for (int mu = 0; mu < c.G.d; ++mu)
    for (int nu = 0; nu < c.G.d; ++nu)
      s += c.C.Ric[mu][nu] * value(N[mu]) * value(N[nu]);
  return s;
}

}  // namespace

PartialRicci partial_ricci(const Model& m, const double* coords) {
  return partial_ricci_from(make_ctx(m, coords));
}

double s_mix(const Model& m, const double* coords, SMixMethod method) {
  Ctx c = make_ctx(m, coords);
  switch (method) {
    case SMixMethod::FrameSum: {
      double s = 0.0;
      for (int a = 0; a < c.G.n; ++a)
        for (int i = 0; i < c.G.p; ++i)
          s += sectional(c.G, c.C, c.fr.E[a].data(), c.fr.F[i].data());
      return s;
    }
    case SMixMethod::TraceRD:
      return trace(partial_ricci_from(c).rD);
    case SMixMethod::TraceRF:
      return trace(partial_ricci_from(c).rF);
    case SMixMethod::Walczak:
      return walczak_sum(c);
  }
  throw std::logic_error("unknown s_mix method");
}

ExtrinsicScalars extrinsic_scalars(const Model& m, const double* coords) {
  GeomFirst G = geom_first(m, coords);
  FrameForms ff = frame_forms(G);
  ExtrinsicScalars out;
  out.s_ex = ff.s_ex();
  out.st_ex = ff.st_ex();
  out.T2 = ff.T2;
  out.Tt2 = ff.Tt2;
  out.q = out.s_ex + out.st_ex + out.T2 + out.Tt2;
  out.ric_ex = ff.h_dot_H();
  for (int a = 0; a < ff.n; ++a)
    for (int b = 0; b < ff.n; ++b) {
      double s = 0.0;
      for (int e = 0; e < ff.n; ++e)
        for (int i = 0; i < ff.p; ++i) s += ff.h[a][e][i] * ff.h[b][e][i];
      out.ric_ex(a, b) -= s;
    }
  out.ric_ex_t = ff.ht_dot_Ht();
  for (int i = 0; i < ff.p; ++i)
    for (int j = 0; j < ff.p; ++j) {
      double s = 0.0;
      for (int e = 0; e < ff.p; ++e)
        for (int a = 0; a < ff.n; ++a) s += ff.ht[i][e][a] * ff.ht[j][e][a];
      out.ric_ex_t(i, j) -= s;
    }
  return out;
}

std::map<std::string, double> identity_residuals_at(const Model& m,
                                                    const double* coords) {
  Ctx c = make_ctx(m, coords);
  const GeomSecond& G = c.G;
  const FrameForms& ff = c.ff;
  const Frames& fr = c.fr;
  const int n = G.n, p = G.p;
  std::map<std::string, double> out;

  PartialRicci pr = partial_ricci_from(c);
  const Mat<double> div_ht = restrict_perp(div_12(G, c.sf.ht), fr);
  const Mat<double> div_h = restrict_tan(div_12(G, c.sf.h), fr);
  const Mat<double> gradH = grad_cov(G, c.sf.H);
  const Mat<double> gradHt = grad_cov(G, c.sf.Ht);
  const Mat<double> defH = restrict_perp(sym2(gradH), fr);
  const Mat<double> defHt = restrict_tan(sym2(gradHt), fr);

  // symmetric part of the fundamental equation (p x p)
  out["fundamental-sym"] =
      frob(pr.rD - div_ht - ff.ht_dot_Ht() + ff.cas_shape_t() +
           ff.cas_skew_t() + ff.psi() - defH);

  // antisymmetric part: d_D H + div~ T~ - sum_a {A~_a, T~#_a}
  {
    Mat<double> anti(p);
    for (int a = 0; a < n; ++a) {
      const Mat<double> A = ff.shape_t(a);
      const Mat<double> B = ff.skew_t(a);
      anti = anti + (A * B + B * A);
    }
    out["fundamental-antisym"] =
        frob(restrict_perp(skew2(gradH), fr) +
             restrict_perp(div_12_proj(G, c.sf.Tt, true), fr) - anti);
  }

  // duals (n x n)
  out["fundamental-dual-sym"] =
      frob(pr.rF - div_h - ff.h_dot_H() + ff.cas_shape() + ff.cas_skew() +
           ff.psi_t() - defHt);
  {
    Mat<double> anti(n);
    for (int i = 0; i < p; ++i) {
      const Mat<double> A = ff.shape(i);
      const Mat<double> B = ff.skew(i);
      anti = anti + (A * B + B * A);
    }
    out["fundamental-dual-antisym"] =
        frob(restrict_tan(skew2(gradHt), fr) +
             restrict_tan(div_12_proj(G, c.sf.T, false), fr) - anti);
  }

  const double smix = trace(pr.rD);
  out["walczak"] = std::abs(smix - walczak_sum(c));
  out["walczak-ex"] =
      std::abs(smix - (ff.s_ex() + ff.st_ex() + ff.T2 + ff.Tt2 +
                       div_vec(G, c.sf.H) + div_vec(G, c.sf.Ht)));

  const bool tan_integrable = ff.T2 < 1e-12;
  const bool perp_integrable = ff.Tt2 < 1e-12;

  if (tan_integrable) {
    Mat<double> res = pr.rF - (div_h + ff.h_dot_H() - ff.cas_shape() -
                               ff.psi_t() + defHt);
    const double closed = frob(restrict_tan(skew2(gradHt), fr));
    out["foliated"] = std::hypot(frob(res), closed);
  }

  if (p == 1 && tan_integrable && perp_integrable) {
    Vec<Jet1> N = unit_field(G, false);
    Coord02 B = pair_down(G, c.sf.h, N);
    const Mat<double> nablaNh = restrict_tan(dir_deriv02(G, B, N), fr);
    Mat<double> AN(n);
    {
      Mat<double> Bv(G.d);
      for (int mu = 0; mu < G.d; ++mu)
        for (int nu = 0; nu < G.d; ++nu) Bv(mu, nu) = value(B[mu][nu]);
      AN = restrict_tan(Bv, fr);
    }
    Mat<double> RN(n);
    for (int a = 0; a < n; ++a) {
      double Nv[kMaxDim];
      for (int mu = 0; mu < G.d; ++mu) Nv[mu] = value(N[mu]);
      for (int b = 0; b < n; ++b)
        RN(a, b) = c.C.curv(Nv, fr.E[a].data(), Nv, fr.E[b].data());
    }
    out["codim1-jacobi"] = frob(RN + AN * AN - nablaNh +
                                outer(ff.Ht.data(), n) - defHt);
    out["codim1-ric"] =
        std::abs(ricci_of(c, N) - div_vec(G, c.sf.H) -
                 div_vec(G, c.sf.Ht) - (ff.H2 - ff.h2));
  }

  if (n == 1) {
    Vec<Jet1> N = unit_field(G, true);
    out["unitfield-ric"] =
        std::abs(ricci_of(c, N) - div_vec(G, c.sf.Ht) -
                 div_vec(G, c.sf.H) - (ff.Ht2 - ff.ht2 + ff.Tt2));
  }

  return out;
}

std::map<std::string, double> identity_residuals(
    const Model& m, const std::vector<std::array<double, kMaxDim>>& sample) {
  std::map<std::string, double> out;
  for (const auto& pt : sample) {
    auto res = identity_residuals_at(m, pt.data());
    for (const auto& [k, v] : res) {
      auto it = out.find(k);
      if (it == out.end() || v > it->second) out[k] = v;
    }
  }
  return out;
}

}  // namespace mixedcurv
