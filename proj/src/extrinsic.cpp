#include "mixedcurv/extrinsic.hpp"

namespace mixedcurv {

// (∇_{P~∂μ}(P~∂ν))^σ = P~^α_μ (∂_α P~^σ_ν + Γ^σ_{αρ} P~^ρ_ν); the
// perp-projected sym/antisym parts are h and T, and swapping the projectors
// gives the dual pair.
template <class S>
SecondForms<S> second_forms(const Geom<S>& G) {
  const int d = G.d;
  SecondForms<S> sf;
  sf.d = d;
  sf.n = G.n;
  sf.p = G.p;
  sf.H = Vec<S>(d);
  sf.Ht = Vec<S>(d);

  auto build = [&](const auto& inner, const auto& outer, auto& sym_out,
                   auto& skew_out, Vec<S>& mean) {
    std::array<std::array<std::array<S, kMaxDim>, kMaxDim>, kMaxDim> M{};
    for (int sg = 0; sg < d; ++sg)
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) {
          S s(0.0);
          for (int al = 0; al < d; ++al) {
            S t = deriv(inner(sg, nu), al);
            for (int rho = 0; rho < d; ++rho)
              t += G.Gamma[sg][al][rho] * lower(inner(rho, nu));
            s += lower(inner(al, mu)) * t;
          }
          M[sg][mu][nu] = s;
        }
    for (int lam = 0; lam < d; ++lam)
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) {
          S a(0.0), b(0.0);
          for (int sg = 0; sg < d; ++sg) {
            const S pl = lower(outer(lam, sg));
            a += pl * (M[sg][mu][nu] + M[sg][nu][mu]) * 0.5;
            b += pl * (M[sg][mu][nu] - M[sg][nu][mu]) * 0.5;
          }
          sym_out[lam][mu][nu] = a;
          skew_out[lam][mu][nu] = b;
        }
    for (int lam = 0; lam < d; ++lam) {
      S s(0.0);
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
          s += lower(G.ginv(mu, nu)) * sym_out[lam][mu][nu];
      mean[lam] = s;
    }
  };

  build(G.Ptil, G.Pperp, sf.h, sf.T, sf.H);
  build(G.Pperp, G.Ptil, sf.ht, sf.Tt, sf.Ht);
  return sf;
}

template SecondForms<double> second_forms(const Geom<double>&);
template SecondForms<Jet1> second_forms(const Geom<Jet1>&);

namespace {

// Lowers the value index: out[κ][μ][ν] = g_{κλ} X^λ_{μν}.
template <class S>
void flat_values(const Mat<double>& gv,
                 const std::array<std::array<std::array<S, kMaxDim>, kMaxDim>,
                                  kMaxDim>& X,
                 std::array<std::array<std::array<double, kMaxDim>, kMaxDim>,
                            kMaxDim>& out,
                 int d) {
  for (int ka = 0; ka < d; ++ka)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        double s = 0.0;
        for (int lam = 0; lam < d; ++lam)
          s += gv(ka, lam) * value(X[lam][mu][nu]);
        out[ka][mu][nu] = s;
      }
}

}  // namespace

template <class S>
FrameForms frame_forms(const Geom<S>& G, const SecondForms<S>& sf,
                       const Frames& fr) {
  const int d = G.d, n = G.n, p = G.p;
  FrameForms ff;
  ff.d = d;
  ff.n = n;
  ff.p = p;
  ff.fr = fr;
  const Mat<double> gv = value_of(G.g);

  std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim> hf{},
      Tf{}, htf{}, Ttf{};
  flat_values(gv, sf.h, hf, d);
  flat_values(gv, sf.T, Tf, d);
  flat_values(gv, sf.ht, htf, d);
  flat_values(gv, sf.Tt, Ttf, d);

  auto contract = [&](const auto& Xf, const double* u, const double* v,
                      const double* w) {
    double s = 0.0;
    for (int ka = 0; ka < d; ++ka)
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
          s += Xf[ka][mu][nu] * w[ka] * u[mu] * v[nu];
    return s;
  };

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < p; ++i) {
        ff.h[a][b][i] =
            contract(hf, fr.E[a].data(), fr.E[b].data(), fr.F[i].data());
        ff.T[a][b][i] =
            contract(Tf, fr.E[a].data(), fr.E[b].data(), fr.F[i].data());
        ff.h2 += ff.h[a][b][i] * ff.h[a][b][i];
        ff.T2 += ff.T[a][b][i] * ff.T[a][b][i];
      }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int a = 0; a < n; ++a) {
        ff.ht[i][j][a] =
            contract(htf, fr.F[i].data(), fr.F[j].data(), fr.E[a].data());
        ff.Tt[i][j][a] =
            contract(Ttf, fr.F[i].data(), fr.F[j].data(), fr.E[a].data());
        ff.ht2 += ff.ht[i][j][a] * ff.ht[i][j][a];
        ff.Tt2 += ff.Tt[i][j][a] * ff.Tt[i][j][a];
      }

  ff.Hvec = Vec<double>(d);
  ff.Htvec = Vec<double>(d);
  for (int lam = 0; lam < d; ++lam) {
    ff.Hvec[lam] = value(sf.H[lam]);
    ff.Htvec[lam] = value(sf.Ht[lam]);
  }
  auto gdot = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) s += gv(mu, nu) * u[mu] * v[nu];
    return s;
  };
  for (int i = 0; i < p; ++i) {
    ff.H[i] = gdot(ff.Hvec.a.data(), fr.F[i].data());
    ff.H2 += ff.H[i] * ff.H[i];
  }
  for (int a = 0; a < n; ++a) {
    ff.Ht[a] = gdot(ff.Htvec.a.data(), fr.E[a].data());
    ff.Ht2 += ff.Ht[a] * ff.Ht[a];
  }
  return ff;
}

template <class S>
FrameForms frame_forms(const Geom<S>& G) {
  return frame_forms(G, second_forms(G), adapted_frame(G));
}

template FrameForms frame_forms(const Geom<double>&,
                                const SecondForms<double>&, const Frames&);
template FrameForms frame_forms(const Geom<Jet1>&, const SecondForms<Jet1>&,
                                const Frames&);
template FrameForms frame_forms(const Geom<double>&);
template FrameForms frame_forms(const Geom<Jet1>&);

Mat<double> FrameForms::shape(int i) const {
  Mat<double> A(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) A(a, b) = h[a][b][i];
  return A;
}

Mat<double> FrameForms::skew(int i) const {
  Mat<double> A(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) A(a, b) = T[a][b][i];
  return A;
}

Mat<double> FrameForms::shape_t(int a) const {
  Mat<double> A(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = ht[i][j][a];
  return A;
}

Mat<double> FrameForms::skew_t(int a) const {
  Mat<double> A(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = Tt[i][j][a];
  return A;
}

Mat<double> FrameForms::cas_shape() const {
  Mat<double> S(n);
  for (int i = 0; i < p; ++i) {
    const Mat<double> A = shape(i);
    S = S + A * A;
  }
  return S;
}

Mat<double> FrameForms::cas_skew() const {
  Mat<double> S(n);
  for (int i = 0; i < p; ++i) {
    const Mat<double> A = skew(i);
    S = S + A * A;
  }
  return S;
}

Mat<double> FrameForms::cas_shape_t() const {
  Mat<double> S(p);
  for (int a = 0; a < n; ++a) {
    const Mat<double> A = shape_t(a);
    S = S + A * A;
  }
  return S;
}

Mat<double> FrameForms::cas_skew_t() const {
  Mat<double> S(p);
  for (int a = 0; a < n; ++a) {
    const Mat<double> A = skew_t(a);
    S = S + A * A;
  }
  return S;
}

Mat<double> FrameForms::psi() const {
  Mat<double> P(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      P(i, j) = trace(shape(j) * shape(i)) + trace(skew(j) * skew(i));
  return P;
}

Mat<double> FrameForms::psi_t() const {
  Mat<double> P(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      P(a, b) = trace(shape_t(b) * shape_t(a)) + trace(skew_t(b) * skew_t(a));
  return P;
}

Mat<double> FrameForms::phi_h() const {
  Mat<double> P(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = H[i] * H[j];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s -= h[a][b][i] * h[a][b][j];
      P(i, j) = s;
    }
  return P;
}

Mat<double> FrameForms::phi_T() const {
  Mat<double> P(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s -= T[a][b][i] * T[a][b][j];
      P(i, j) = s;
    }
  return P;
}

Mat<double> FrameForms::phi_ht() const {
  Mat<double> P(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = Ht[a] * Ht[b];
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s -= ht[i][j][a] * ht[i][j][b];
      P(a, b) = s;
    }
  return P;
}

Mat<double> FrameForms::phi_Tt() const {
  Mat<double> P(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s -= Tt[i][j][a] * Tt[i][j][b];
      P(a, b) = s;
    }
  return P;
}

Mat<double> FrameForms::comm_t() const {
  Mat<double> K(p);
  for (int a = 0; a < n; ++a) {
    const Mat<double> A = shape_t(a);
    const Mat<double> B = skew_t(a);
    K = K + (B * A - A * B);
  }
  return K;
}

Mat<double> FrameForms::comm() const {
  Mat<double> K(n);
  for (int i = 0; i < p; ++i) {
    const Mat<double> A = shape(i);
    const Mat<double> B = skew(i);
    K = K + (B * A - A * B);
  }
  return K;
}

Mat<double> FrameForms::ht_dot_Ht() const {
  Mat<double> M(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += ht[i][j][a] * Ht[a];
      M(i, j) = s;
    }
  return M;
}

Mat<double> FrameForms::h_dot_H() const {
  Mat<double> M(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int i = 0; i < p; ++i) s += h[a][b][i] * H[i];
      M(a, b) = s;
    }
  return M;
}

namespace {

// sum_{α,λ} W(α,λ) (∇_α P)^λ_{μν} at values.
Mat<double> div_12_core(const GeomSecond& G, const Coord12& P,
                        const Mat<double>& W) {
  const int d = G.d;
  Mat<double> out(d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      double s = 0.0;
      for (int al = 0; al < d; ++al)
        for (int lam = 0; lam < d; ++lam) {
          const double w = W(al, lam);
          if (w == 0.0) continue;
          double t = P[lam][mu][nu].d[al];
          for (int sg = 0; sg < d; ++sg)
            t += value(G.Gamma[lam][al][sg]) * P[sg][mu][nu].v -
                 value(G.Gamma[sg][al][mu]) * P[lam][sg][nu].v -
                 value(G.Gamma[sg][al][nu]) * P[lam][mu][sg].v;
          s += w * t;
        }
      out(mu, nu) = s;
    }
  return out;
}

double div_vec_core(const GeomSecond& G, const Vec<Jet1>& X,
                    const Mat<double>& W) {
  const int d = G.d;
  double s = 0.0;
  for (int al = 0; al < d; ++al)
    for (int lam = 0; lam < d; ++lam) {
      const double w = W(al, lam);
      if (w == 0.0) continue;
      double t = X[lam].d[al];
      for (int sg = 0; sg < d; ++sg)
        t += value(G.Gamma[lam][al][sg]) * X[sg].v;
      s += w * t;
    }
  return s;
}

}  // namespace

Mat<double> div_12(const GeomSecond& G, const Coord12& P) {
  return div_12_core(G, P, Mat<double>::identity(G.d));
}

Mat<double> div_12_proj(const GeomSecond& G, const Coord12& P, bool tangent) {
  return div_12_core(G, P, value_of(tangent ? G.Ptil : G.Pperp));
}

double div_vec(const GeomSecond& G, const Vec<Jet1>& X) {
  return div_vec_core(G, X, Mat<double>::identity(G.d));
}

double div_vec_proj(const GeomSecond& G, const Vec<Jet1>& X, bool tangent) {
  return div_vec_core(G, X, value_of(tangent ? G.Ptil : G.Pperp));
}

Mat<double> grad_cov(const GeomSecond& G, const Vec<Jet1>& X) {
  const int d = G.d;
  const Mat<double> gv = value_of(G.g);
  Mat<double> B(d);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      double s = 0.0;
      for (int lam = 0; lam < d; ++lam) {
        double t = X[lam].d[mu];
        for (int sg = 0; sg < d; ++sg)
          t += value(G.Gamma[lam][mu][sg]) * X[sg].v;
        s += gv(nu, lam) * t;
      }
      B(mu, nu) = s;
    }
  return B;
}

Mat<double> sym2(const Mat<double>& B) {
  Mat<double> S(B.n);
  for (int i = 0; i < B.n; ++i)
    for (int j = 0; j < B.n; ++j) S(i, j) = 0.5 * (B(i, j) + B(j, i));
  return S;
}

Mat<double> skew2(const Mat<double>& B) {
  Mat<double> S(B.n);
  for (int i = 0; i < B.n; ++i)
    for (int j = 0; j < B.n; ++j) S(i, j) = 0.5 * (B(i, j) - B(j, i));
  return S;
}

Mat<double> restrict_tan(const Mat<double>& B, const Frames& fr) {
  Mat<double> R(fr.n);
  for (int a = 0; a < fr.n; ++a)
    for (int b = 0; b < fr.n; ++b) {
      double s = 0.0;
      for (int mu = 0; mu < B.n; ++mu)
        for (int nu = 0; nu < B.n; ++nu)
          s += B(mu, nu) * fr.E[a][mu] * fr.E[b][nu];
      R(a, b) = s;
    }
  return R;
}

Mat<double> restrict_perp(const Mat<double>& B, const Frames& fr) {
  Mat<double> R(fr.p);
  for (int i = 0; i < fr.p; ++i)
    for (int j = 0; j < fr.p; ++j) {
      double s = 0.0;
      for (int mu = 0; mu < B.n; ++mu)
        for (int nu = 0; nu < B.n; ++nu)
          s += B(mu, nu) * fr.F[i][mu] * fr.F[j][nu];
      R(i, j) = s;
    }
  return R;
}

Vec<Jet1> unit_field(const GeomSecond& G, bool tangent) {
  const int d = G.d;
  if ((tangent ? G.n : G.p) != 1)
    throw ModelError("unit_field needs a rank-one distribution");
  const Mat<Jet2>& proj = tangent ? G.Ptil : G.Pperp;
  const Mat<double> gv = value_of(G.g);
  int best_k = 0;
  double best = -1.0;
  for (int k = 0; k < d; ++k) {
    double nrm = 0.0;
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu)
        nrm += gv(mu, nu) * value(proj(mu, k)) * value(proj(nu, k));
    if (nrm > best) {
      best = nrm;
      best_k = k;
    }
  }
  if (best < 1e-16) throw ModelError("degenerate projector column");
  Vec<Jet1> xi(d);
  for (int mu = 0; mu < d; ++mu) xi[mu] = lower(proj(mu, best_k));
  Jet1 n2(0.0);
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu)
      n2 += lower(G.g(mu, nu)) * xi[mu] * xi[nu];
  const Jet1 inv = Jet1(1.0) / sqrt(n2);
  for (int mu = 0; mu < d; ++mu) xi[mu] = xi[mu] * inv;
  return xi;
}

}  // namespace mixedcurv
