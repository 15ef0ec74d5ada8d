#pragma once

#include "mixedcurv/model.hpp"

namespace mixedcurv {

// Pointwise geometric state at one of two jet depths:
//   S = double : metric carried as Jet1 — enough for first-order tensors
//                (projectors, second fundamental forms) at the point;
//   S = Jet1   : metric carried as Jet2 — first-order tensors keep their own
//                coordinate derivatives, enabling curvature and divergences.
template <class S>
struct Geom {
  using J = Jet<S>;
  int d = 0, n = 0, p = 0;
  Pt<J> pt;
  Mat<J> g, ginv;
  J density{};                // sqrt(det g)
  Mat<J> Ptil, Pperp;         // projectors, entry (mu, nu) = P^mu_nu
  Mat<J> V;                   // spanning fields of D-tilde as columns (Span)
  std::array<std::array<std::array<S, kMaxDim>, kMaxDim>, kMaxDim>
      Gamma{};                // Gamma[k][i][j] = Γ^k_{ij}
};

using GeomFirst = Geom<double>;
using GeomSecond = Geom<Jet1>;

// Computes metric, projectors, and Christoffel symbols at `coords`.
// Throws ModelError on positive-definiteness failure or rank deficiency.
GeomFirst geom_first(const Model& m, const double* coords);
GeomSecond geom_second(const Model& m, const double* coords);

// g-orthonormal adapted frame at a point (values only): E spans D-tilde,
// F spans D.  Built by Gram-Schmidt over the declared spanning fields in
// declaration order, then over projected coordinate candidates with
// largest-residual pivoting.
struct Frames {
  int d = 0, n = 0, p = 0;
  std::array<std::array<double, kMaxDim>, kMaxDim> E{};  // E[a][mu], a < n
  std::array<std::array<double, kMaxDim>, kMaxDim> F{};  // F[i][mu], i < p
};
template <class S>
Frames adapted_frame(const Geom<S>& G);

// Coordinate curvature in the standard convention
// R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_{[X,Y]}; lowered components
// R[i][j][k][l] = g(R(∂i,∂j)∂k, ∂l).  All consumer-facing quantities go
// through the accessors below, which apply the single sign boundary to the
// convention R^∇(X,Y) = ∇_Y∇_X − ∇_X∇_Y + ∇_{[X,Y]} used by the formulas
// this engine verifies (R^∇ = −R in the first two slots).
struct CurvatureBlock {
  int d = 0;
  std::array<std::array<std::array<std::array<double, kMaxDim>, kMaxDim>,
                        kMaxDim>,
             kMaxDim>
      Rlow{};
  std::array<std::array<double, kMaxDim>, kMaxDim> Ric{};  // usual Ricci
  double scal = 0.0;

  // g(R^∇(x, y) z, w) for coordinate-component vectors.
  double curv(const double* x, const double* y, const double* z,
              const double* w) const {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l)
            s -= Rlow[i][j][k][l] * x[i] * y[j] * z[k] * w[l];
    return s;
  }
};

CurvatureBlock curvature_block(const GeomSecond& G);

// Sectional curvature of span(v, w); throws on a degenerate plane.
double sectional(const GeomSecond& G, const CurvatureBlock& C,
                 const double* v, const double* w);

namespace detail {

template <class J>
void check_metric_values(const Mat<J>& g, const char* what) {
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (!std::isfinite(value(g(i, j))))
        throw ModelError(std::string("non-finite metric component in ") +
                         what);
  if (!is_positive_definite(value_of(g)))
    throw ModelError(std::string("metric not positive definite in ") + what);
}

// Spanning columns of D-tilde at the point, one jet level below the metric
// in gradient mode is impossible, so gradient mode is special-cased.
template <class S>
void fill_projectors(const Model& m, Geom<S>& G) {
  using J = Jet<S>;
  const int d = G.d, n = G.n;
  if (m.dist_mode == DistMode::Span) {
    G.V = Mat<J>(d);
    for (int k = 0; k < n; ++k) {
      PtEnv<J> env{G.pt};
      for (int mu = 0; mu < d; ++mu)
        G.V(mu, k) = m.span[k][mu].template evaluate<J>(env);
    }
    // Gram matrix Gm = V^T g V (n x n), Ptil = V Gm^{-1} V^T g.
    Mat<J> Gm(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        J s(0.0);
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu)
            s += G.V(mu, a) * G.g(mu, nu) * G.V(nu, b);
        Gm(a, b) = s;
      }
    if (std::abs(value(det(Gm))) < 1e-12)
      throw ModelError("distribution spanning fields are rank deficient");
    Mat<J> Gi = inverse(Gm);
    G.Ptil = Mat<J>(d);
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        J s(0.0);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int rho = 0; rho < d; ++rho)
              s += G.V(mu, a) * Gi(a, b) * G.V(rho, b) * G.g(rho, nu);
        G.Ptil(mu, nu) = s;
      }
  } else {
    // D = span(grad u), D-tilde = its complement; requires u one jet level
    // above the metric, so only the first-order pipeline supports it.
    if constexpr (!std::same_as<S, double>) {
      throw ModelError(
          "level-set models support first-order quantities only");
    } else {
      if (!m.scalar_u)
        throw ModelError("gradient-mode model lacks scalar u");
      Pt<Jet2> up;
      up.dim = d;
      for (int i = 0; i < d; ++i)
        up.x[i] = seed_var2(value(G.pt.x[i]), i);
      PtEnv<Jet2> uenv{up};
      Jet2 u = m.scalar_u->template evaluate<Jet2>(uenv);
      // du_mu as Jet1; N^mu = g^{mu nu} du_nu / |grad u|.
      Vec<Jet1> du(d), Nup(d);
      for (int mu = 0; mu < d; ++mu) du[mu] = u.d[mu];
      Jet1 lam2(0.0);
      for (int mu = 0; mu < d; ++mu) {
        Jet1 s(0.0);
        for (int nu = 0; nu < d; ++nu) s += G.ginv(mu, nu) * du[nu];
        Nup[mu] = s;
        lam2 += s * du[mu];
      }
      if (value(lam2) < 1e-20)
        throw ModelError("grad u vanishes at the queried point");
      G.Pperp = Mat<Jet1>(d);
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
          G.Pperp(mu, nu) = Nup[mu] * du[nu] / lam2;
      G.Ptil = Mat<Jet1>::identity(d) - G.Pperp;
      return;
    }
  }
  G.Pperp = Mat<J>::identity(d) - G.Ptil;
}

template <class S>
Geom<S> compute_geom(const Model& m, const double* coords) {
  using J = Jet<S>;
  Geom<S> G;
  G.d = m.dim();
  G.n = (m.dist_mode == DistMode::Span) ? m.n : m.dim() - 1;
  G.p = G.d - G.n;
  G.pt = seed_point<J>(coords, G.d);
  G.g = Mat<J>(G.d);
  m.metric.at(G.pt, G.g);
  check_metric_values(G.g, m.name.empty() ? "model" : m.name.c_str());
  G.ginv = inverse(G.g);
  G.density = sqrt(det(G.g));
  fill_projectors(m, G);
  // Γ^k_{ij} = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij), one level down.
  for (int k = 0; k < G.d; ++k)
    for (int i = 0; i < G.d; ++i)
      for (int j = i; j < G.d; ++j) {
        S s(0.0);
        for (int l = 0; l < G.d; ++l)
          s += lower(G.ginv(k, l)) *
               (deriv(G.g(j, l), i) + deriv(G.g(i, l), j) -
                deriv(G.g(i, j), l)) *
               0.5;
        G.Gamma[k][i][j] = s;
        G.Gamma[k][j][i] = s;
      }
  return G;
}

}  // namespace detail

}  // namespace mixedcurv
