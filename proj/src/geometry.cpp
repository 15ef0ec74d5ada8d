#include "mixedcurv/geometry.hpp"

#include <memory>

namespace mixedcurv {

MetricSource metric_from_exprs(int d, std::vector<Expr> upper) {
  const std::size_t want = static_cast<std::size_t>(d * (d + 1) / 2);
  if (upper.size() != want)
    throw ModelError("expected " + std::to_string(want) +
                     " upper-triangle metric components");
  auto exprs = std::make_shared<std::vector<Expr>>(std::move(upper));
  return make_metric_source([exprs, d](const auto& p, auto& g) {
    using J = std::decay_t<decltype(g(0, 0))>;
    PtEnv<J> env{p};
    std::size_t k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        g(i, j) = (*exprs)[k++].template evaluate<J>(env);
        g(j, i) = g(i, j);
      }
  });
}

MetricAt metric_at(const Model& m, const double* coords) {
  const int d = m.dim();
  Pt1 p = seed_point<Jet1>(coords, d);
  Mat<Jet1> g(d);
  m.metric.at1(p, g);
  detail::check_metric_values(g, m.name.empty() ? "model" : m.name.c_str());
  MetricAt out{value_of(g), value(sqrt(det(g)))};
  return out;
}

GeomFirst geom_first(const Model& m, const double* coords) {
  return detail::compute_geom<double>(m, coords);
}

GeomSecond geom_second(const Model& m, const double* coords) {
  return detail::compute_geom<Jet1>(m, coords);
}

namespace {

double gdot(const Mat<double>& g, const double* u, const double* v) {
  double s = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) s += g(i, j) * u[i] * v[j];
  return s;
}

// Gram-Schmidt step: subtract projections of c onto the rows accepted[0..k).
void subtract_projections(const Mat<double>& g, double* c,
                          const std::array<std::array<double, kMaxDim>,
                                           kMaxDim>& accepted,
                          int k) {
  for (int a = 0; a < k; ++a) {
    const double coef = gdot(g, c, accepted[a].data());
    for (int mu = 0; mu < g.n; ++mu) c[mu] -= coef * accepted[a][mu];
  }
}

}  // namespace

template <class S>
Frames adapted_frame(const Geom<S>& G) {
  Frames fr;
  fr.d = G.d;
  fr.n = G.n;
  fr.p = G.p;
  const Mat<double> g = value_of(G.g);

  // D-tilde frame.  With declared spanning fields: their declaration order;
  // otherwise (gradient mode) pivoted selection from projected axes.
  const bool declared = G.V.n == G.d;  // V filled only in Span mode
  if (declared) {
    for (int a = 0; a < G.n; ++a) {
      double c[kMaxDim] = {};
      for (int mu = 0; mu < G.d; ++mu) c[mu] = value(G.V(mu, a));
      subtract_projections(g, c, fr.E, a);
      const double nrm = std::sqrt(gdot(g, c, c));
      if (nrm < 1e-8)
        throw ModelError("spanning fields rank deficient at point");
      for (int mu = 0; mu < G.d; ++mu) fr.E[a][mu] = c[mu] / nrm;
    }
  }

  // Candidate pool P·e_mu with largest-residual pivoting, used for the
  // complement (and for D-tilde when no spanning fields were declared).
  auto pivoted = [&](const Mat<double>& P, int rank,
                     std::array<std::array<double, kMaxDim>, kMaxDim>& out) {
    bool used[kMaxDim] = {};
    for (int k = 0; k < rank; ++k) {
      int best_mu = -1;
      double best_nrm = 0.0;
      double best_c[kMaxDim] = {};
      for (int mu = 0; mu < G.d; ++mu) {
        if (used[mu]) continue;
        double c[kMaxDim] = {};
        for (int lam = 0; lam < G.d; ++lam) c[lam] = P(lam, mu);
        subtract_projections(g, c, out, k);
        const double nrm = std::sqrt(std::max(0.0, gdot(g, c, c)));
        if (nrm > best_nrm) {
          best_nrm = nrm;
          best_mu = mu;
          for (int lam = 0; lam < G.d; ++lam) best_c[lam] = c[lam];
        }
      }
      if (best_mu < 0 || best_nrm < 1e-8)
        throw ModelError("projector rank deficient while building frame");
      used[best_mu] = true;
      for (int lam = 0; lam < G.d; ++lam)
        out[k][lam] = best_c[lam] / best_nrm;
    }
  };

  if (!declared) pivoted(value_of(G.Ptil), G.n, fr.E);
  pivoted(value_of(G.Pperp), G.p, fr.F);
  return fr;
}

template Frames adapted_frame<double>(const Geom<double>&);
template Frames adapted_frame<Jet1>(const Geom<Jet1>&);

CurvatureBlock curvature_block(const GeomSecond& G) {
  CurvatureBlock C;
  C.d = G.d;
  const int d = G.d;
  // R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{iσ}Γ^σ_{jk} − Γ^l_{jσ}Γ^σ_{ik}
  double Rup[kMaxDim][kMaxDim][kMaxDim][kMaxDim];
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double s = G.Gamma[l][j][k].d[i] - G.Gamma[l][i][k].d[j];
          for (int sg = 0; sg < d; ++sg)
            s += G.Gamma[l][i][sg].v * G.Gamma[sg][j][k].v -
                 G.Gamma[l][j][sg].v * G.Gamma[sg][i][k].v;
          Rup[l][i][j][k] = s;
        }
  const Mat<double> g = value_of(G.g);
  const Mat<double> gi = value_of(G.ginv);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int mm = 0; mm < d; ++mm) s += g(l, mm) * Rup[mm][i][j][k];
          C.Rlow[i][j][k][l] = s;
        }
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += Rup[i][i][j][k];
      C.Ric[j][k] = s;
    }
  C.scal = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) C.scal += gi(j, k) * C.Ric[j][k];
  return C;
}

double sectional(const GeomSecond& G, const CurvatureBlock& C,
                 const double* v, const double* w) {
  const Mat<double> g = value_of(G.g);
  const double vv = gdot(g, v, v), ww = gdot(g, w, w), vw = gdot(g, v, w);
  const double denom = vv * ww - vw * vw;
  if (denom < 1e-12 * std::max(1.0, vv * ww))
    throw ModelError("degenerate plane for sectional curvature");
  return C.curv(v, w, v, w) / denom;
}

}  // namespace mixedcurv
