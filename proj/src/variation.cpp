#include "mixedcurv/variation.hpp"

#include <cmath>
#include <random>

#include "mixedcurv/geometry.hpp"

namespace mixedcurv {

namespace {

// Sign of the skew/shape commutator term in the first variation of the
// squared s.f.f. norm, adjudicated by finite differences on a model where
// the commutator does not vanish (the non-integrable 4-torus).
constexpr double kCommSign = -1.0;

Model model_with_metric(const Model& base, std::vector<Expr> upper) {
  Model m = base;
  m.metric = metric_from_exprs(m.dim(), upper);
  m.metric_exprs = std::move(upper);
  m.reference.clear();
  m.source.reset();
  return m;
}

void check_family_names(const Expr& e, int d) {
  for (const std::string& nm : e.free_names()) {
    if (nm == "t") continue;
    if (nm.size() == 2 && nm[0] == 'x' && nm[1] >= '1' &&
        nm[1] < static_cast<char>('1' + d))
      continue;
    throw ModelError("unknown identifier '" + nm + "' in family metric");
  }
}

std::array<double, kMaxDim> sample_point(const Model& m, std::mt19937& rng) {
  std::array<double, kMaxDim> x{};
  for (int i = 0; i < m.dim(); ++i) {
    const AxisSpec& a = m.chart.axes[i];
    if (a.periodic) {
      std::uniform_real_distribution<double> U(0.0, a.period);
      x[i] = U(rng);
    } else {
      const double w = a.hi - a.lo;
      std::uniform_real_distribution<double> U(a.lo + 0.05 * w,
                                               a.hi - 0.05 * w);
      x[i] = U(rng);
    }
  }
  return x;
}

int varied_rank(const MetricFamily& fam) {
  switch (fam.side) {
    case VarSide::D:
      return fam.base.p();
    case VarSide::Dtilde:
      return fam.base.n;
    default:
      throw ModelError("family '" + fam.name +
                       "' needs a declared one-sided variation");
  }
}

// Forms at first order only, for finite differences in t (all consumers are
// frame-invariant scalars or plain coordinate components).
struct FdForms {
  SecondForms<double> sf;
  double h2, H2, T2, ht2, Ht2, Tt2;
};

FdForms fd_forms(const Model& m, const double* x) {
  GeomFirst G = geom_first(m, x);
  SecondForms<double> s = second_forms(G);
  FrameForms f = frame_forms(G, s, adapted_frame(G));
  return {std::move(s), f.h2, f.H2, f.T2, f.ht2, f.Ht2, f.Tt2};
}

// The four evaluations behind one Richardson-extrapolated derivative.
struct FdStencil {
  double h;
  FdForms p1, m1, p2, m2;

  FdStencil(const MetricFamily& fam, const double* x, double step = 1e-3)
      : h(step),
        p1(fd_forms(fam.at(step), x)),
        m1(fd_forms(fam.at(-step), x)),
        p2(fd_forms(fam.at(step / 2), x)),
        m2(fd_forms(fam.at(-step / 2), x)) {}

  template <class Get>
  double d(Get get) const {
    const double d1 = (get(p1) - get(m1)) / (2.0 * h);
    const double d2 = (get(p2) - get(m2)) / h;
    return (4.0 * d2 - d1) / 3.0;
  }
};

// Shared pointwise state for the lemma and gradient computations.
struct VCtx {
  bool dual;  // varied distribution is D-tilde
  GeomSecond G;
  SecondForms<Jet1> sf;
  Frames fr;
  FrameForms ff;
  int d, pv, nf;

  const Coord12& vf() const { return dual ? sf.h : sf.ht; }   // varied s.f.f.
  const Coord12& vT() const { return dual ? sf.T : sf.Tt; }
  const Vec<Jet1>& vH() const { return dual ? sf.H : sf.Ht; }
  const Coord12& ffm() const { return dual ? sf.ht : sf.h; }  // fixed s.f.f.
  const Coord12& fT() const { return dual ? sf.Tt : sf.T; }
  const Vec<Jet1>& fH() const { return dual ? sf.Ht : sf.H; }
  const Mat<Jet2>& Pval() const { return dual ? G.Pperp : G.Ptil; }
  const Mat<Jet2>& Parg() const { return dual ? G.Ptil : G.Pperp; }
  const double* vframe(int i) const {
    return dual ? fr.E[i].data() : fr.F[i].data();
  }
  const double* fframe(int a) const {
    return dual ? fr.F[a].data() : fr.E[a].data();
  }
  Mat<double> restrict_varied(const Mat<double>& B) const {
    return dual ? restrict_tan(B, fr) : restrict_perp(B, fr);
  }
  Mat<double> vcas_skew() const {
    return dual ? ff.cas_skew() : ff.cas_skew_t();
  }
  Mat<double> vcomm() const { return dual ? ff.comm() : ff.comm_t(); }
  Mat<double> vphi_fixed() const { return dual ? ff.phi_ht() : ff.phi_h(); }
  Mat<double> vphi_fixed_T() const {
    return dual ? ff.phi_Tt() : ff.phi_T();
  }
};

VCtx make_vctx(const Model& m0, bool dual, const double* x) {
  VCtx c;
  c.dual = dual;
  c.G = geom_second(m0, x);
  c.sf = second_forms(c.G);
  c.fr = adapted_frame(c.G);
  c.ff = frame_forms(c.G, c.sf, c.fr);
  c.d = c.G.d;
  c.pv = dual ? c.G.n : c.G.p;
  c.nf = dual ? c.G.p : c.G.n;
  return c;
}

Mat<Jet1> sharp_of(const VCtx& c, const Mat<Jet1>& S) {
  Mat<Jet1> Sh(c.d);
  for (int lam = 0; lam < c.d; ++lam)
    for (int mu = 0; mu < c.d; ++mu) {
      Jet1 s(0.0);
      for (int ka = 0; ka < c.d; ++ka)
        s += lower(c.G.ginv(lam, ka)) * S(ka, mu);
      Sh(lam, mu) = s;
    }
  return Sh;
}

double pair_frames(const VCtx& c, const Mat<double>& M, const Mat<double>& Sv) {
  double s = 0.0;
  for (int i = 0; i < c.pv; ++i)
    for (int j = 0; j < c.pv; ++j) {
      double sij = 0.0;
      for (int mu = 0; mu < c.d; ++mu)
        for (int nu = 0; nu < c.d; ++nu)
          sij += Sv(mu, nu) * c.vframe(i)[mu] * c.vframe(j)[nu];
      s += M(i, j) * sij;
    }
  return s;
}

// Gradient block of the total mixed curvature in varied-frame components.
Mat<double> gradient_matrix(const VCtx& c) {
  const int d = c.d;
  Coord12 C{};
  for (int lam = 0; lam < d; ++lam)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        Jet1 gblk(0.0);
        for (int ka = 0; ka < d; ++ka)
          gblk += lower(c.G.g(mu, ka)) * lower(c.Parg()(ka, nu));
        C[lam][mu][nu] = c.vf()[lam][mu][nu] - c.vH()[lam] * gblk;
      }
  const double divH = div_vec(c.G, c.sf.H);
  const double divHt = div_vec(c.G, c.sf.Ht);
  const double smix = c.ff.H2 - c.ff.h2 + c.ff.T2 + c.ff.Ht2 - c.ff.ht2 +
                      c.ff.Tt2 + divH + divHt;
  const Mat<double> divC = c.restrict_varied(div_12(c.G, C));
  const Mat<double> cas = c.vcas_skew(), km = c.vcomm();
  const Mat<double> ph = c.vphi_fixed(), pT = c.vphi_fixed_T();
  const double half = 0.5 * (smix - divH - divHt);
  Mat<double> M(c.pv);
  for (int i = 0; i < c.pv; ++i)
    for (int j = 0; j < c.pv; ++j)
      M(i, j) = -divC(i, j) + 2.0 * cas(i, j) - ph(i, j) - pT(i, j) -
                kCommSign * km(i, j) + (i == j ? half : 0.0);
  return M;
}

}  // namespace

Model MetricFamily::at(double t) const {
  std::vector<Expr> bound;
  bound.reserve(upper.size());
  for (const Expr& e : upper) bound.push_back(e.bind({{"t", t}}));
  return model_with_metric(base, std::move(bound));
}

MetricFamily make_family(const Model& base, VarSide side,
                         std::vector<Expr> upper, std::string name) {
  const int d = base.dim();
  if (static_cast<int>(upper.size()) != d * (d + 1) / 2)
    throw ModelError("family metric must list the full upper triangle");
  for (const Expr& e : upper) check_family_names(e, d);
  MetricFamily fam;
  fam.base = base;
  fam.upper = std::move(upper);
  fam.side = side;
  fam.name = name.empty() ? base.name + ":family" : std::move(name);
  return fam;
}

MetricFamily builtin_family(const Model& m, const std::string& name,
                            VarSide side) {
  if (m.metric_exprs.empty())
    throw ModelError("families require an expression-backed metric");
  const int d = m.dim();
  if (name == "static") {
    MetricFamily fam = make_family(m, side, m.metric_exprs, m.name + ":static");
    return fam;
  }
  if (name == "homothety") {
    // needs a coordinate-axis span so the varied block is a coordinate block
    std::array<bool, kMaxDim> tan{};
    for (const auto& field : m.span) {
      int axis = -1;
      for (int mu = 0; mu < d; ++mu) {
        double c;
        if (!field[mu].is_constant(&c))
          throw ModelError("homothety family needs a coordinate-axis span");
        if (c == 0.0) continue;
        if (c != 1.0 || axis >= 0)
          throw ModelError("homothety family needs a coordinate-axis span");
        axis = mu;
      }
      if (axis < 0) throw ModelError("degenerate span field");
      tan[axis] = true;
    }
    std::vector<Expr> upper;
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++idx) {
        const bool vi = side == VarSide::D ? !tan[i] : tan[i];
        const bool vj = side == VarSide::D ? !tan[j] : tan[j];
        if (vi && vj)
          upper.push_back(Expr::parse("(1+t)*(" +
                                      m.metric_exprs[idx].print() + ")"));
        else
          upper.push_back(m.metric_exprs[idx]);
      }
    MetricFamily fam = make_family(m, side, std::move(upper),
                                   m.name + ":homothety");
    fam.eps = 0.9;
    return fam;
  }
  throw ModelError("unknown builtin family '" + name + "'");
}

MetricFamily family_from_model(const Model& m) {
  if (!m.family) throw ModelError("model has no [family] section");
  VarSide side;
  if (m.family->side == "D")
    side = VarSide::D;
  else if (m.family->side == "Dtilde")
    side = VarSide::Dtilde;
  else if (m.family->side == "biconformal")
    side = VarSide::Biconformal;
  else if (m.family->side == "general")
    side = VarSide::General;
  else
    throw ModelError("unknown family side '" + m.family->side + "'");
  return make_family(m, side, m.family->upper, m.name + ":family");
}

Mat<Jet1> s_tensor(const MetricFamily& fam, const double* coords, double t) {
  const int d = fam.base.dim();
  Pt<Jet2> p;
  p.dim = d;
  for (int i = 0; i < d; ++i) p.x[i] = seed_var2(coords[i], i);
  p.x[kTSlot] = seed_var2(t, kTSlot);
  PtEnv<Jet2> env{p};
  Mat<Jet1> S(d);
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++idx) {
      const Jet1 dt = deriv(fam.upper[idx].evaluate<Jet2>(env), kTSlot);
      S(i, j) = dt;
      S(j, i) = dt;
    }
  return S;
}

void check_family(const MetricFamily& fam, int samples, unsigned seed) {
  const Model m0 = fam.at(0.0);
  const int d = m0.dim();
  std::mt19937 rng(seed);
  for (int k = 0; k < samples; ++k) {
    auto x = sample_point(m0, rng);
    // family starts at the base metric
    const Mat<double> g0 = metric_at(m0, x.data()).g;
    const Mat<double> gb = metric_at(fam.base, x.data()).g;
    double scale = 1.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) scale = std::max(scale, std::abs(gb(i, j)));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (std::abs(g0(i, j) - gb(i, j)) > 1e-9 * scale)
          throw ModelError("family '" + fam.name +
                           "' does not start at the base metric");
    GeomFirst G = geom_first(m0, x.data());
    const Mat<double> Sv = value_of(s_tensor(fam, x.data()));
    const Mat<double> Pt = value_of(G.Ptil), Pp = value_of(G.Pperp);
    double smax = 1.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) smax = std::max(smax, std::abs(Sv(i, j)));
    auto block = [&](const Mat<double>& A, const Mat<double>& B) {
      // (A^T S B)_{ab}
      double worst = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double s = 0.0;
          for (int mu = 0; mu < d; ++mu)
            for (int nu = 0; nu < d; ++nu)
              s += A(mu, a) * Sv(mu, nu) * B(nu, b);
          worst = std::max(worst, std::abs(s));
        }
      return worst;
    };
    if (block(Pt, Pp) > 1e-8 * smax)
      throw ModelError("family '" + fam.name + "' is not adapted");
    if (fam.side == VarSide::D && block(Pt, Pt) > 1e-8 * smax)
      throw ModelError("family '" + fam.name +
                       "' changes the tangent block despite its declared "
                       "side");
    if (fam.side == VarSide::Dtilde && block(Pp, Pp) > 1e-8 * smax)
      throw ModelError("family '" + fam.name +
                       "' changes the normal block despite its declared "
                       "side");
  }
}

FdResult fd_derivative(const std::function<double(double)>& q, double h) {
  const double d1 = (q(h) - q(-h)) / (2.0 * h);
  const double d2 = (q(h / 2) - q(-h / 2)) / h;
  FdResult r;
  r.value = (4.0 * d2 - d1) / 3.0;
  r.error = std::abs(d2 - d1);
  if (!std::isfinite(r.value))
    throw ModelError("non-finite finite-difference evaluation");
  return r;
}

std::map<std::string, double> lemma_residuals_at(const MetricFamily& fam,
                                                 const double* coords) {
  const bool dual = fam.side == VarSide::Dtilde;
  if (fam.side != VarSide::D && !dual)
    throw ModelError("lemma residuals need a declared one-sided family");
  const Model m0 = fam.at(0.0);
  VCtx c = make_vctx(m0, dual, coords);
  const int d = c.d;
  const Mat<Jet1> S = s_tensor(fam, coords);
  const Mat<Jet1> Sh = sharp_of(c, S);
  const Mat<double> Sv = value_of(S), Shv = value_of(Sh);
  FdStencil fd(fam, coords);

  std::map<std::string, double> out;
  auto put = [&out](const std::string& key, double lhs_minus_rhs,
                    double rhs_scale) {
    const double r = std::abs(lhs_minus_rhs) / std::max(1.0, rhs_scale);
    auto it = out.find(key);
    if (it == out.end() || r > it->second) out[key] = r;
  };

  // covariant derivative of S at values
  std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim> nS{};
  for (int rho = 0; rho < d; ++rho)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        double s = S(mu, nu).d[rho];
        for (int sg = 0; sg < d; ++sg)
          s -= value(c.G.Gamma[sg][rho][mu]) * Sv(sg, nu) +
               value(c.G.Gamma[sg][rho][nu]) * Sv(mu, sg);
        nS[rho][mu][nu] = s;
      }
  const Mat<double> Pv = value_of(c.Pval()), Pa = value_of(c.Parg());
  const Mat<double> giv = value_of(lower_of(c.G.ginv));

  // both integrability tensors are metric-independent
  for (int lam = 0; lam < d; ++lam)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        put("integrability-fixed",
            fd.d([&](const FdForms& f) {
              return value((dual ? f.sf.Tt : f.sf.T)[lam][mu][nu]);
            }),
            1.0);
        put("integrability-varied",
            fd.d([&](const FdForms& f) {
              return value((dual ? f.sf.T : f.sf.Tt)[lam][mu][nu]);
            }),
            1.0);
      }

  // s.f.f. of the varied distribution
  for (int lam = 0; lam < d; ++lam)
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        double a = 0.0, b = 0.0;
        for (int sg = 0; sg < d; ++sg) {
          a += (value(c.vf()[lam][sg][nu]) - value(c.vT()[lam][sg][nu])) *
               Shv(sg, mu);
          b += (value(c.vf()[lam][mu][sg]) + value(c.vT()[lam][mu][sg])) *
               Shv(sg, nu);
        }
        double grad = 0.0;
        for (int ka = 0; ka < d; ++ka)
          for (int rho = 0; rho < d; ++rho) {
            if (Pv(lam, ka) == 0.0 && giv(ka, rho) == 0.0) continue;
            double proj = 0.0;
            for (int al = 0; al < d; ++al)
              for (int be = 0; be < d; ++be)
                proj += nS[rho][al][be] * Pa(al, mu) * Pa(be, nu);
            grad += Pv(lam, ka) * giv(ka, rho) * proj;
          }
        const double rhs = 0.5 * (a + b - grad);
        const double lhs = fd.d([&](const FdForms& f) {
          return value((dual ? f.sf.h : f.sf.ht)[lam][mu][nu]);
        });
        put("sff-varied", lhs - rhs, std::abs(rhs));
      }

  // mean curvature of the varied distribution: -1/2 grad of Tr S#
  Jet1 trS(0.0);
  for (int mu = 0; mu < d; ++mu) trS += Sh(mu, mu);
  for (int lam = 0; lam < d; ++lam) {
    double rhs = 0.0;
    for (int ka = 0; ka < d; ++ka)
      for (int rho = 0; rho < d; ++rho)
        rhs += Pv(lam, ka) * giv(ka, rho) * trS.d[rho];
    rhs *= -0.5;
    const double lhs = fd.d([&](const FdForms& f) {
      return value((dual ? f.sf.H : f.sf.Ht)[lam]);
    });
    put("mean-varied", lhs - rhs, std::abs(rhs));
  }

  // fixed side evolves algebraically
  for (int lam = 0; lam < d; ++lam) {
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        double rhs = 0.0;
        for (int sg = 0; sg < d; ++sg)
          rhs -= Shv(lam, sg) * value(c.ffm()[sg][mu][nu]);
        const double lhs = fd.d([&](const FdForms& f) {
          return value((dual ? f.sf.ht : f.sf.h)[lam][mu][nu]);
        });
        put("sff-fixed", lhs - rhs, std::abs(rhs));
      }
    double rhsH = 0.0;
    for (int sg = 0; sg < d; ++sg)
      rhsH -= Shv(lam, sg) * value(c.fH()[sg]);
    const double lhsH = fd.d([&](const FdForms& f) {
      return value((dual ? f.sf.Ht : f.sf.H)[lam]);
    });
    put("mean-fixed", lhsH - rhsH, std::abs(rhsH));
  }

  // pointwise norm lines
  auto svec = [&](const double* u, const double* v) {
    double s = 0.0;
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) s += Sv(mu, nu) * u[mu] * v[nu];
    return s;
  };
  auto form_vec = [&](const Coord12& X, const double* u, const double* v,
                      double* out) {
    for (int lam = 0; lam < d; ++lam) {
      double s = 0.0;
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
          s += value(X[lam][mu][nu]) * u[mu] * v[nu];
      out[lam] = s;
    }
  };
  {
    double Hf[kMaxDim];
    for (int lam = 0; lam < d; ++lam) Hf[lam] = value(c.fH()[lam]);
    double rhs = svec(Hf, Hf);
    double rhsT = 0.0;
    for (int a = 0; a < c.nf; ++a)
      for (int b = 0; b < c.nf; ++b) {
        double hv[kMaxDim], tv[kMaxDim];
        form_vec(c.ffm(), c.fframe(a), c.fframe(b), hv);
        form_vec(c.fT(), c.fframe(a), c.fframe(b), tv);
        rhs -= svec(hv, hv);
        rhsT += svec(tv, tv);
      }
    const double lhs = fd.d([&](const FdForms& f) {
      return dual ? f.ht2 - f.Ht2 : f.h2 - f.H2;
    });
    put("norm-ex-fixed", lhs - rhs, std::abs(rhs));
    const double lhsT =
        fd.d([&](const FdForms& f) { return dual ? f.Tt2 : f.T2; });
    put("norm-T2-fixed", lhsT - rhsT, std::abs(rhsT));
  }
  {
    const Mat<double> K = c.vcas_skew();
    Mat<double> Sf(c.pv);
    for (int i = 0; i < c.pv; ++i)
      for (int j = 0; j < c.pv; ++j)
        Sf(i, j) = svec(c.vframe(i), c.vframe(j));
    double rhs = 0.0;
    for (int i = 0; i < c.pv; ++i)
      for (int j = 0; j < c.pv; ++j) rhs += 2.0 * K(i, j) * Sf(i, j);
    const double lhs =
        fd.d([&](const FdForms& f) { return dual ? f.T2 : f.Tt2; });
    put("norm-T2-varied", lhs - rhs, std::abs(rhs));

    // conformal specializations when S is a multiple of the varied block
    const double sbar = trace(Sf) / c.pv;
    double defect = 0.0;
    for (int i = 0; i < c.pv; ++i)
      for (int j = 0; j < c.pv; ++j)
        defect = std::max(defect,
                          std::abs(Sf(i, j) - (i == j ? sbar : 0.0)));
    if (defect <= 1e-9 * std::max(1.0, std::abs(sbar))) {
      Jet1 s(0.0);
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
          s += lower(c.G.ginv(mu, nu)) * S(mu, nu);
      s = s / double(c.pv);
      const double sv = value(s);
      double grads[kMaxDim];
      for (int lam = 0; lam < d; ++lam) {
        double t = 0.0;
        for (int ka = 0; ka < d; ++ka)
          for (int rho = 0; rho < d; ++rho)
            t += Pv(lam, ka) * giv(ka, rho) * s.d[rho];
        grads[lam] = t;
      }
      for (int lam = 0; lam < d; ++lam) {
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu) {
            double gblk = 0.0;
            for (int ka = 0; ka < d; ++ka)
              gblk += value(c.G.g(mu, ka)) * Pa(ka, nu);
            const double rhsv =
                sv * value(c.vf()[lam][mu][nu]) - 0.5 * grads[lam] * gblk;
            const double lhsv = fd.d([&](const FdForms& f) {
              return value((dual ? f.sf.h : f.sf.ht)[lam][mu][nu]);
            });
            put("conf-sff-varied", lhsv - rhsv, std::abs(rhsv));
            const double rhsf =
                -sv * value(c.ffm()[lam][mu][nu]);
            const double lhsf = fd.d([&](const FdForms& f) {
              return value((dual ? f.sf.ht : f.sf.h)[lam][mu][nu]);
            });
            put("conf-sff-fixed", lhsf - rhsf, std::abs(rhsf));
          }
        const double rhsv = -0.5 * c.pv * grads[lam];
        const double lhsv = fd.d([&](const FdForms& f) {
          return value((dual ? f.sf.H : f.sf.Ht)[lam]);
        });
        put("conf-mean-varied", lhsv - rhsv, std::abs(rhsv));
        const double rhsf = -sv * value(c.fH()[lam]);
        const double lhsf = fd.d([&](const FdForms& f) {
          return value((dual ? f.sf.Ht : f.sf.H)[lam]);
        });
        put("conf-mean-fixed", lhsf - rhsf, std::abs(rhsf));
      }
      // conformal norm lines (all pointwise)
      Vec<Jet1> sH(d);
      for (int lam = 0; lam < d; ++lam) sH[lam] = s * c.vH()[lam];
      const double divvH = div_vec(c.G, c.vH());
      const double line = sv * divvH - div_vec(c.G, sH);
      put("conf-norm-sff2-varied",
          fd.d([&](const FdForms& f) { return dual ? f.h2 : f.ht2; }) - line,
          std::abs(line));
      put("conf-norm-mean2-varied",
          fd.d([&](const FdForms& f) { return dual ? f.H2 : f.Ht2; }) -
              c.pv * line,
          std::abs(c.pv * line));
      const double fh2 = dual ? c.ff.ht2 : c.ff.h2;
      const double fH2 = dual ? c.ff.Ht2 : c.ff.H2;
      const double vT2 = dual ? c.ff.T2 : c.ff.Tt2;
      const double fT2 = dual ? c.ff.Tt2 : c.ff.T2;
      put("conf-norm-sff2-fixed",
          fd.d([&](const FdForms& f) { return dual ? f.ht2 : f.h2; }) +
              sv * fh2,
          std::abs(sv * fh2));
      put("conf-norm-mean2-fixed",
          fd.d([&](const FdForms& f) { return dual ? f.Ht2 : f.H2; }) +
              sv * fH2,
          std::abs(sv * fH2));
      put("conf-norm-T2-varied",
          fd.d([&](const FdForms& f) { return dual ? f.T2 : f.Tt2; }) +
              2.0 * sv * vT2,
          std::abs(2.0 * sv * vT2));
      put("conf-norm-T2-fixed",
          fd.d([&](const FdForms& f) { return dual ? f.Tt2 : f.T2; }) -
              sv * fT2,
          std::abs(sv * fT2));
    }
  }
  return out;
}

std::map<std::string, double> lemma_residuals_integrated(
    const MetricFamily& fam, const GridSpec& grid) {
  const bool dual = fam.side == VarSide::Dtilde;
  if (fam.side != VarSide::D && !dual)
    throw ModelError("lemma residuals need a declared one-sided family");
  const Model m0 = fam.at(0.0);
  if (!m0.closed())
    throw ModelError("integrated lemma residuals need a closed model");
  const double h = 1e-3;
  const Model mp1 = fam.at(h), mm1 = fam.at(-h), mp2 = fam.at(h / 2),
              mm2 = fam.at(-h / 2);
  auto rich = [&](double qp1, double qm1, double qp2, double qm2) {
    const double d1 = (qp1 - qm1) / (2.0 * h);
    const double d2 = (qp2 - qm2) / h;
    return (4.0 * d2 - d1) / 3.0;
  };
  auto v = integrate_multi(m0, grid, 4, [&](const double* x, double* out) {
    VCtx c = make_vctx(m0, dual, x);
    const Mat<double> Sv = value_of(s_tensor(fam, x));
    auto scal = [&](const Model& m, bool mean2) {
      FdForms f = fd_forms(m, x);
      if (mean2) return dual ? f.H2 : f.Ht2;
      return dual ? f.h2 : f.ht2;
    };
    out[0] = rich(scal(mp1, false), scal(mm1, false), scal(mp2, false),
                  scal(mm2, false));
    Mat<double> divf = c.restrict_varied(div_12(c.G, c.vf()));
    const Mat<double> km = c.vcomm();
    for (int i = 0; i < c.pv; ++i)
      for (int j = 0; j < c.pv; ++j) divf(i, j) += kCommSign * km(i, j);
    out[1] = pair_frames(c, divf, Sv);
    out[2] = rich(scal(mp1, true), scal(mm1, true), scal(mp2, true),
                  scal(mm2, true));
    double trS = 0.0;
    const Mat<double> giv = value_of(lower_of(c.G.ginv));
    for (int mu = 0; mu < c.d; ++mu)
      for (int nu = 0; nu < c.d; ++nu) trS += giv(mu, nu) * Sv(mu, nu);
    out[3] = div_vec(c.G, c.vH()) * trS;
  });
  std::map<std::string, double> out;
  out["int-norm-sff2-varied"] =
      std::abs(v[0] - v[1]) / std::max(1.0, std::abs(v[1]));
  out["int-norm-mean2-varied"] =
      std::abs(v[2] - v[3]) / std::max(1.0, std::abs(v[3]));
  return out;
}

double NormalizedFamily::phi(double t) const {
  const double vt = volume(fam.at(t), grid);
  return std::pow(vt / vol0, -2.0 / varied_rank(fam));
}

Model NormalizedFamily::at(double t) const {
  Model m = fam.at(t);
  const double ph = phi(t);
  const bool scale_perp = fam.side == VarSide::D;
  const std::vector<Expr> upper = m.metric_exprs;
  const auto span = m.span;
  const int d = m.dim(), n = m.n;
  m.metric = make_metric_source([=](const auto& pt, auto& g) {
    using J = std::decay_t<decltype(g(0, 0))>;
    PtEnv<J> env{pt};
    Mat<J> g0(d);
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++idx) {
        g0(i, j) = upper[idx].template evaluate<J>(env);
        g0(j, i) = g0(i, j);
      }
    // tangent block via the projector onto the span
    Mat<J> V(d);
    for (int k = 0; k < n; ++k)
      for (int mu = 0; mu < d; ++mu)
        V(mu, k) = span[k][mu].template evaluate<J>(env);
    Mat<J> Gm(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        J s(0.0);
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu)
            s += V(mu, a) * g0(mu, nu) * V(nu, b);
        Gm(a, b) = s;
      }
    Mat<J> Gi = inverse(Gm);
    Mat<J> gtil(d);
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        J s(0.0);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            J wa(0.0), wb(0.0);
            for (int ka = 0; ka < d; ++ka) {
              wa += g0(mu, ka) * V(ka, a);
              wb += g0(nu, ka) * V(ka, b);
            }
            s += wa * Gi(a, b) * wb;
          }
        gtil(mu, nu) = s;
      }
    g = Mat<J>(d);
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu)
        g(mu, nu) = scale_perp
                        ? gtil(mu, nu) + J(ph) * (g0(mu, nu) - gtil(mu, nu))
                        : (g0(mu, nu) - gtil(mu, nu)) + J(ph) * gtil(mu, nu);
  });
  m.metric_exprs.clear();
  return m;
}

NormalizedFamily normalize(const MetricFamily& fam, const GridSpec& grid) {
  if (!fam.base.closed())
    throw ModelError("volume normalization needs a closed model");
  varied_rank(fam);  // validates the declared side
  NormalizedFamily nf{fam, grid, volume(fam.at(0.0), grid)};
  return nf;
}

Mat<double> dj_gradient_matrix(const Model& m, Side side,
                               const double* coords) {
  VCtx c = make_vctx(m, side == Side::Dtilde, coords);
  return gradient_matrix(c);
}

double dj_gradient_pairing(
    const Model& m, Side side, const GridSpec& grid,
    const std::function<Mat<double>(const double*)>& S) {
  return integrate_scalar(m, grid, [&](const double* x) {
    VCtx c = make_vctx(m, side == Side::Dtilde, x);
    return pair_frames(c, gradient_matrix(c), S(x));
  });
}

double dj_gradient_pairing(const MetricFamily& fam, const GridSpec& grid) {
  const Side side = fam.side == VarSide::Dtilde ? Side::Dtilde : Side::D;
  if (fam.side != VarSide::D && fam.side != VarSide::Dtilde)
    throw ModelError("gradient pairing needs a declared one-sided family");
  const Model m0 = fam.at(0.0);
  return dj_gradient_pairing(m0, side, grid, [&](const double* x) {
    return value_of(s_tensor(fam, x));
  });
}

}  // namespace mixedcurv
