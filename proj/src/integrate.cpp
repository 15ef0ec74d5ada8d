#include "mixedcurv/integrate.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "mixedcurv/geometry.hpp"

namespace mixedcurv {

namespace {

constexpr std::int64_t kPointBudget = std::int64_t(1) << 23;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

struct AxisNodes {
  std::vector<double> x, w;
};

AxisNodes axis_nodes(const AxisSpec& a, int n) {
  AxisNodes out;
  if (a.periodic) {
    out.x.resize(n);
    out.w.assign(n, a.period / n);
    for (int k = 0; k < n; ++k) out.x[k] = a.period * k / n;
  } else {
    gauss_legendre(n, out.x, out.w);
    const double mid = 0.5 * (a.lo + a.hi), half = 0.5 * (a.hi - a.lo);
    for (int k = 0; k < n; ++k) {
      out.x[k] = mid + half * out.x[k];
      out.w[k] *= half;
    }
  }
  return out;
}

double pairwise(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h) + pairwise(v + h, n - h);
}

}  // namespace

GridSpec GridSpec::defaults(const Model& m) {
  return uniform(m, m.dim() <= 3 ? 48 : 24);
}

GridSpec GridSpec::uniform(const Model& m, int n) {
  GridSpec g;
  for (int i = 0; i < m.dim(); ++i) g.npts[i] = n;
  return g;
}

void GridSpec::validate(const Model& m) const {
  std::int64_t total = 1;
  for (int i = 0; i < m.dim(); ++i) {
    const int n = npts[i];
    if (m.chart.axes[i].periodic ? n < 8 : n < 2)
      throw ModelError("grid too coarse on axis " + std::to_string(i + 1));
    total *= n;
    if (total > kPointBudget) throw ModelError("grid exceeds point budget");
  }
}

std::vector<double> integrate_multi(
    const Model& m, const GridSpec& grid, int k,
    const std::function<void(const double*, double*)>& f) {
  grid.validate(m);
  const int d = m.dim();
  std::array<AxisNodes, kMaxDim> ax;
  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) {
    ax[i] = axis_nodes(m.chart.axes[i], grid.npts[i]);
    total *= grid.npts[i];
  }

  // One slot per (point, field); lexicographic point order makes the
  // pairwise reduction independent of the thread count.
  std::vector<std::vector<double>> buf(k, std::vector<double>(total));
  std::atomic<bool> bad{false};

  auto worker = [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> out(k);
    double x[kMaxDim];
    for (std::int64_t idx = lo; idx < hi && !bad.load(); ++idx) {
      std::int64_t r = idx;
      double wgt = 1.0;
      for (int i = d - 1; i >= 0; --i) {
        const int ki = int(r % grid.npts[i]);
        r /= grid.npts[i];
        x[i] = ax[i].x[ki];
        wgt *= ax[i].w[ki];
      }
      const double dens = metric_at(m, x).density;
      f(x, out.data());
      for (int j = 0; j < k; ++j) {
        if (!std::isfinite(out[j])) {
          bad.store(true);
          break;
        }
        buf[j][idx] = out[j] * dens * wgt;
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned nt =
      unsigned(std::min<std::int64_t>(std::min(hw, 16u), total));
  if (nt <= 1) {
    worker(0, total);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errs(nt);
    for (unsigned t = 0; t < nt; ++t) {
      const std::int64_t lo = total * t / nt, hi = total * (t + 1) / nt;
      threads.emplace_back([&, t, lo, hi] {
        try {
          worker(lo, hi);
        } catch (...) {
          errs[t] = std::current_exception();
          bad.store(true);
        }
      });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  if (bad.load()) throw ModelError("non-finite integrand sample");

  std::vector<double> result(k);
  for (int j = 0; j < k; ++j) result[j] = pairwise(buf[j].data(), total);
  return result;
}

double integrate_scalar(const Model& m, const GridSpec& grid,
                        const std::function<double(const double*)>& f) {
  return integrate_multi(m, grid, 1,
                         [&](const double* x, double* out) { out[0] = f(x); })
      .front();
}

double volume(const Model& m, const GridSpec& grid) {
  return integrate_scalar(m, grid, [](const double*) { return 1.0; });
}

double j_mix(const Model& m, const GridSpec& grid, JMixMethod method) {
  if (!m.closed())
    throw ModelError("j_mix requires a closed (all-periodic) model");
  switch (method) {
    case JMixMethod::Direct:
      return integrate_scalar(m, grid, [&](const double* x) {
        return s_mix(m, x, SMixMethod::TraceRD);
      });
    case JMixMethod::QForm:
      return integrate_scalar(
          m, grid, [&](const double* x) { return extrinsic_scalars(m, x).q; });
    case JMixMethod::Codim1: {
      const int p = m.p();
      if (p != 1 && m.n != 1)
        throw ModelError("codim1 method requires rank 1 on one side");
      return integrate_scalar(m, grid, [&, p](const double* x) {
        GeomFirst G = geom_first(m, x);
        FrameForms ff = frame_forms(G);
        if (p == 1) {
          if (ff.T2 > 1e-10)
            throw ModelError(
                "codim1 method requires an integrable codimension-one "
                "distribution");
          const Mat<double> A = ff.shape(0);
          return trace(A) * trace(A) - trace(A * A);
        }
        const Mat<double> At = ff.shape_t(0);
        return trace(At) * trace(At) - trace(At * At) + ff.Tt2;
      });
    }
  }
  throw std::logic_error("unknown j_mix method");
}

GlobalMeans mean_and_s_star(const Model& m, const GridSpec& grid, Side side) {
  if (!m.closed())
    throw ModelError("mean_and_s_star requires a closed model");
  auto v = integrate_multi(m, grid, 6, [&](const double* x, double* out) {
    out[0] = 1.0;
    out[1] = s_mix(m, x, SMixMethod::TraceRD);
    const ExtrinsicScalars es = extrinsic_scalars(m, x);
    out[2] = es.s_ex;
    out[3] = es.st_ex;
    out[4] = es.T2;
    out[5] = es.Tt2;
  });
  GlobalMeans gm;
  gm.vol = v[0];
  gm.s_mix = v[1] / gm.vol;
  gm.s_ex = v[2] / gm.vol;
  gm.st_ex = v[3] / gm.vol;
  gm.T2 = v[4] / gm.vol;
  gm.Tt2 = v[5] / gm.vol;
  const int n = m.n, p = m.p();
  gm.s_star = side == Side::D
                  ? gm.s_mix - 2.0 / p * (gm.s_ex + 2.0 * gm.Tt2 - gm.T2)
                  : gm.s_mix - 2.0 / n * (gm.st_ex + 2.0 * gm.T2 - gm.Tt2);
  return gm;
}

}  // namespace mixedcurv
