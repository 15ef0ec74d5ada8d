#pragma once

#include <functional>

#include "mixedcurv/identities.hpp"

namespace mixedcurv {

// Tensor-product quadrature grid over the model chart: trapezoid rule on
// periodic axes (spectrally accurate for smooth integrands), Gauss-Legendre
// on box axes.
struct GridSpec {
  std::array<int, kMaxDim> npts{};

  // Module defaults: 48 points per axis up to dimension 3, 24 in dimension 4.
  static GridSpec defaults(const Model& m);
  // Same count on every axis.
  static GridSpec uniform(const Model& m, int n);

  // Enforces >= 8 points per periodic axis, >= 2 per box axis, and the
  // total-point budget; throws ModelError.
  void validate(const Model& m) const;
};

// Integral of f * sqrt(det g) over the chart.  Evaluation is parallel over
// grid points; the reduction is a fixed-order pairwise sum, so the result is
// bitwise deterministic.  Throws ModelError on a non-finite sample.  Works
// on non-periodic charts too, but such integrals are domain-relative
// (divergence-theorem boundary terms need not vanish).
double integrate_scalar(const Model& m, const GridSpec& grid,
                        const std::function<double(const double*)>& f);

// k integrands sharing the per-point work: f(coords, out) fills out[0..k).
std::vector<double> integrate_multi(
    const Model& m, const GridSpec& grid, int k,
    const std::function<void(const double*, double*)>& f);

double volume(const Model& m, const GridSpec& grid);

// Total mixed scalar curvature of a closed model, by three routes:
//   Direct — quadrature of the mixed scalar curvature;
//   QForm  — quadrature of s_ex + st_ex + |T|^2 + |Tt|^2 (the two differ by
//            an exact divergence, so they agree on closed models);
//   Codim1 — quadrature of tau1^2 - tau2 of the Weingarten operator when
//            p = 1 (requires integrable D-tilde), or of
//            taut1^2 - taut2 + |Tt|^2 when n = 1.
enum class JMixMethod { Direct, QForm, Codim1 };
double j_mix(const Model& m, const GridSpec& grid,
             JMixMethod method = JMixMethod::Direct);

enum class Side { D, Dtilde };

// Mean values over the closed manifold and the critical-value constant
// S*_mix for the declared variation side:
//   D side:      S* = mean(S_mix) - (2/p) * mean(s_ex + 2|Tt|^2 - |T|^2)
//   D-tilde side: the dual with n, st_ex and T <-> Tt swapped.
struct GlobalMeans {
  double vol = 0;
  double s_mix = 0, s_ex = 0, st_ex = 0, T2 = 0, Tt2 = 0;  // mean values
  double s_star = 0;
};
GlobalMeans mean_and_s_star(const Model& m, const GridSpec& grid, Side side);

}  // namespace mixedcurv
