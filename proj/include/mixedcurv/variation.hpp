#pragma once

#include "mixedcurv/integrate.hpp"

namespace mixedcurv {

// Declared side of a one-parameter adapted metric family: which metric block
// the variation changes.  "Varied" below always refers to that distribution
// (D for VarSide::D), "fixed" to the complementary one.
enum class VarSide { D, Dtilde, Biconformal, General };

// One-parameter family of adapted metrics, given by metric component
// expressions in the chart coordinates and the reserved variable t.
struct MetricFamily {
  Model base;               // family metric at t = 0
  std::vector<Expr> upper;  // upper triangle, may reference t
  VarSide side = VarSide::General;
  double eps = 0.5;  // valid range |t| < eps
  std::string name;

  Model at(double t) const;  // model with t bound to a constant
};

MetricFamily make_family(const Model& base, VarSide side,
                         std::vector<Expr> upper, std::string name = "");

// Built-in families: "static" (constant in t) and "homothety"
// ((1+t)-scaling of the varied block; requires a coordinate-aligned span).
MetricFamily builtin_family(const Model& m, const std::string& name,
                            VarSide side = VarSide::D);

// Family declared in a model config file ([family] section).
MetricFamily family_from_model(const Model& m);

// Checks at sample points that the family starts at the base metric, that
// S = dg/dt is adapted, and that it obeys the declared truncation; throws
// ModelError on violation.
void check_family(const MetricFamily& fam, int samples = 10,
                  unsigned seed = 0);

// S = dg/dt at (coords, t), lowered components carried with their spatial
// first derivatives.
Mat<Jet1> s_tensor(const MetricFamily& fam, const double* coords,
                   double t = 0.0);

// Central difference with one Richardson extrapolation level; `error` is the
// spread between the two difference estimates.
struct FdResult {
  double value = 0, error = 0;
};
FdResult fd_derivative(const std::function<double(double)>& q,
                       double h = 1e-3);

// Pointwise variation-lemma residuals (finite differences in t against the
// closed-form first variations), keyed by name:
//   integrability-fixed / -varied  — d/dt of both integrability tensors (= 0);
//   sff-varied, mean-varied        — s.f.f. and mean curvature of the varied
//                                    distribution;
//   sff-fixed, mean-fixed          — algebraic evolution of the fixed side;
//   norm-ex-fixed, norm-T2-fixed, norm-T2-varied — pointwise norm lines;
//   conf-*                         — the conformal specializations, emitted
//                                    when S is conformal on the varied block.
// Values are scaled residuals: |lhs - rhs| / max(1, |rhs|).
std::map<std::string, double> lemma_residuals_at(const MetricFamily& fam,
                                                 const double* coords);

// The divergence-bearing norm lines, checked in integrated form over a
// closed model: int-norm-sff2-varied, int-norm-mean2-varied.
std::map<std::string, double> lemma_residuals_integrated(
    const MetricFamily& fam, const GridSpec& grid);

// Volume-preserving rescaling of a family: the varied block is multiplied by
// phi_t = (Vol(g_t)/Vol(g_0))^(-2/rank of the varied distribution).
struct NormalizedFamily {
  MetricFamily fam;
  GridSpec grid;
  double vol0 = 0;

  double phi(double t) const;
  Model at(double t) const;
};
NormalizedFamily normalize(const MetricFamily& fam, const GridSpec& grid);

// Block of the unnormalized gradient of the total mixed scalar curvature in
// adapted frame components at a point: d/dt J(g_t) = ∫ <matrix, S> dvol for
// any family whose variation tensor S is truncated to the given side.
Mat<double> dj_gradient_matrix(const Model& m, Side side,
                               const double* coords);

// ∫ <gradient matrix, S> dvol for a pointwise S provider (lowered coordinate
// components), and for the variation tensor of a declared family.
double dj_gradient_pairing(
    const Model& m, Side side, const GridSpec& grid,
    const std::function<Mat<double>(const double*)>& S);
double dj_gradient_pairing(const MetricFamily& fam, const GridSpec& grid);

}  // namespace mixedcurv
