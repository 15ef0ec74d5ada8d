#pragma once

#include "mixedcurv/variation.hpp"

namespace mixedcurv {

// One Euler-Lagrange residual evaluation over a quadrature grid.  The
// residual tensor is truncated to the side the variant varies; sup_norm is
// the max Frobenius norm over the grid nodes, integral_norm is
// sqrt(int |R|^2 dvol).  `means` carries the cached global constants
// (volume, mean curvature integrals, and the critical constant S*) consumed
// by the variant; `cross_check` is the max pointwise discrepancy between the
// two algebraically equivalent forms of the equation (extrinsic vs partial
// Ricci), 0 when the variant has a single printed form.
struct ELResidual {
  std::string variant;
  double sup_norm = 0;
  double integral_norm = 0;
  double cross_check = 0;
  GlobalMeans means;

  bool critical(double tol = 1e-6) const { return sup_norm < tol; }
};

// Variants applicable to the model (rank and integrability preconditions):
//   D-general, Dtilde-general   — the two one-sided equations, any ranks;
//   foliated-D, foliated-TF     — the same with an integrable tangent
//                                 distribution (T = 0 enforced pointwise);
//   unitfield-D, unitfield-TF   — n = 1 (tangent side spanned by one field);
//   codim1-D, codim1-TF         — p = 1 foliation (T = 0);
//   conformal-D, conformal-Dtilde — scalar trace equations for biconformal
//                                 variations;
//   trace-check                 — integrated trace identity (holds for every
//                                 closed adapted metric, critical or not).
std::vector<std::string> el_variants(const Model& m);

// Requires a closed model (global constants are closed-manifold integrals).
ELResidual el_residual(const Model& m, const GridSpec& grid,
                       const std::string& variant);

// Pointwise residual matrix of the general one-sided equation in adapted
// frame components (rank of the varied side): the gradient of the
// volume-normalized functional, so pairing it against the variation tensor
// of a normalized family integrates to the t-derivative of the functional.
Mat<double> el_matrix(const Model& m, Side side, double s_star,
                      const double* coords);

struct CriticalityEntry {
  std::string variant;
  double sup_norm = 0;
  double integral_norm = 0;
  double cross_check = 0;
  bool critical = false;
  std::string criterion;  // "global" or the pointwise criterion used
};

struct CriticalityReport {
  std::string model;
  double tol = 0;
  double tol_fd = 0;  // threshold backing FD-validated claims
  bool closed = false;
  GlobalMeans means_D, means_Dt;  // populated when closed
  std::vector<CriticalityEntry> entries;
  // codimension-one extras: flow-criterion triple over the sample grid
  bool has_flow_data = false;
  double tau1_sup = 0;
  double sigma2_defect = 0;  // max - min of sigma_2 = (tau1^2 - tau2)/2
  double sigma2_max = 0;
  double nabla_N_h_sup = 0;
  std::vector<std::string> notes;
};

// Evaluates every applicable variant.  Closed models use the global
// equations; open-chart (domain) models fall back to the pointwise criteria
// (Gaussian curvature for surfaces, the level-set criterion when a scalar u
// is attached) and the report names the criterion used.
CriticalityReport criticality_report(const Model& m, const GridSpec& grid,
                                     double tol = 1e-6);

// Level-hypersurface quantities at a point (needs the model's scalar u with
// grad u spanning D): Weingarten-route and closed-formula values of tau1 and
// tau2, the planar operator L(u) = (u_x^2 - u_y^2) u_xx + 2 u_x u_y u_xy,
// and the two criticality residuals (general metric; Euclidean-plane form).
// Throws ModelError when grad u = 0 at the point.
struct LevelSetQuantities {
  double tau1 = 0, tau2 = 0;                  // engine (Weingarten) route
  double tau1_formula = 0, tau2_formula = 0;  // closed formulas
  double lambda = 0;                          // |grad u|
  double Lu = 0;                              // planar L(u) (d = 2 only)
  double res_levelset = 0;  // general-metric pointwise criticality residual
  double res_planar = 0;    // Euclidean-plane residual (d = 2 only)
};
LevelSetQuantities level_set_quantities(const Model& m, const double* coords);

// Pointwise criticality data of a conformally flat surface g = e^phi g_0
// foliated by the first-coordinate lines (d = 2, n = 1, span = d/dx1):
// phi = log g11 and the leafwise criticality expression
// K = -(1/2) e^{-phi} (phi_x^2 + phi_y^2 / 2 + e^phi phi_y), which vanishes
// exactly at the metrics critical for tangent variations.  `pde` is the
// bracketed first-order expression itself.  Throws ModelError when the model
// is not of this shape.
struct SurfaceConformal {
  double phi = 0, K = 0, pde = 0;
};
SurfaceConformal surface_conformal(const Model& m, const double* coords);

}  // namespace mixedcurv
