#pragma once

#include <map>
#include <string>
#include <vector>

#include "mixedcurv/extrinsic.hpp"

namespace mixedcurv {

// Partial Ricci curvatures as adapted-frame component matrices:
//   rD[i][j] over the D frame (p x p), rF[a][b] over the D-tilde frame.
// Both traces equal the mixed scalar curvature.
struct PartialRicci {
  Mat<double> rD, rF;
};
PartialRicci partial_ricci(const Model& m, const double* coords);

enum class SMixMethod { FrameSum, TraceRD, TraceRF, Walczak };

double s_mix(const Model& m, const double* coords, SMixMethod method);

// Extrinsic curvatures of both distributions.  ric_ex / ric_ex_t are the
// extrinsic Ricci forms in frame components (n x n resp. p x p); their
// traces are s_ex and st_ex.  q is the algebraic part of the mixed scalar
// curvature: s_ex + st_ex + |T|^2 + |Tt|^2.
struct ExtrinsicScalars {
  double s_ex = 0, st_ex = 0, T2 = 0, Tt2 = 0, q = 0;
  Mat<double> ric_ex, ric_ex_t;
};
ExtrinsicScalars extrinsic_scalars(const Model& m, const double* coords);

// Pointwise residual norms (Frobenius for tensors, absolute value for
// scalars) of the curvature identities, keyed by name:
//   fundamental-sym, fundamental-antisym  — symmetric/antisymmetric parts of
//     the fundamental equation relating rD to the extrinsic tensors;
//   fundamental-dual-sym, fundamental-dual-antisym — the duals for rF;
//   walczak      — mixed scalar curvature vs the extrinsic expansion;
//   walczak-ex   — the same expansion grouped through s_ex and st_ex;
//   foliated     — the rF equation when the tangent distribution is
//                  integrable (reported only when |T| = 0);
//   codim1-jacobi, codim1-ric — the p = 1 specializations (only when p = 1
//     and both distributions are integrable);
//   unitfield-ric — the n = 1 specialization (only when n = 1).
std::map<std::string, double> identity_residuals_at(const Model& m,
                                                    const double* coords);

// Max of the pointwise residuals over a sample set.
std::map<std::string, double> identity_residuals(
    const Model& m, const std::vector<std::array<double, kMaxDim>>& sample);

}  // namespace mixedcurv
