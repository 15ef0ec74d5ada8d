#pragma once

#include "mixedcurv/geometry.hpp"

namespace mixedcurv {

// Coordinate components of the second fundamental forms and integrability
// tensors of both distributions, plus the mean curvature vectors.
//   h, T  take arguments in D-tilde and are valued in D;
//   ht, Tt take arguments in D and are valued in D-tilde.
// Component layout X[lam][mu][nu] = (X(∂μ, ∂ν))^λ with the arguments
// implicitly projected, so the arrays are honest tensor fields.
template <class S>
struct SecondForms {
  int d = 0, n = 0, p = 0;
  using A3 = std::array<std::array<std::array<S, kMaxDim>, kMaxDim>, kMaxDim>;
  A3 h{}, T{}, ht{}, Tt{};
  Vec<S> H, Ht;  // H = Tr_g h, Ht = Tr_g ht (coordinate components)
};

template <class S>
SecondForms<S> second_forms(const Geom<S>& G);

// Adapted-frame components and the algebraic (pointwise) quantities built
// from them.  Indices a,b < n run over the D-tilde frame E, i,j < p over the
// D frame F.  Matrices returned by the methods are frame-component matrices;
// flat/sharp conversions are trivial in an orthonormal frame.
struct FrameForms {
  int d = 0, n = 0, p = 0;
  Frames fr;
  std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim>
      h{}, T{};  // [a][b][i] = g(X(E_a, E_b), F_i)
  std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim>
      ht{}, Tt{};  // [i][j][a] = g(X(F_i, F_j), E_a)
  std::array<double, kMaxDim> H{}, Ht{};  // frame comps H[i], Ht[a]
  Vec<double> Hvec, Htvec;                // coordinate comps
  double h2 = 0, T2 = 0, ht2 = 0, Tt2 = 0, H2 = 0, Ht2 = 0;

  // Weingarten and integrability operators:
  //   g(shape(i) x, y)  = g(h(x,y), F_i)   on D-tilde (n x n),
  //   g(skew(i) x, y)   = g(T(x,y), F_i),
  // and the duals shape_t(a), skew_t(a) on D (p x p).
  Mat<double> shape(int i) const;
  Mat<double> skew(int i) const;
  Mat<double> shape_t(int a) const;
  Mat<double> skew_t(int a) const;

  // Casorati-type operator sums.
  Mat<double> cas_shape() const;    // sum_i shape(i)^2      (n x n)
  Mat<double> cas_skew() const;     // sum_i skew(i)^2       (n x n)
  Mat<double> cas_shape_t() const;  // sum_a shape_t(a)^2    (p x p)
  Mat<double> cas_skew_t() const;   // sum_a skew_t(a)^2     (p x p)

  // psi[i][j]   = Tr(shape(j) shape(i) + skew(j) skew(i))   (p x p)
  // psi_t[a][b] = Tr(shape_t(b) shape_t(a) + skew_t(b) skew_t(a))
  Mat<double> psi() const;
  Mat<double> psi_t() const;

  // phi_h[i][j]  = H[i]H[j] - sum_{ab} h[a][b][i] h[a][b][j]  (p x p)
  // phi_T[i][j]  = -sum_{ab} T[a][b][i] T[a][b][j]
  // and the duals (n x n).
  Mat<double> phi_h() const;
  Mat<double> phi_T() const;
  Mat<double> phi_ht() const;
  Mat<double> phi_Tt() const;

  // Commutator sums sum_a [skew_t(a), shape_t(a)] (p x p) and the dual
  // sum_i [skew(i), shape(i)] (n x n); both trace-free.
  Mat<double> comm_t() const;
  Mat<double> comm() const;

  // <ht, Ht>[i][j] = sum_a ht[i][j][a] Ht[a] and the dual.
  Mat<double> ht_dot_Ht() const;
  Mat<double> h_dot_H() const;

  double s_ex() const { return H2 - h2; }    // |H|^2 - |h|^2
  double st_ex() const { return Ht2 - ht2; }
};

template <class S>
FrameForms frame_forms(const Geom<S>& G, const SecondForms<S>& sf,
                       const Frames& fr);
template <class S>
FrameForms frame_forms(const Geom<S>& G);

// First-order vector/tensor calculus on the second-order pipeline.  A (1,2)
// coordinate tensor P[lam][mu][nu] carried at Jet1 admits the covariant
// divergence (div P)_{μν} = (∇_λ P)^λ_{μν}; the projected variants contract
// the derivative index with P-tilde (tangent) or P-perp instead of summing
// it against the value index freely.
using Coord12 =
    std::array<std::array<std::array<Jet1, kMaxDim>, kMaxDim>, kMaxDim>;

Mat<double> div_12(const GeomSecond& G, const Coord12& P);
Mat<double> div_12_proj(const GeomSecond& G, const Coord12& P, bool tangent);

double div_vec(const GeomSecond& G, const Vec<Jet1>& X);
double div_vec_proj(const GeomSecond& G, const Vec<Jet1>& X, bool tangent);

// grad_cov(X)_{μν} = g(∇_μ X, ∂_ν); symmetrize for deformation tensors.
Mat<double> grad_cov(const GeomSecond& G, const Vec<Jet1>& X);

Mat<double> sym2(const Mat<double>& B);
Mat<double> skew2(const Mat<double>& B);

// Frame restrictions of a (0,2) coordinate matrix.
Mat<double> restrict_tan(const Mat<double>& B, const Frames& fr);   // n x n
Mat<double> restrict_perp(const Mat<double>& B, const Frames& fr);  // p x p

// Unit section of a line distribution at first order: the D side when
// tangent == false (requires p == 1), the D-tilde side when true (n == 1).
Vec<Jet1> unit_field(const GeomSecond& G, bool tangent);

}  // namespace mixedcurv
