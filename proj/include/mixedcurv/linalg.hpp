#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "mixedcurv/jets.hpp"

namespace mixedcurv {

inline constexpr int kMaxDim = 4;

// Fixed-capacity dense vector/matrix over any jet-like scalar.  Dimensions
// are tiny (<= 4), so everything is unrolled loops over a runtime size.
template <class T>
struct Vec {
  std::array<T, kMaxDim> a{};
  int n = 0;

  explicit Vec(int n_ = 0) : n(n_) {}
  T& operator[](int i) { return a[i]; }
  const T& operator[](int i) const { return a[i]; }
};

template <class T>
struct Mat {
  std::array<std::array<T, kMaxDim>, kMaxDim> a{};
  int n = 0;

  explicit Mat(int n_ = 0) : n(n_) {}
  T& operator()(int i, int j) { return a[i][j]; }
  const T& operator()(int i, int j) const { return a[i][j]; }

  static Mat identity(int n_) {
    Mat m(n_);
    for (int i = 0; i < n_; ++i) m(i, i) = T(1.0);
    return m;
  }
};

template <class T>
Mat<T> operator*(const Mat<T>& A, const Mat<T>& B) {
  Mat<T> C(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) {
      T s(0.0);
      for (int k = 0; k < A.n; ++k) s += A(i, k) * B(k, j);
      C(i, j) = s;
    }
  return C;
}

template <class T>
Mat<T> operator+(const Mat<T>& A, const Mat<T>& B) {
  Mat<T> C(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) C(i, j) = A(i, j) + B(i, j);
  return C;
}

template <class T>
Mat<T> operator-(const Mat<T>& A, const Mat<T>& B) {
  Mat<T> C(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) C(i, j) = A(i, j) - B(i, j);
  return C;
}

template <class T>
Vec<T> operator*(const Mat<T>& A, const Vec<T>& x) {
  Vec<T> y(A.n);
  for (int i = 0; i < A.n; ++i) {
    T s(0.0);
    for (int k = 0; k < A.n; ++k) s += A(i, k) * x[k];
    y[i] = s;
  }
  return y;
}

template <class T>
T trace(const Mat<T>& A) {
  T s(0.0);
  for (int i = 0; i < A.n; ++i) s += A(i, i);
  return s;
}

// Gauss-Jordan inverse with partial pivoting on |value()|.  Throws on a
// numerically singular pivot; inputs here are metrics and Gram matrices,
// which are positive definite by construction.
template <class T>
Mat<T> inverse(const Mat<T>& A) {
  const int n = A.n;
  Mat<T> M = A;
  Mat<T> I = Mat<T>::identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(value(M(col, col)));
    for (int r = col + 1; r < n; ++r) {
      const double m = std::abs(value(M(r, col)));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (best < 1e-13) throw std::runtime_error("singular matrix in inverse()");
    if (piv != col) {
      std::swap(M.a[piv], M.a[col]);
      std::swap(I.a[piv], I.a[col]);
    }
    const T inv_p = T(1.0) / M(col, col);
    for (int j = 0; j < n; ++j) {
      M(col, j) = M(col, j) * inv_p;
      I(col, j) = I(col, j) * inv_p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const T f = M(r, col);
      for (int j = 0; j < n; ++j) {
        M(r, j) = M(r, j) - f * M(col, j);
        I(r, j) = I(r, j) - f * I(col, j);
      }
    }
  }
  return I;
}

// Determinant by LU elimination with partial pivoting on |value()|.
template <class T>
T det(const Mat<T>& A) {
  const int n = A.n;
  Mat<T> M = A;
  T d(1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(value(M(col, col)));
    for (int r = col + 1; r < n; ++r) {
      const double m = std::abs(value(M(r, col)));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (piv != col) {
      std::swap(M.a[piv], M.a[col]);
      d = -d;
    }
    if (std::abs(value(M(col, col))) == 0.0) return T(0.0);
    d = d * M(col, col);
    const T inv_p = T(1.0) / M(col, col);
    for (int r = col + 1; r < n; ++r) {
      const T f = M(r, col) * inv_p;
      for (int j = col; j < n; ++j) M(r, j) = M(r, j) - f * M(col, j);
    }
  }
  return d;
}

// Positive-definiteness check on a plain symmetric matrix (Cholesky).
inline bool is_positive_definite(const Mat<double>& A, double tol = 0.0) {
  const int n = A.n;
  Mat<double> L(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = A(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      if (i == j) {
        if (s <= tol) return false;
        L(i, i) = std::sqrt(s);
      } else {
        L(i, j) = s / L(j, j);
      }
    }
  }
  return true;
}

template <class T>
Mat<double> value_of(const Mat<T>& A) {
  Mat<double> B(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) B(i, j) = value(A(i, j));
  return B;
}

template <class T>
Mat<Jet1> lower_of(const Mat<T>& A) {
  Mat<Jet1> B(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) B(i, j) = lower(A(i, j));
  return B;
}

}  // namespace mixedcurv
