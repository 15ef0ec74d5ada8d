#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>

namespace mixedcurv {

// Truncated forward-mode jets.  Jet<double> carries a value and first
// derivatives with respect to up to kMaxVars variables; Jet<Jet<double>>
// (with symmetric seeding, see seed_var) carries exact second derivatives.
// All slots are always propagated; unused ones stay zero.
inline constexpr int kMaxVars = 5;

template <class T>
struct Jet {
  T v{};
  std::array<T, kMaxVars> d{};

  Jet() = default;
  Jet(double c) : v(c) {}  // NOLINT(google-explicit-constructor)
  Jet(const T& value)
    requires(!std::same_as<T, double>)
      : v(value) {}

  Jet& operator+=(const Jet& o) {
    v += o.v;
    for (int i = 0; i < kMaxVars; ++i) d[i] += o.d[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    for (int i = 0; i < kMaxVars; ++i) d[i] -= o.d[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v + b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Jet operator-(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v - b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Jet operator-(const Jet& a) {
    Jet r;
    r.v = -a.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.v = a.v * b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.v * b.d[i] + a.d[i] * b.v;
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    const T inv = T(1.0) / b.v;
    r.v = a.v * inv;
    for (int i = 0; i < kMaxVars; ++i)
      r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }
};

inline double value(double x) { return x; }
template <class T>
double value(const Jet<T>& x) {
  return value(x.v);
}

// Chain rule for a unary elementary function: f(v) with derivative fp(v).
template <class T>
Jet<T> unary_chain(const Jet<T>& x, const T& f, const T& fp) {
  Jet<T> r;
  r.v = f;
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = fp * x.d[i];
  return r;
}

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }

template <class T>
Jet<T> sin(const Jet<T>& x) {
  return unary_chain(x, sin(x.v), cos(x.v));
}
template <class T>
Jet<T> cos(const Jet<T>& x) {
  return unary_chain(x, cos(x.v), -sin(x.v));
}
template <class T>
Jet<T> exp(const Jet<T>& x) {
  const T e = exp(x.v);
  return unary_chain(x, e, e);
}
template <class T>
Jet<T> log(const Jet<T>& x) {
  return unary_chain(x, log(x.v), T(1.0) / x.v);
}
template <class T>
Jet<T> sqrt(const Jet<T>& x) {
  const T s = sqrt(x.v);
  return unary_chain(x, s, T(0.5) / s);
}

// Integer power by repeated multiplication (valid for any base sign).
template <class T>
T ipow(const T& x, long long e) {
  if (e < 0) return T(1.0) / ipow(x, -e);
  T r(1.0);
  T b = x;
  while (e > 0) {
    if (e & 1) r = r * b;
    b = b * b;
    e >>= 1;
  }
  return r;
}

// General power, requires positive base (checked by the caller).
inline double pow(double a, double b) { return std::pow(a, b); }
template <class T>
Jet<T> pow(const Jet<T>& a, const Jet<T>& b) {
  return exp(b * log(a));
}

using Jet1 = Jet<double>;
using Jet2 = Jet<Jet1>;

// Seed an independent variable for first-order differentiation.
inline Jet1 seed_var1(double val, int k) {
  Jet1 r(val);
  r.d[k] = 1.0;
  return r;
}

// Symmetric second-order seeding: (r.v).d[k] = r.d[k].v = 1 so that
// lower(r) == r.v and the k-th first derivative of any result equals
// result.d[k] as a Jet1.
inline Jet2 seed_var2(double val, int k) {
  Jet2 r;
  r.v = seed_var1(val, k);
  r.d[k] = Jet1(1.0);
  return r;
}

// Drop one differentiation level (value + first derivatives survive).
inline double lower(const Jet1& x) { return x.v; }
inline Jet1 lower(const Jet2& x) { return x.v; }

// First derivative with respect to variable k, one level down.
inline double deriv(const Jet1& x, int k) { return x.d[k]; }
inline Jet1 deriv(const Jet2& x, int k) { return x.d[k]; }

}  // namespace mixedcurv
