#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixedcurv/expr.hpp"
#include "mixedcurv/jets.hpp"
#include "mixedcurv/linalg.hpp"

namespace mixedcurv {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AxisSpec {
  bool periodic = true;
  double period = 2.0 * 3.14159265358979323846;
  double lo = 0.0, hi = 1.0;  // box for non-periodic axes
};

// Single coordinate chart; closed manifolds are periodic in every axis.
struct Chart {
  int dim = 0;
  std::array<AxisSpec, kMaxDim> axes{};
  bool closed() const {
    for (int i = 0; i < dim; ++i)
      if (!axes[i].periodic) return false;
    return dim > 0;
  }
};

// Evaluation point: coordinates as jets (slots 0..dim-1); slot kMaxVars-1
// is reserved for the family parameter t where applicable.
template <class J>
struct Pt {
  std::array<J, kMaxVars> x{};
  int dim = 0;
};
using Pt1 = Pt<Jet1>;
using Pt2 = Pt<Jet2>;

inline constexpr int kTSlot = kMaxVars - 1;

template <class J>
Pt<J> seed_point(const double* c, int d) {
  Pt<J> p;
  p.dim = d;
  for (int i = 0; i < d; ++i) {
    if constexpr (std::same_as<J, Jet1>)
      p.x[i] = seed_var1(c[i], i);
    else
      p.x[i] = seed_var2(c[i], i);
  }
  return p;
}

// Expr environment binding x1..xd to point slots and t to the reserved slot.
template <class J>
struct PtEnv {
  const Pt<J>& p;
  bool operator()(const std::string& name, const J** out) const {
    if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' &&
        name[1] <= '4') {
      const int k = name[1] - '1';
      if (k >= p.dim) return false;
      *out = &p.x[k];
      return true;
    }
    if (name == "t") {
      *out = &p.x[kTSlot];
      return true;
    }
    return false;
  }
};

// Metric components, callable at both jet depths (same underlying function).
struct MetricSource {
  std::function<void(const Pt1&, Mat<Jet1>&)> at1;
  std::function<void(const Pt2&, Mat<Jet2>&)> at2;

  template <class J>
  void at(const Pt<J>& p, Mat<J>& g) const {
    if constexpr (std::same_as<J, Jet1>)
      at1(p, g);
    else
      at2(p, g);
  }
};

template <class F>
MetricSource make_metric_source(F f) {
  MetricSource s;
  s.at1 = [f](const Pt1& p, Mat<Jet1>& g) { f(p, g); };
  s.at2 = [f](const Pt2& p, Mat<Jet2>& g) { f(p, g); };
  return s;
}

// Builds a metric source from upper-triangle component expressions, listed
// row-major: g11, g12, .., g1d, g22, .., gdd.
MetricSource metric_from_exprs(int d, std::vector<Expr> upper);

enum class DistMode {
  Span,                // D-tilde spanned by declared fields, D = complement
  GradientComplement,  // D spanned by grad(u); D-tilde = level-set tangents
};

// Family declared by t-dependent metric expressions (config files).
struct FamilyExprSpec {
  std::string side;  // "D", "Dtilde", "biconformal", "general"
  std::vector<Expr> upper;  // with reserved variable t
};

// Closed-form reference value with its derivation route, used by tests as
// an oracle channel independent of the engine.
struct RefEntry {
  Expr expr;  // in chart coordinates, parameters bound
  std::string route;
};

// Original (parameter-symbolic) expressions, kept for exact config saving.
struct ConfigText {
  std::vector<Expr> metric;
  std::vector<std::array<Expr, kMaxDim>> span;
  std::optional<Expr> u;
  std::optional<FamilyExprSpec> family;
  std::map<std::string, double> params;
};

struct Model {
  std::string name;
  Chart chart;
  int n = 1;  // rank of the tangent distribution D-tilde
  DistMode dist_mode = DistMode::Span;
  std::vector<std::array<Expr, kMaxDim>> span;  // n spanning fields (Span)
  std::optional<Expr> scalar_u;                 // level-set scalar
  MetricSource metric;
  std::vector<Expr> metric_exprs;  // present iff Expr-backed (config/builtin)
  std::map<std::string, double> params;
  std::optional<FamilyExprSpec> family;  // parameters already bound
  std::map<std::string, RefEntry> reference;
  std::optional<ConfigText> source;

  int dim() const { return chart.dim; }
  int p() const { return chart.dim - n; }
  bool closed() const { return chart.closed(); }
};

// Plain metric query: symmetric positive-definite matrix and volume density
// at a point (throws ModelError on PD failure or non-finite entries).
struct MetricAt {
  Mat<double> g;
  double density;
};
MetricAt metric_at(const Model& m, const double* coords);

}  // namespace mixedcurv
