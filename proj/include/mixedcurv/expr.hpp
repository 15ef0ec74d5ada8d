#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mixedcurv/jets.hpp"

namespace mixedcurv {

// Error with a byte offset into the source text.
struct ExprError : std::runtime_error {
  std::size_t offset;
  ExprError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " at offset " + std::to_string(off)),
        offset(off) {}
};

enum class UnaryOp { Neg, Sin, Cos, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct ExprNode {
  enum class Kind { Constant, Symbol, Unary, Binary } kind;
  double constant = 0.0;
  std::string name;  // Symbol only
  UnaryOp uop{};
  BinaryOp bop{};
  int lhs = -1, rhs = -1;  // child indices into the node pool
  std::size_t offset = 0;  // byte offset in source, for error reporting
};

// Arithmetic expression over named symbols.  Grammar (see README):
//   ^  >  unary -  >  * /  >  + -,  all binary ops left-associative;
// functions sin, cos, exp, log, sqrt; reserved constants pi, e.
// The evaluator is generic over the scalar, so the same tree yields plain
// values or first/second derivatives when fed jets.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view text);
  static Expr constant(double c);

  std::string print() const;

  // Free symbols in first-appearance order (pi/e excluded).
  const std::vector<std::string>& free_names() const { return names_; }

  bool is_constant(double* out = nullptr) const;

  // Returns a copy with the given symbols replaced by constants.
  Expr bind(const std::map<std::string, double>& values) const;

  // Env: callable (const std::string&, const T** out) -> bool, filling *out
  // with a pointer to the bound value; unbound names raise ExprError.
  template <class T, class Env>
  T evaluate(const Env& env) const {
    if (nodes_.empty()) throw std::logic_error("evaluating empty Expr");
    return eval_node<T>(root_, env);
  }

 private:
  std::vector<ExprNode> nodes_;
  int root_ = -1;
  std::vector<std::string> names_;

  friend class ExprParser;
  void collect_names();
  std::string print_node(int idx, int parent_prec, bool right_side) const;

  template <class T, class Env>
  T eval_node(int idx, const Env& env) const {
    const ExprNode& n = nodes_[idx];
    switch (n.kind) {
      case ExprNode::Kind::Constant:
        return T(n.constant);
      case ExprNode::Kind::Symbol: {
        if (n.name == "pi") return T(3.14159265358979323846);
        if (n.name == "e") return T(2.71828182845904523536);
        const T* bound = nullptr;
        if (!env(n.name, &bound))
          throw ExprError("unbound symbol '" + n.name + "'", n.offset);
        return *bound;
      }
      case ExprNode::Kind::Unary: {
        T a = eval_node<T>(n.lhs, env);
        switch (n.uop) {
          case UnaryOp::Neg:
            return -a;
          case UnaryOp::Sin:
            return sin(a);
          case UnaryOp::Cos:
            return cos(a);
          case UnaryOp::Exp:
            return exp(a);
          case UnaryOp::Log:
            if (value(a) <= 0.0)
              throw ExprError("log of non-positive value", n.offset);
            return log(a);
          case UnaryOp::Sqrt:
            if (value(a) < 0.0)
              throw ExprError("sqrt of negative value", n.offset);
            return sqrt(a);
        }
        break;
      }
      case ExprNode::Kind::Binary: {
        T a = eval_node<T>(n.lhs, env);
        // Integer exponents take the repeated-multiplication route so that
        // negative bases work (x1^2 etc.).
        if (n.bop == BinaryOp::Pow) {
          double c;
          if (nodes_[n.rhs].kind == ExprNode::Kind::Constant &&
              is_integer(nodes_[n.rhs].constant, &c))
            return ipow(a, static_cast<long long>(c));
        }
        T b = eval_node<T>(n.rhs, env);
        switch (n.bop) {
          case BinaryOp::Add:
            return a + b;
          case BinaryOp::Sub:
            return a - b;
          case BinaryOp::Mul:
            return a * b;
          case BinaryOp::Div:
            if (value(b) == 0.0)
              throw ExprError("division by zero", n.offset);
            return a / b;
          case BinaryOp::Pow:
            if (value(a) <= 0.0)
              throw ExprError("power with non-positive base and non-integer "
                              "exponent",
                              n.offset);
            return pow(a, b);
        }
        break;
      }
    }
    throw std::logic_error("corrupt Expr node");
  }

  static bool is_integer(double x, double* out) {
    const double r = std::nearbyint(x);
    if (std::abs(x - r) < 1e-12 && std::abs(r) <= 64.0) {
      *out = r;
      return true;
    }
    return false;
  }
};

// Convenience env over a name->value map.
template <class T>
struct MapEnv {
  const std::map<std::string, T>& m;
  bool operator()(const std::string& name, const T** out) const {
    auto it = m.find(name);
    if (it == m.end()) return false;
    *out = &it->second;
    return true;
  }
};

}  // namespace mixedcurv
