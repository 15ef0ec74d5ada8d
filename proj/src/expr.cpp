#include "mixedcurv/expr.hpp"

#include <cctype>
#include <charconv>
#include <set>

namespace mixedcurv {

namespace {

struct Token {
  enum class Kind { Number, Ident, Op, LParen, RParen, End } kind;
  std::string text;
  double number = 0.0;
  std::size_t offset = 0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double val = 0.0;
      const char* begin = s.data() + i;
      const char* end = s.data() + s.size();
      auto [ptr, ec] = std::from_chars(begin, end, val);
      if (ec != std::errc{})
        throw ExprError("malformed number", i);
      out.push_back({Token::Kind::Number,
                     std::string(begin, ptr), val, i});
      i += static_cast<std::size_t>(ptr - begin);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
        ++j;
      out.push_back({Token::Kind::Ident, std::string(s.substr(i, j - i)),
                     0.0, i});
      i = j;
      continue;
    }
    if (c == '(') {
      out.push_back({Token::Kind::LParen, "(", 0.0, i});
      ++i;
      continue;
    }
    if (c == ')') {
      out.push_back({Token::Kind::RParen, ")", 0.0, i});
      ++i;
      continue;
    }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      out.push_back({Token::Kind::Op, std::string(1, c), 0.0, i});
      ++i;
      continue;
    }
    throw ExprError(std::string("unexpected character '") + c + "'", i);
  }
  out.push_back({Token::Kind::End, "", 0.0, s.size()});
  return out;
}

const std::set<std::string> kFunctions = {"sin", "cos", "exp", "log", "sqrt"};

UnaryOp function_op(const std::string& name) {
  if (name == "sin") return UnaryOp::Sin;
  if (name == "cos") return UnaryOp::Cos;
  if (name == "exp") return UnaryOp::Exp;
  if (name == "log") return UnaryOp::Log;
  return UnaryOp::Sqrt;
}

}  // namespace

class ExprParser {
 public:
  explicit ExprParser(std::string_view text)
      : toks_(tokenize(text)) {}

  Expr run() {
    Expr e;
    nodes_ = &e.nodes_;
    e.root_ = parse_sum();
    expect_end();
    e.collect_names();
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ExprNode>* nodes_ = nullptr;

  const Token& cur() const { return toks_[pos_]; }
  bool is_op(const char* o) const {
    return cur().kind == Token::Kind::Op && cur().text == o;
  }

  int add(ExprNode n) {
    nodes_->push_back(std::move(n));
    return static_cast<int>(nodes_->size()) - 1;
  }

  void expect_end() {
    if (cur().kind != Token::Kind::End)
      throw ExprError("unexpected token '" + cur().text + "'", cur().offset);
  }

  int parse_sum() {
    int lhs = parse_product();
    while (is_op("+") || is_op("-")) {
      const bool plus = cur().text == "+";
      const std::size_t off = cur().offset;
      ++pos_;
      int rhs = parse_product();
      ExprNode n;
      n.kind = ExprNode::Kind::Binary;
      n.bop = plus ? BinaryOp::Add : BinaryOp::Sub;
      n.lhs = lhs;
      n.rhs = rhs;
      n.offset = off;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_product() {
    int lhs = parse_unary();
    while (is_op("*") || is_op("/")) {
      const bool mul = cur().text == "*";
      const std::size_t off = cur().offset;
      ++pos_;
      int rhs = parse_unary();
      ExprNode n;
      n.kind = ExprNode::Kind::Binary;
      n.bop = mul ? BinaryOp::Mul : BinaryOp::Div;
      n.lhs = lhs;
      n.rhs = rhs;
      n.offset = off;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_unary() {
    if (is_op("-")) {
      const std::size_t off = cur().offset;
      ++pos_;
      int child = parse_unary();
      ExprNode n;
      n.kind = ExprNode::Kind::Unary;
      n.uop = UnaryOp::Neg;
      n.lhs = child;
      n.offset = off;
      return add(n);
    }
    return parse_power();
  }

  // '^' binds tighter than unary minus and is left-associative; a leading
  // '-' in an exponent is allowed (x^-2).
  int parse_power() {
    int lhs = parse_atom();
    while (is_op("^")) {
      const std::size_t off = cur().offset;
      ++pos_;
      int rhs;
      if (is_op("-")) {
        const std::size_t noff = cur().offset;
        ++pos_;
        int child = parse_atom();
        ExprNode neg;
        neg.kind = ExprNode::Kind::Unary;
        neg.uop = UnaryOp::Neg;
        neg.lhs = child;
        neg.offset = noff;
        rhs = add(neg);
      } else {
        rhs = parse_atom();
      }
      ExprNode n;
      n.kind = ExprNode::Kind::Binary;
      n.bop = BinaryOp::Pow;
      n.lhs = lhs;
      n.rhs = rhs;
      n.offset = off;
      lhs = add(n);
    }
    return lhs;
  }

  int parse_atom() {
    const Token& t = cur();
    switch (t.kind) {
      case Token::Kind::Number: {
        ExprNode n;
        n.kind = ExprNode::Kind::Constant;
        n.constant = t.number;
        n.offset = t.offset;
        ++pos_;
        return add(n);
      }
      case Token::Kind::Ident: {
        const std::string name = t.text;
        const std::size_t off = t.offset;
        ++pos_;
        if (cur().kind == Token::Kind::LParen) {
          if (!kFunctions.count(name))
            throw ExprError("unknown function '" + name + "'", off);
          ++pos_;
          int arg = parse_sum();
          if (cur().kind != Token::Kind::RParen)
            throw ExprError("expected ')'", cur().offset);
          ++pos_;
          ExprNode n;
          n.kind = ExprNode::Kind::Unary;
          n.uop = function_op(name);
          n.lhs = arg;
          n.offset = off;
          return add(n);
        }
        if (kFunctions.count(name))
          throw ExprError("function '" + name + "' needs '('", off);
        ExprNode n;
        n.kind = ExprNode::Kind::Symbol;
        n.name = name;
        n.offset = off;
        return add(n);
      }
      case Token::Kind::LParen: {
        ++pos_;
        int inner = parse_sum();
        if (cur().kind != Token::Kind::RParen)
          throw ExprError("expected ')'", cur().offset);
        ++pos_;
        return inner;
      }
      default:
        throw ExprError(t.kind == Token::Kind::End
                            ? std::string("unexpected end of input")
                            : "unexpected token '" + t.text + "'",
                        t.offset);
    }
  }
};

Expr Expr::parse(std::string_view text) {
  if (text.empty()) throw ExprError("empty expression", 0);
  return ExprParser(text).run();
}

Expr Expr::constant(double c) {
  Expr e;
  ExprNode n;
  n.kind = ExprNode::Kind::Constant;
  n.constant = c;
  e.nodes_.push_back(n);
  e.root_ = 0;
  return e;
}

void Expr::collect_names() {
  names_.clear();
  for (const ExprNode& n : nodes_) {
    if (n.kind != ExprNode::Kind::Symbol) continue;
    if (n.name == "pi" || n.name == "e") continue;
    bool seen = false;
    for (const std::string& s : names_)
      if (s == n.name) {
        seen = true;
        break;
      }
    if (!seen) names_.push_back(n.name);
  }
}

bool Expr::is_constant(double* out) const {
  if (nodes_.size() == 1 && nodes_[0].kind == ExprNode::Kind::Constant) {
    if (out) *out = nodes_[0].constant;
    return true;
  }
  return false;
}

Expr Expr::bind(const std::map<std::string, double>& values) const {
  Expr e = *this;
  for (ExprNode& n : e.nodes_) {
    if (n.kind != ExprNode::Kind::Symbol) continue;
    auto it = values.find(n.name);
    if (it == values.end()) continue;
    n.kind = ExprNode::Kind::Constant;
    n.constant = it->second;
    n.name.clear();
  }
  e.collect_names();
  return e;
}

namespace {
// Precedence levels used by the printer; higher binds tighter.
int prec_of(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::Constant:
    case ExprNode::Kind::Symbol:
      return 100;
    case ExprNode::Kind::Unary:
      return n.uop == UnaryOp::Neg ? 30 : 100;
    case ExprNode::Kind::Binary:
      switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
          return 10;
        case BinaryOp::Mul:
        case BinaryOp::Div:
          return 20;
        case BinaryOp::Pow:
          return 40;
      }
  }
  return 0;
}

std::string format_double(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, p);
}
}  // namespace

std::string Expr::print_node(int idx, int parent_prec, bool right_side) const {
  const ExprNode& n = nodes_[idx];
  const int prec = prec_of(n);
  std::string s;
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      s = format_double(n.constant);
      if (n.constant < 0) s = "(" + s + ")";
      return s;
    case ExprNode::Kind::Symbol:
      return n.name;
    case ExprNode::Kind::Unary:
      if (n.uop == UnaryOp::Neg) {
        s = "-" + print_node(n.lhs, prec, false);
      } else {
        const char* f = n.uop == UnaryOp::Sin   ? "sin"
                        : n.uop == UnaryOp::Cos ? "cos"
                        : n.uop == UnaryOp::Exp ? "exp"
                        : n.uop == UnaryOp::Log ? "log"
                                                : "sqrt";
        return std::string(f) + "(" + print_node(n.lhs, 0, false) + ")";
      }
      break;
    case ExprNode::Kind::Binary: {
      const char* op = n.bop == BinaryOp::Add   ? "+"
                       : n.bop == BinaryOp::Sub ? "-"
                       : n.bop == BinaryOp::Mul ? "*"
                       : n.bop == BinaryOp::Div ? "/"
                                                : "^";
      // Left-associative everywhere: the right child needs parens at equal
      // precedence for non-commutative ops.
      s = print_node(n.lhs, prec, false) + op +
          print_node(n.rhs, prec, true);
      break;
    }
  }
  if (prec < parent_prec || (right_side && prec == parent_prec))
    return "(" + s + ")";
  return s;
}

std::string Expr::print() const {
  if (nodes_.empty()) return "0";
  return print_node(root_, 0, false);
}

}  // namespace mixedcurv
