#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>

#include "fpk/error.hpp"

namespace fpk {

namespace detail {
class ExprParser;
}

/// Parsed arithmetic expression in the variables x and y. Evaluation is
/// total in IEEE semantics: division by zero and sqrt of negatives yield
/// inf/nan rather than throwing; callers that need finite values check.
class Expression {
 public:
  double eval(double x, double y = 0.0) const {
    if (!root_) throw PreconditionError("Expression: empty");
    return eval_node(*root_, x, y);
  }

  bool uses_x() const { return root_ && uses(*root_, Kind::VarX); }
  bool uses_y() const { return root_ && uses(*root_, Kind::VarY); }

  const std::string& source() const { return source_; }

 private:
  enum class Kind { Number, VarX, VarY, Neg, Add, Sub, Mul, Div, Pow, Fun };
  enum class Fun { Sin, Cos, Exp, Abs, Sqrt };

  struct Node {
    Kind kind;
    double value = 0.0;        // Number
    Fun fun = Fun::Sin;        // Fun
    std::shared_ptr<const Node> lhs, rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static double eval_node(const Node& n, double x, double y) {
    switch (n.kind) {
      case Kind::Number: return n.value;
      case Kind::VarX: return x;
      case Kind::VarY: return y;
      case Kind::Neg: return -eval_node(*n.lhs, x, y);
      case Kind::Add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
      case Kind::Sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
      case Kind::Mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
      case Kind::Div: return eval_node(*n.lhs, x, y) / eval_node(*n.rhs, x, y);
      case Kind::Pow:
        return std::pow(eval_node(*n.lhs, x, y), eval_node(*n.rhs, x, y));
      case Kind::Fun: {
        const double v = eval_node(*n.lhs, x, y);
        switch (n.fun) {
          case Fun::Sin: return std::sin(v);
          case Fun::Cos: return std::cos(v);
          case Fun::Exp: return std::exp(v);
          case Fun::Abs: return std::abs(v);
          case Fun::Sqrt: return std::sqrt(v);
        }
        break;
      }
    }
    throw Error("Expression: corrupt node");
  }

  static bool uses(const Node& n, Kind k) {
    if (n.kind == k) return true;
    if (n.lhs && uses(*n.lhs, k)) return true;
    return n.rhs && uses(*n.rhs, k);
  }

  friend Expression parse_expression(const std::string& source);
  friend class detail::ExprParser;

  NodePtr root_;
  std::string source_;
};

namespace detail {

/// Recursive-descent parser for the grammar
///   expr    := term (('+' | '-') term)*
///   term    := factor (('*' | '/') factor)*
///   factor  := '-' factor | power
///   power   := primary ('^' factor)?        (right-associative)
///   primary := number | 'x' | 'y' | fn '(' expr ')' | '(' expr ')'
/// so that ^ binds tighter than unary minus, which binds tighter than * /.
class ExprParser {
 public:
  explicit ExprParser(const std::string& src) : src_(src) {}

  using Node = Expression::Node;
  using NodePtr = Expression::NodePtr;

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("parse error at position " + std::to_string(pos_) +
                           ": expected operator or end of input",
                       pos_);
    return e;
  }

 private:
  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      if (consume('+'))
        lhs = binary(Expression::Kind::Add, lhs, term());
      else if (consume('-'))
        lhs = binary(Expression::Kind::Sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      skip_ws();
      if (consume('*'))
        lhs = binary(Expression::Kind::Mul, lhs, factor());
      else if (consume('/'))
        lhs = binary(Expression::Kind::Div, lhs, factor());
      else
        return lhs;
    }
  }

  NodePtr factor() {
    skip_ws();
    if (consume('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Expression::Kind::Neg;
      n->lhs = factor();
      return n;
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    skip_ws();
    if (consume('^'))
      return binary(Expression::Kind::Pow, base, factor());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("parse error at position " + std::to_string(pos_) +
                           ": expected number, variable, function or '('",
                       pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError("parse error at position " + std::to_string(pos_) +
                         ": expected number, variable, function or '('",
                     pos_);
  }

  NodePtr number() {
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc())
      throw ParseError("parse error at position " + std::to_string(pos_) +
                           ": malformed number",
                       pos_);
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    auto n = std::make_shared<Node>();
    n->kind = Expression::Kind::Number;
    n->value = value;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    if (name == "x" || name == "y") {
      auto n = std::make_shared<Node>();
      n->kind = name == "x" ? Expression::Kind::VarX : Expression::Kind::VarY;
      return n;
    }
    Expression::Fun fun;
    if (name == "sin") fun = Expression::Fun::Sin;
    else if (name == "cos") fun = Expression::Fun::Cos;
    else if (name == "exp") fun = Expression::Fun::Exp;
    else if (name == "abs") fun = Expression::Fun::Abs;
    else if (name == "sqrt") fun = Expression::Fun::Sqrt;
    else
      throw ParseError("parse error at position " + std::to_string(start) +
                           ": unknown identifier '" + name +
                           "' (variables are x, y; functions sin, cos, exp, abs, sqrt)",
                       start);
    skip_ws();
    expect('(');
    auto n = std::make_shared<Node>();
    n->kind = Expression::Kind::Fun;
    n->fun = fun;
    n->lhs = expr();
    expect(')');
    return n;
  }

  static NodePtr binary(Expression::Kind kind, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
  }

  bool consume(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (!consume(c))
      throw ParseError("parse error at position " + std::to_string(pos_) +
                           ": expected '" + std::string(1, c) + "'",
                       pos_);
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse_expression(const std::string& source) {
  if (source.empty()) throw ParseError("parse error: empty expression", 0);
  Expression e;
  e.root_ = detail::ExprParser(source).parse();
  e.source_ = source;
  return e;
}

}  // namespace fpk
