#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"

namespace dvwalk {

/// Expression tree over the single variable x.
struct Expr {
  enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Exp, Abs, Sqrt };

  Kind kind = Kind::Number;
  double number = 0.0;
  Func func = Func::Sin;
  std::vector<std::shared_ptr<const Expr>> args;

  static std::shared_ptr<const Expr> num(double v) {
    auto e = std::make_shared<Expr>();
    e->number = v;
    return e;
  }
  static std::shared_ptr<const Expr> var() {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    return e;
  }
  static std::shared_ptr<const Expr> node(Kind k, std::vector<std::shared_ptr<const Expr>> a) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->args = std::move(a);
    return e;
  }
  static std::shared_ptr<const Expr> call(Func f, std::shared_ptr<const Expr> a) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Call;
    e->func = f;
    e->args = {std::move(a)};
    return e;
  }
};

using ExprPtr = std::shared_ptr<const Expr>;

inline bool same_tree(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  if (a.kind == Expr::Kind::Number && a.number != b.number) return false;
  if (a.kind == Expr::Kind::Call && a.func != b.func) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same_tree(*a.args[i], *b.args[i])) return false;
  return true;
}

namespace detail {

inline const char* func_name(Expr::Func f) {
  switch (f) {
    case Expr::Func::Sin: return "sin";
    case Expr::Func::Cos: return "cos";
    case Expr::Func::Exp: return "exp";
    case Expr::Func::Abs: return "abs";
    case Expr::Func::Sqrt: return "sqrt";
  }
  return "?";
}

// Grammar, loosest first:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?        right-associative through unary
//   primary := number | 'x' | func '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  ExprPtr parse() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = Expr::node(Expr::Kind::Add, {lhs, term()});
      else if (eat('-'))
        lhs = Expr::node(Expr::Kind::Sub, {lhs, term()});
      else
        return lhs;
    }
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    for (;;) {
      if (eat('*'))
        lhs = Expr::node(Expr::Kind::Mul, {lhs, unary()});
      else if (eat('/'))
        lhs = Expr::node(Expr::Kind::Div, {lhs, unary()});
      else
        return lhs;
    }
  }

  ExprPtr unary() {
    if (eat('-')) return Expr::node(Expr::Kind::Neg, {unary()});
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (eat('^')) return Expr::node(Expr::Kind::Pow, {base, unary()});
    return base;
  }

  ExprPtr primary() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (eat('(')) {
      ExprPtr e = expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return Expr::num(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") return Expr::var();
    Expr::Func f;
    if (name == "sin")
      f = Expr::Func::Sin;
    else if (name == "cos")
      f = Expr::Func::Cos;
    else if (name == "exp")
      f = Expr::Func::Exp;
    else if (name == "abs")
      f = Expr::Func::Abs;
    else if (name == "sqrt")
      f = Expr::Func::Sqrt;
    else
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    if (!eat('(')) throw ParseError("expected '(' after " + std::string(name), pos_);
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == ')') throw ParseError(std::string(name) + " takes 1 argument, got 0", pos_);
    ExprPtr arg = expr();
    if (eat(',')) throw ParseError(std::string(name) + " takes 1 argument", pos_ - 1);
    if (!eat(')')) throw ParseError("expected ')'", pos_);
    return Expr::call(f, std::move(arg));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Fully parenthesised form; reparses to an identical tree.
inline std::string print(const Expr& e) {
  using K = Expr::Kind;
  auto bin = [&](const char* op) { return "(" + print(*e.args[0]) + " " + op + " " + print(*e.args[1]) + ")"; };
  switch (e.kind) {
    case K::Number: return detail::format_number(e.number);
    case K::Var: return "x";
    case K::Neg: return "(-" + print(*e.args[0]) + ")";
    case K::Add: return bin("+");
    case K::Sub: return bin("-");
    case K::Mul: return bin("*");
    case K::Div: return bin("/");
    case K::Pow: return bin("^");
    case K::Call: return std::string(detail::func_name(e.func)) + "(" + print(*e.args[0]) + ")";
  }
  return {};
}

/// Evaluates at x; domain errors (sqrt of a negative, division by zero, non-finite
/// results) throw EvalError rather than yielding NaN.
inline double evaluate(const Expr& e, double x) {
  using K = Expr::Kind;
  auto checked = [](double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
    return v;
  };
  switch (e.kind) {
    case K::Number: return e.number;
    case K::Var: return x;
    case K::Neg: return -evaluate(*e.args[0], x);
    case K::Add: return checked(evaluate(*e.args[0], x) + evaluate(*e.args[1], x), "+");
    case K::Sub: return checked(evaluate(*e.args[0], x) - evaluate(*e.args[1], x), "-");
    case K::Mul: return checked(evaluate(*e.args[0], x) * evaluate(*e.args[1], x), "*");
    case K::Div: {
      const double d = evaluate(*e.args[1], x);
      if (d == 0.0) throw EvalError("division by zero");
      return checked(evaluate(*e.args[0], x) / d, "/");
    }
    case K::Pow: {
      const double b = evaluate(*e.args[0], x);
      const double p = evaluate(*e.args[1], x);
      if (b < 0.0 && p != std::floor(p)) throw EvalError("negative base with non-integer exponent");
      if (b == 0.0 && p < 0.0) throw EvalError("zero to a negative power");
      return checked(std::pow(b, p), "^");
    }
    case K::Call: {
      const double a = evaluate(*e.args[0], x);
      switch (e.func) {
        case Expr::Func::Sin: return std::sin(a);
        case Expr::Func::Cos: return std::cos(a);
        case Expr::Func::Exp: return checked(std::exp(a), "exp");
        case Expr::Func::Abs: return std::abs(a);
        case Expr::Func::Sqrt:
          if (a < 0.0) throw EvalError("sqrt of a negative number");
          return std::sqrt(a);
      }
    }
  }
  throw EvalError("malformed expression");
}

/// Parsed potential V(x) with its source text.
class PotentialExpr {
 public:
  PotentialExpr() : source_("0"), ast_(Expr::num(0.0)) {}
  explicit PotentialExpr(std::string source) : source_(std::move(source)), ast_(detail::Parser(source_).parse()) {}

  const std::string& source() const { return source_; }
  const Expr& ast() const { return *ast_; }
  double operator()(double x) const {
    if (!std::isfinite(x)) throw EvalError("potential evaluated at a non-finite x");
    return evaluate(*ast_, x);
  }

 private:
  std::string source_;
  ExprPtr ast_;
};

inline PotentialExpr parse_potential(std::string source) { return PotentialExpr(std::move(source)); }

}  // namespace dvwalk
