#pragma once

// Closed-form expression trees over coordinates x0, x1, ...
// Used for weights on the moment polytope and for Kähler potentials in
// chart coordinates. Evaluation is generic over the scalar type, so the same
// tree yields values (double) or exact derivatives (Jet).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wcsk/jet.hpp"

namespace wcsk {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Expr {
 public:
  enum class Kind { Const, Coord, Add, Mul, Div, Neg, Exp, Log, Pow };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double c) { return Expr(std::make_shared<Node>(Node{Kind::Const, c, 0, {}})); }
  static Expr coord(int i) { return Expr(std::make_shared<Node>(Node{Kind::Coord, 0.0, i, {}})); }

  Kind kind() const { return node_->kind; }
  double const_value() const { return node_->value; }
  int coord_index() const { return node_->index; }
  const std::vector<Expr>& children() const { return node_->kids; }
  bool is_const() const { return kind() == Kind::Const; }
  bool is_const(double c) const { return is_const() && const_value() == c; }

  // number of coordinates referenced (max index + 1)
  int arity() const {
    if (kind() == Kind::Coord) return coord_index() + 1;
    int a = 0;
    for (const auto& k : children()) a = std::max(a, k.arity());
    return a;
  }

  template <class T>
  T eval(std::span<const T> x) const {
    switch (kind()) {
      case Kind::Const:
        return T(const_value());
      case Kind::Coord:
        if (coord_index() >= static_cast<int>(x.size()))
          throw DomainError("expression references coordinate x" + std::to_string(coord_index()) +
                            " outside the available dimension");
        return x[coord_index()];
      case Kind::Add: {
        T r = children()[0].eval(x);
        for (std::size_t i = 1; i < children().size(); ++i) r = r + children()[i].eval(x);
        return r;
      }
      case Kind::Mul: {
        T r = children()[0].eval(x);
        for (std::size_t i = 1; i < children().size(); ++i) r = r * children()[i].eval(x);
        return r;
      }
      case Kind::Div: {
        T den = children()[1].eval(x);
        if (value_of(den) == 0.0) throw DomainError("division by zero");
        return children()[0].eval(x) / den;
      }
      case Kind::Neg:
        return -children()[0].eval(x);
      case Kind::Exp: {
        using std::exp;
        return exp(children()[0].eval(x));
      }
      case Kind::Log: {
        using std::log;
        T a = children()[0].eval(x);
        if (!(value_of(a) > 0.0)) throw DomainError("log of non-positive value");
        return log(a);
      }
      case Kind::Pow:
        return eval_pow(children()[0].eval(x), children()[1], x);
    }
    throw std::logic_error("unreachable");
  }

  double operator()(std::span<const double> x) const { return eval<double>(x); }

  std::string str() const {
    std::ostringstream os;
    print(os);
    return os.str();
  }

  friend Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_const(0.0)) return b;
    if (b.is_const(0.0)) return a;
    if (a.is_const() && b.is_const()) return constant(a.const_value() + b.const_value());
    return make(Kind::Add, {a, b});
  }
  friend Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_const(0.0) || b.is_const(0.0)) return constant(0.0);
    if (a.is_const(1.0)) return b;
    if (b.is_const(1.0)) return a;
    if (a.is_const() && b.is_const()) return constant(a.const_value() * b.const_value());
    return make(Kind::Mul, {a, b});
  }
  friend Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_const(1.0)) return a;
    if (a.is_const(0.0)) return constant(0.0);
    return make(Kind::Div, {a, b});
  }
  friend Expr operator-(const Expr& a) {
    if (a.is_const()) return constant(-a.const_value());
    if (a.kind() == Kind::Neg) return a.children()[0];
    return make(Kind::Neg, {a});
  }
  friend Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
  friend Expr exp(const Expr& a) { return make(Kind::Exp, {a}); }
  friend Expr log(const Expr& a) { return make(Kind::Log, {a}); }
  friend Expr pow(const Expr& a, const Expr& b) {
    if (b.is_const(1.0)) return a;
    if (b.is_const(0.0)) return constant(1.0);
    return make(Kind::Pow, {a, b});
  }

  static Expr make(Kind k, std::vector<Expr> kids) {
    return Expr(std::make_shared<Node>(Node{k, 0.0, 0, std::move(kids)}));
  }

 private:
  struct Node {
    Kind kind;
    double value;
    int index;
    std::vector<Expr> kids;
  };

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  template <class T>
  static T eval_pow(const T& base, const Expr& ex, std::span<const T> x) {
    if (ex.is_const()) {
      const double e = ex.const_value();
      if (e == std::round(e) && std::abs(e) <= 64) {
        int k = static_cast<int>(std::abs(e));
        T r(1.0), b = base;
        while (k) {  // binary exponentiation, valid for any sign of the base
          if (k & 1) r = r * b;
          k >>= 1;
          if (k) b = b * b;
        }
        if (e < 0) {
          if (value_of(r) == 0.0) throw DomainError("negative power of zero");
          return T(1.0) / r;
        }
        return r;
      }
      using std::pow;
      if (!(value_of(base) > 0.0)) throw DomainError("non-integer power of non-positive value");
      return pow(base, e);
    }
    using std::exp;
    using std::log;
    if (!(value_of(base) > 0.0)) throw DomainError("non-integer power of non-positive value");
    return exp(ex.eval(x) * log(base));
  }

  void print(std::ostream& os) const {
    switch (kind()) {
      case Kind::Const: {
        std::ostringstream s;
        s.precision(17);
        s << const_value();
        os << s.str();
        return;
      }
      case Kind::Coord:
        os << 'x' << coord_index();
        return;
      default:
        break;
    }
    static const char* names[] = {"", "", "add", "mul", "div", "neg", "exp", "log", "pow"};
    os << '(' << names[static_cast<int>(kind())];
    for (const auto& k : children()) {
      os << ' ';
      k.print(os);
    }
    os << ')';
  }

  std::shared_ptr<const Node> node_;
};

inline Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
inline Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
inline Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
inline Expr operator-(const Expr& a, double b) { return a + Expr::constant(-b); }
inline Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
inline Expr pow(const Expr& a, double e) { return pow(a, Expr::constant(e)); }

// Symbolic partial derivative d/dx_i.
inline Expr derivative(const Expr& e, int i) {
  using K = Expr::Kind;
  const auto& c = e.children();
  switch (e.kind()) {
    case K::Const:
      return Expr::constant(0.0);
    case K::Coord:
      return Expr::constant(e.coord_index() == i ? 1.0 : 0.0);
    case K::Add: {
      Expr r = Expr::constant(0.0);
      for (const auto& k : c) r = r + derivative(k, i);
      return r;
    }
    case K::Mul: {
      Expr r = Expr::constant(0.0);
      for (std::size_t a = 0; a < c.size(); ++a) {
        Expr term = derivative(c[a], i);
        for (std::size_t b = 0; b < c.size(); ++b)
          if (b != a) term = term * c[b];
        r = r + term;
      }
      return r;
    }
    case K::Div: {
      Expr num = derivative(c[0], i) * c[1] - c[0] * derivative(c[1], i);
      return num / pow(c[1], 2.0);
    }
    case K::Neg:
      return -derivative(c[0], i);
    case K::Exp:
      return e * derivative(c[0], i);
    case K::Log:
      return derivative(c[0], i) / c[0];
    case K::Pow: {
      const Expr& b = c[0];
      const Expr& x = c[1];
      if (x.is_const())
        return x.const_value() * pow(b, x.const_value() - 1.0) * derivative(b, i);
      return e * (derivative(x, i) * log(b) + x * derivative(b, i) / b);
    }
  }
  throw std::logic_error("unreachable");
}

// Replace every coordinate x_j by subs[j].
inline Expr substitute(const Expr& e, const std::vector<Expr>& subs) {
  using K = Expr::Kind;
  switch (e.kind()) {
    case K::Const:
      return e;
    case K::Coord:
      if (e.coord_index() >= static_cast<int>(subs.size()))
        throw DomainError("substitution misses coordinate x" + std::to_string(e.coord_index()));
      return subs[e.coord_index()];
    default: {
      std::vector<Expr> kids;
      for (const auto& k : e.children()) kids.push_back(substitute(k, subs));
      return Expr::make(e.kind(), std::move(kids));
    }
  }
}

// Affine map y = M x + c from R^in to R^out.
struct AffineMap {
  int in = 1, out = 1;
  std::vector<double> M;  // row-major out x in
  std::vector<double> c;

  static AffineMap identity(int r) {
    AffineMap a{r, r, std::vector<double>(r * r, 0.0), std::vector<double>(r, 0.0)};
    for (int i = 0; i < r; ++i) a.M[i * r + i] = 1.0;
    return a;
  }
  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(c);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) y[i] += M[i * in + j] * x[j];
    return y;
  }
};

// v o A as an expression in the source coordinates
inline Expr pullback(const Expr& e, const AffineMap& a) {
  std::vector<Expr> subs;
  for (int i = 0; i < a.out; ++i) {
    Expr s = Expr::constant(a.c[i]);
    for (int j = 0; j < a.in; ++j) s = s + a.M[i * a.in + j] * Expr::coord(j);
    subs.push_back(s);
  }
  return substitute(e, subs);
}

// Prefix notation: (op arg ...), atoms are numbers, pi, e, x<k>.
// Ops: add sub mul div neg exp log pow sqrt.
class ExprParser {
 public:
  static Expr parse(const std::string& text) {
    ExprParser p(text);
    Expr e = p.expr();
    p.skip();
    if (p.pos_ != p.s_.size()) p.fail("trailing input");
    return e;
  }

 private:
  explicit ExprParser(const std::string& s) : s_(s) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("weight expression: " + what + " at offset " + std::to_string(pos_) + " in '" +
                     s_ + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string token() {
    skip();
    std::size_t b = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')')
      ++pos_;
    if (b == pos_) fail("expected token");
    return s_.substr(b, pos_ - b);
  }

  Expr expr() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (s_[pos_] == ')') fail("unexpected ')'");
    if (s_[pos_] != '(') return atom(token());
    ++pos_;
    const std::string op = token();
    std::vector<Expr> args;
    for (;;) {
      skip();
      if (pos_ >= s_.size()) fail("missing ')'");
      if (s_[pos_] == ')') {
        ++pos_;
        break;
      }
      args.push_back(expr());
    }
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi) fail("wrong number of arguments for '" + op + "'");
    };
    if (op == "add") {
      need(1, 64);
      Expr r = args[0];
      for (std::size_t i = 1; i < args.size(); ++i) r = Expr::make(Expr::Kind::Add, {r, args[i]});
      return r;
    }
    if (op == "mul") {
      need(1, 64);
      Expr r = args[0];
      for (std::size_t i = 1; i < args.size(); ++i) r = Expr::make(Expr::Kind::Mul, {r, args[i]});
      return r;
    }
    if (op == "sub") {
      need(1, 2);
      if (args.size() == 1) return Expr::make(Expr::Kind::Neg, {args[0]});
      return Expr::make(Expr::Kind::Add, {args[0], Expr::make(Expr::Kind::Neg, {args[1]})});
    }
    if (op == "div") {
      need(2, 2);
      return Expr::make(Expr::Kind::Div, {args[0], args[1]});
    }
    if (op == "neg") {
      need(1, 1);
      return Expr::make(Expr::Kind::Neg, {args[0]});
    }
    if (op == "exp") {
      need(1, 1);
      return Expr::make(Expr::Kind::Exp, {args[0]});
    }
    if (op == "log") {
      need(1, 1);
      return Expr::make(Expr::Kind::Log, {args[0]});
    }
    if (op == "pow") {
      need(2, 2);
      return Expr::make(Expr::Kind::Pow, {args[0], args[1]});
    }
    if (op == "sqrt") {
      need(1, 1);
      return Expr::make(Expr::Kind::Pow, {args[0], Expr::constant(0.5)});
    }
    fail("unknown operator '" + op + "'");
  }

  Expr atom(const std::string& t) {
    if (t == "pi") return Expr::constant(std::numbers::pi);
    if (t == "e") return Expr::constant(std::numbers::e);
    if (t.size() >= 2 && t[0] == 'x') {
      char* end = nullptr;
      long k = std::strtol(t.c_str() + 1, &end, 10);
      if (*end == '\0' && k >= 0 && k < 16) return Expr::coord(static_cast<int>(k));
      fail("bad coordinate '" + t + "'");
    }
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0' || !std::isfinite(v)) fail("bad atom '" + t + "'");
    return Expr::constant(v);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

inline Expr parse_expr(const std::string& text) { return ExprParser::parse(text); }

}  // namespace wcsk
