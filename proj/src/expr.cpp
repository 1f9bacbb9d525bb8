#include "obsyn/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <vector>

namespace obsyn {
namespace expr {

enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
// Sign is internal: never written by users, but emitted by the abs
// derivative (with sign(0) = 0) and accepted back by the parser so
// derivative expressions round-trip.
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sign };

struct Node {
  Kind kind;
  double value = 0.0;  // Number
  VarRef var{VarKind::Time, 0};
  Fn fn = Fn::Sin;
  NodePtr a, b;
};

namespace {

NodePtr num(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->value = v;
  return n;
}

NodePtr var(VarKind k, int idx) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->var = {k, idx};
  return n;
}

NodePtr unary(Kind k, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

NodePtr binary(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr call(Fn f, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Call;
  n->fn = f;
  n->a = std::move(a);
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::Number && n->value == v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string print_node(const NodePtr& n) {
  switch (n->kind) {
    case Kind::Number:
      return n->value < 0 ? "(" + fmt(n->value) + ")" : fmt(n->value);
    case Kind::Variable:
      switch (n->var.kind) {
        case VarKind::State: return "x" + std::to_string(n->var.index);
        case VarKind::Input: return "u" + std::to_string(n->var.index);
        case VarKind::Time: return "t";
      }
      return "?";
    case Kind::Negate: return "(-" + print_node(n->a) + ")";
    case Kind::Add: return "(" + print_node(n->a) + "+" + print_node(n->b) + ")";
    case Kind::Sub: return "(" + print_node(n->a) + "-" + print_node(n->b) + ")";
    case Kind::Mul: return "(" + print_node(n->a) + "*" + print_node(n->b) + ")";
    case Kind::Div: return "(" + print_node(n->a) + "/" + print_node(n->b) + ")";
    case Kind::Pow: return "(" + print_node(n->a) + "^" + print_node(n->b) + ")";
    case Kind::Call: {
      static const char* names[] = {"sin", "cos", "tan", "exp",
                                    "log", "sqrt", "abs", "sign"};
      return std::string(names[static_cast<int>(n->fn)]) + "(" + print_node(n->a) + ")";
    }
  }
  return "?";
}

double eval_node(const NodePtr& n, const Vec& x, const Vec& u, double t) {
  switch (n->kind) {
    case Kind::Number: return n->value;
    case Kind::Variable:
      switch (n->var.kind) {
        case VarKind::State: return x[n->var.index - 1];
        case VarKind::Input: return u[n->var.index - 1];
        case VarKind::Time: return t;
      }
      return 0.0;
    case Kind::Negate: return -eval_node(n->a, x, u, t);
    case Kind::Add: return eval_node(n->a, x, u, t) + eval_node(n->b, x, u, t);
    case Kind::Sub: return eval_node(n->a, x, u, t) - eval_node(n->b, x, u, t);
    case Kind::Mul: return eval_node(n->a, x, u, t) * eval_node(n->b, x, u, t);
    case Kind::Div: {
      const double den = eval_node(n->b, x, u, t);
      if (den == 0.0) throw DomainError("division by zero in " + print_node(n));
      return eval_node(n->a, x, u, t) / den;
    }
    case Kind::Pow: {
      const double r = std::pow(eval_node(n->a, x, u, t), eval_node(n->b, x, u, t));
      if (!std::isfinite(r)) throw DomainError("non-finite power in " + print_node(n));
      return r;
    }
    case Kind::Call: {
      const double a = eval_node(n->a, x, u, t);
      double r = 0.0;
      switch (n->fn) {
        case Fn::Sin: r = std::sin(a); break;
        case Fn::Cos: r = std::cos(a); break;
        case Fn::Tan: r = std::tan(a); break;
        case Fn::Exp: r = std::exp(a); break;
        case Fn::Log:
          if (a <= 0.0) throw DomainError("log of non-positive argument in " + print_node(n));
          r = std::log(a);
          break;
        case Fn::Sqrt:
          if (a < 0.0) throw DomainError("sqrt of negative argument in " + print_node(n));
          r = std::sqrt(a);
          break;
        case Fn::Abs: r = std::abs(a); break;
        case Fn::Sign: r = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0); break;
      }
      if (!std::isfinite(r)) throw DomainError("non-finite value in " + print_node(n));
      return r;
    }
  }
  return 0.0;
}

// Constant folding plus zero/one elimination; nothing deeper.
NodePtr simplify(const NodePtr& n);

NodePtr fold_if_const(const NodePtr& n) {
  bool constant = false;
  switch (n->kind) {
    case Kind::Number: return n;
    case Kind::Variable: return n;
    case Kind::Negate:
    case Kind::Call: constant = n->a->kind == Kind::Number; break;
    default: constant = n->a->kind == Kind::Number && n->b->kind == Kind::Number; break;
  }
  if (!constant) return n;
  try {
    const double v = eval_node(n, Vec(), Vec(), 0.0);
    return num(v);
  } catch (const DomainError&) {
    return n;  // leave domain errors to evaluation time
  }
}

NodePtr simplify(const NodePtr& n) {
  switch (n->kind) {
    case Kind::Number:
    case Kind::Variable: return n;
    case Kind::Negate: {
      NodePtr a = simplify(n->a);
      if (is_const(a, 0.0)) return num(0.0);
      return fold_if_const(unary(Kind::Negate, a));
    }
    case Kind::Add: {
      NodePtr a = simplify(n->a), b = simplify(n->b);
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      return fold_if_const(binary(Kind::Add, a, b));
    }
    case Kind::Sub: {
      NodePtr a = simplify(n->a), b = simplify(n->b);
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return simplify(unary(Kind::Negate, b));
      return fold_if_const(binary(Kind::Sub, a, b));
    }
    case Kind::Mul: {
      NodePtr a = simplify(n->a), b = simplify(n->b);
      if (is_const(a, 0.0) || is_const(b, 0.0)) return num(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      return fold_if_const(binary(Kind::Mul, a, b));
    }
    case Kind::Div: {
      NodePtr a = simplify(n->a), b = simplify(n->b);
      if (is_const(a, 0.0) && !is_const(b, 0.0)) return num(0.0);
      if (is_const(b, 1.0)) return a;
      return fold_if_const(binary(Kind::Div, a, b));
    }
    case Kind::Pow: {
      NodePtr a = simplify(n->a), b = simplify(n->b);
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return num(1.0);
      return fold_if_const(binary(Kind::Pow, a, b));
    }
    case Kind::Call: {
      return fold_if_const(call(n->fn, simplify(n->a)));
    }
  }
  return n;
}

bool same_var(const VarRef& a, const VarRef& b) {
  return a.kind == b.kind && (a.kind == VarKind::Time || a.index == b.index);
}

NodePtr diff(const NodePtr& n, const VarRef& v) {
  switch (n->kind) {
    case Kind::Number: return num(0.0);
    case Kind::Variable: return num(same_var(n->var, v) ? 1.0 : 0.0);
    case Kind::Negate: return unary(Kind::Negate, diff(n->a, v));
    case Kind::Add: return binary(Kind::Add, diff(n->a, v), diff(n->b, v));
    case Kind::Sub: return binary(Kind::Sub, diff(n->a, v), diff(n->b, v));
    case Kind::Mul:
      return binary(Kind::Add, binary(Kind::Mul, diff(n->a, v), n->b),
                    binary(Kind::Mul, n->a, diff(n->b, v)));
    case Kind::Div:
      // (a'b - ab') / b^2
      return binary(Kind::Div,
                    binary(Kind::Sub, binary(Kind::Mul, diff(n->a, v), n->b),
                           binary(Kind::Mul, n->a, diff(n->b, v))),
                    binary(Kind::Pow, n->b, num(2.0)));
    case Kind::Pow: {
      if (n->b->kind == Kind::Number) {
        // c * a^(c-1) * a'
        const double c = n->b->value;
        return binary(Kind::Mul, num(c),
                      binary(Kind::Mul, binary(Kind::Pow, n->a, num(c - 1.0)),
                             diff(n->a, v)));
      }
      // a^b * (b' log a + b a'/a)
      return binary(Kind::Mul, binary(Kind::Pow, n->a, n->b),
                    binary(Kind::Add,
                           binary(Kind::Mul, diff(n->b, v), call(Fn::Log, n->a)),
                           binary(Kind::Mul, n->b, binary(Kind::Div, diff(n->a, v), n->a))));
    }
    case Kind::Call: {
      NodePtr inner = diff(n->a, v);
      NodePtr outer;
      switch (n->fn) {
        case Fn::Sin: outer = call(Fn::Cos, n->a); break;
        case Fn::Cos: outer = unary(Kind::Negate, call(Fn::Sin, n->a)); break;
        case Fn::Tan:
          outer = binary(Kind::Div, num(1.0),
                         binary(Kind::Pow, call(Fn::Cos, n->a), num(2.0)));
          break;
        case Fn::Exp: outer = call(Fn::Exp, n->a); break;
        case Fn::Log: outer = binary(Kind::Div, num(1.0), n->a); break;
        case Fn::Sqrt:
          outer = binary(Kind::Div, num(0.5), call(Fn::Sqrt, n->a));
          break;
        case Fn::Abs: outer = call(Fn::Sign, n->a); break;
        case Fn::Sign: return num(0.0);  // zero a.e.; 0 at the jump by convention
      }
      return binary(Kind::Mul, outer, inner);
    }
  }
  return num(0.0);
}

struct Token {
  enum Type { Num, Ident, Op, LParen, RParen, End } type;
  double value = 0.0;
  std::string text;
  char op = 0;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }
  const Token& peek() const { return cur_; }
  Token next() {
    Token t = cur_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    cur_ = Token{Token::End, 0.0, "", 0, i_};
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      try {
        cur_.value = std::stod(s_.substr(i_), &used);
      } catch (const std::exception&) {
        throw ParseError("malformed number", i_);
      }
      cur_.type = Token::Num;
      i_ += used;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
        ++j;
      cur_.type = Token::Ident;
      cur_.text = s_.substr(i_, j - i_);
      i_ = j;
      return;
    }
    if (c == '(') { cur_.type = Token::LParen; ++i_; return; }
    if (c == ')') { cur_.type = Token::RParen; ++i_; return; }
    if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
      cur_.type = Token::Op;
      cur_.op = c;
      ++i_;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i_);
  }

  const std::string& s_;
  std::size_t i_ = 0;
  Token cur_;
};

class Parser {
 public:
  Parser(const std::string& text, int n, int p) : lex_(text), n_(n), p_(p) {}

  NodePtr parse() {
    NodePtr e = sum();
    const Token& t = lex_.peek();
    if (t.type != Token::End) throw ParseError("trailing input", t.offset);
    return e;
  }

 private:
  NodePtr sum() {
    NodePtr e = product();
    while (lex_.peek().type == Token::Op &&
           (lex_.peek().op == '+' || lex_.peek().op == '-')) {
      const char op = lex_.next().op;
      e = binary(op == '+' ? Kind::Add : Kind::Sub, e, product());
    }
    return e;
  }

  NodePtr product() {
    NodePtr e = unary_expr();
    while (lex_.peek().type == Token::Op &&
           (lex_.peek().op == '*' || lex_.peek().op == '/')) {
      const char op = lex_.next().op;
      e = binary(op == '*' ? Kind::Mul : Kind::Div, e, unary_expr());
    }
    return e;
  }

  NodePtr unary_expr() {
    if (lex_.peek().type == Token::Op && lex_.peek().op == '-') {
      lex_.next();
      return unary(Kind::Negate, unary_expr());
    }
    if (lex_.peek().type == Token::Op && lex_.peek().op == '+') {
      lex_.next();
      return unary_expr();
    }
    return power();
  }

  NodePtr power() {
    NodePtr e = primary();
    while (lex_.peek().type == Token::Op && lex_.peek().op == '^') {
      lex_.next();
      e = binary(Kind::Pow, e, primary());
    }
    return e;
  }

  NodePtr primary() {
    Token t = lex_.next();
    switch (t.type) {
      case Token::Num: return num(t.value);
      case Token::LParen: {
        NodePtr e = sum();
        Token close = lex_.next();
        if (close.type != Token::RParen) throw ParseError("expected ')'", close.offset);
        return e;
      }
      case Token::Ident: return ident(t);
      default: throw ParseError("expected a value", t.offset);
    }
  }

  NodePtr ident(const Token& t) {
    static const std::pair<const char*, Fn> fns[] = {
        {"sin", Fn::Sin}, {"cos", Fn::Cos}, {"tan", Fn::Tan},  {"exp", Fn::Exp},
        {"log", Fn::Log}, {"sqrt", Fn::Sqrt}, {"abs", Fn::Abs}, {"sign", Fn::Sign}};
    for (const auto& [name, fn] : fns) {
      if (t.text == name) {
        Token open = lex_.next();
        if (open.type != Token::LParen)
          throw ParseError("expected '(' after function name", open.offset);
        NodePtr arg = sum();
        Token close = lex_.next();
        if (close.type != Token::RParen) throw ParseError("expected ')'", close.offset);
        return call(fn, arg);
      }
    }
    if (t.text == "t") return var(VarKind::Time, 0);
    if ((t.text[0] == 'x' || t.text[0] == 'u') && t.text.size() > 1) {
      int idx = 0;
      for (std::size_t i = 1; i < t.text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
          throw ParseError("unknown identifier '" + t.text + "'", t.offset);
        idx = idx * 10 + (t.text[i] - '0');
      }
      const int limit = t.text[0] == 'x' ? n_ : p_;
      if (idx < 1 || idx > limit)
        throw ParseError("variable index out of range in '" + t.text + "'", t.offset);
      return var(t.text[0] == 'x' ? VarKind::State : VarKind::Input, idx);
    }
    throw ParseError("unknown identifier '" + t.text + "'", t.offset);
  }

  Lexer lex_;
  int n_, p_;
};

}  // namespace

Expression::Expression(NodePtr root, int n, int p)
    : root_(std::move(root)), n_(n), p_(p) {}

double Expression::eval(const Vec& x, const Vec& u, double t) const {
  if (!root_) throw ValidationError("empty expression");
  if (x.size() < n_ || u.size() < p_)
    throw DimensionError("evaluation point smaller than declared dimensions");
  const double r = eval_node(root_, x, u, t);
  if (!std::isfinite(r)) throw DomainError("non-finite value in " + print_node(root_));
  return r;
}

Expression Expression::differentiate(const VarRef& v) const {
  if (!root_) throw ValidationError("empty expression");
  return Expression(simplify(diff(root_, v)), n_, p_);
}

std::string Expression::print() const {
  if (!root_) return "";
  return print_node(root_);
}

bool Expression::is_zero() const { return root_ && is_const(root_, 0.0); }

Expression parse(const std::string& text, int n, int p) {
  if (text.empty()) throw ParseError("empty expression", 0);
  Parser parser(text, n, p);
  return Expression(simplify(parser.parse()), n, p);
}

}  // namespace expr
}  // namespace obsyn
