#ifndef OBSYN_EXPR_HPP
#define OBSYN_EXPR_HPP

#include <memory>
#include <string>

#include "obsyn/common.hpp"

namespace obsyn {
namespace expr {

/// Syntax error with the byte offset of the offending token.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t at)
      : std::runtime_error(what + " (offset " + std::to_string(at) + ")"), offset(at) {}
  std::size_t offset;
};

enum class VarKind { State, Input, Time };

struct VarRef {
  VarKind kind;
  int index = 0;  // 1-based for State/Input, unused for Time
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression over x1..xn, u1..up, t with + - * / ^, unary
/// minus and sin, cos, tan, exp, log, sqrt, abs. Evaluation is pure and
/// thread-safe.
class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root, int n, int p);

  /// IEEE-754 double evaluation. Division by zero, log of a non-positive
  /// argument, sqrt of a negative argument and any non-finite intermediate
  /// raise DomainError carrying the offending subexpression.
  double eval(const Vec& x, const Vec& u, double t) const;

  /// Symbolic derivative, simplified by constant folding and zero/one
  /// elimination only. d|x|/dx is taken as 0 at x = 0.
  Expression differentiate(const VarRef& var) const;

  std::string print() const;

  bool is_zero() const;
  int n() const { return n_; }
  int p() const { return p_; }

 private:
  NodePtr root_;
  int n_ = 0, p_ = 0;
};

/// Parses `text` against state/input dimensions (n, p). Standard
/// precedence: ^ over * / over + -; same-precedence binary operators
/// associate to the left.
Expression parse(const std::string& text, int n, int p);

}  // namespace expr
}  // namespace obsyn

#endif
