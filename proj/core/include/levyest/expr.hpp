#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "levyest/errors.hpp"

namespace levyest {

// Symbolic expressions over the state variable `x`, declared parameter
// symbols, and the function set sin, cos, atan, log, exp, sqrt, abs.
// Trees are immutable; shared subtrees are fine.

enum class NodeKind : std::uint8_t {
  Const,
  Var,    // the state variable x
  Param,  // theta component, by index
  Neg,
  Sin,
  Cos,
  Atan,
  Log,
  Exp,
  Sqrt,
  Abs,
  Sign,  // arises from differentiating Abs; sign(0) := 0
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // base in child a; constant exponent in `value`
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  NodeKind kind;
  double value = 0.0;  // Const payload, or Pow exponent
  int param = -1;      // Param payload
  ExprPtr a, b;
};

ExprPtr make_const(double v);
ExprPtr make_var();
ExprPtr make_param(int index);
ExprPtr make_unary(NodeKind k, ExprPtr a);
ExprPtr make_binary(NodeKind k, ExprPtr a, ExprPtr b);
ExprPtr make_pow(ExprPtr base, double exponent);

/// Parses `source` over `x` and the declared parameter names.
/// Throws parse_error with a byte position on malformed input, unknown
/// identifiers, arity mistakes, or non-constant exponents.
ExprPtr parse_expression(const std::string& source,
                         std::span<const std::string> params);

/// Evaluates the tree; throws domain_error instead of producing NaN/Inf.
double eval(const Expr& e, double x, std::span<const double> theta);

/// Exact symbolic derivative.  `wrt_param < 0` differentiates in x,
/// otherwise in the given parameter component.
ExprPtr differentiate(const ExprPtr& e, int wrt_param);

/// Constant folding and 0/1 identities only; no canonical forms.
ExprPtr simplify(const ExprPtr& e);

/// Prints a form that reparses to an evaluation-identical tree.
std::string to_string(const Expr& e, std::span<const std::string> params);

bool is_const_zero(const Expr& e);

/// Substitutes constants for every parameter, then folds.
ExprPtr substitute_params(const ExprPtr& e, std::span<const double> values);

// Postfix-compiled form of an Expr for tight simulation loops.  Evaluation
// agrees with eval() on the tree, including which inputs raise domain_error.
class CompiledExpr {
public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double eval(double x, std::span<const double> theta) const;
  bool empty() const { return ops_.empty(); }

private:
  struct Op {
    NodeKind code;
    double value;
    int param;
  };
  std::vector<Op> ops_;
  std::size_t depth_ = 0;
};

}  // namespace levyest
