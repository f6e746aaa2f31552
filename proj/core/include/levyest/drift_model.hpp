#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levyest/expr.hpp"

namespace levyest {

/// A parsed drift A_theta(x) together with every partial derivative the
/// sensitivity recursions can ask for: d^i/dx^i up to i = 3 crossed with
/// up to two parameter derivatives.  All derivatives are symbolic, simplified,
/// compiled, and cached at construction; the model is immutable afterwards
/// and safe to share across threads.
class DriftModel {
public:
  DriftModel(const std::string& source, std::vector<std::string> params);

  int dim() const { return static_cast<int>(params_.size()); }
  const std::vector<std::string>& params() const { return params_; }
  const std::string& source() const { return source_; }
  const ExprPtr& expr() const { return expr_; }

  double eval(double x, std::span<const double> theta) const {
    return compiled(0).eval(x, theta);
  }

  /// d^i/dx^i, optionally also in one or two parameter components.
  /// Throws validation_error when the order is outside the cached range.
  const ExprPtr& derivative(int x_order, std::span<const int> theta_components) const;
  double deriv(int x_order, std::initializer_list<int> theta_components, double x,
               std::span<const double> theta) const;

  /// Compiled accessors for simulation loops.
  const CompiledExpr& compiled(int x_order) const;
  const CompiledExpr& compiled(int x_order, int a) const;
  const CompiledExpr& compiled(int x_order, int a, int b) const;

  /// True when the expression is affine in every parameter component
  /// (all second parameter derivatives are identically zero).
  bool is_affine_in_params() const { return affine_in_params_; }

  /// When the drift is exactly sum_i theta_i * x^{p_i} with distinct positive
  /// integer powers, returns the powers in parameter order; otherwise empty.
  const std::optional<std::vector<int>>& monomial_powers() const {
    return monomial_powers_;
  }

  static constexpr int kMaxXOrder = 3;
  static constexpr int kMaxThetaOrder = 2;

private:
  std::size_t index(int x_order, int a, int b) const;  // a, b in [-1, d)

  std::string source_;
  std::vector<std::string> params_;
  ExprPtr expr_;
  std::vector<ExprPtr> derivs_;
  std::vector<CompiledExpr> compiled_;
  bool affine_in_params_ = false;
  std::optional<std::vector<int>> monomial_powers_;
};

/// Free-function forms of the module operations.
DriftModel parse_drift(const std::string& source, std::vector<std::string> params);
ExprPtr differentiate(const DriftModel& model, int x_order,
                      std::vector<int> theta_components);

}  // namespace levyest
