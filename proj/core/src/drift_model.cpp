#include "levyest/drift_model.hpp"

#include <algorithm>
#include <cmath>

namespace levyest {

namespace {

// Matches x, or x^p with integer p >= 1.
std::optional<int> as_monomial(const Expr& e) {
  if (e.kind == NodeKind::Var) return 1;
  if (e.kind == NodeKind::Pow && e.a->kind == NodeKind::Var) {
    double p = e.value;
    if (p >= 1.0 && p == std::nearbyint(p) && p < 64.0) return static_cast<int>(p);
  }
  return std::nullopt;
}

}  // namespace

DriftModel::DriftModel(const std::string& source, std::vector<std::string> params)
    : source_(source), params_(std::move(params)) {
  if (params_.size() > 16)
    throw validation_error("too many parameters (at most 16 supported)");
  for (std::size_t i = 0; i < params_.size(); ++i)
    for (std::size_t j = i + 1; j < params_.size(); ++j)
      if (params_[i] == params_[j])
        throw validation_error("duplicate parameter name '" + params_[i] + "'");

  expr_ = simplify(parse_expression(source, params_));

  const int d = dim();
  const std::size_t per_order = 1 + static_cast<std::size_t>(d) +
                                static_cast<std::size_t>(d) * (d + 1) / 2;
  derivs_.resize(per_order * (kMaxXOrder + 1));

  // theta-order 0, 1, 2 at x-order 0, then walk up in x.
  derivs_[index(0, -1, -1)] = expr_;
  for (int a = 0; a < d; ++a)
    derivs_[index(0, a, -1)] = simplify(levyest::differentiate(expr_, a));
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b)
      derivs_[index(0, a, b)] =
          simplify(levyest::differentiate(derivs_[index(0, a, -1)], b));
  for (int i = 1; i <= kMaxXOrder; ++i) {
    for (std::size_t slot = 0; slot < per_order; ++slot) {
      const ExprPtr& below = derivs_[per_order * (i - 1) + slot];
      derivs_[per_order * i + slot] = simplify(levyest::differentiate(below, -1));
    }
  }

  compiled_.reserve(derivs_.size());
  for (const auto& e : derivs_) compiled_.emplace_back(*e);

  affine_in_params_ = true;
  for (int a = 0; a < d && affine_in_params_; ++a)
    for (int b = a; b < d && affine_in_params_; ++b)
      if (!is_const_zero(*derivs_[index(0, a, b)])) affine_in_params_ = false;

  if (affine_in_params_ && d > 0) {
    std::vector<int> powers(static_cast<std::size_t>(d));
    bool ok = true;
    for (int a = 0; a < d && ok; ++a) {
      auto p = as_monomial(*derivs_[index(0, a, -1)]);
      if (p)
        powers[static_cast<std::size_t>(a)] = *p;
      else
        ok = false;
    }
    if (ok) {
      // no theta-free remainder: A with all parameters zeroed must vanish
      std::vector<double> zeros(static_cast<std::size_t>(d), 0.0);
      ExprPtr rest = simplify(substitute_params(expr_, zeros));
      ok = is_const_zero(*rest);
    }
    if (ok) {
      auto sorted = powers;
      std::sort(sorted.begin(), sorted.end());
      ok = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    }
    if (ok) monomial_powers_ = powers;
  }
}

std::size_t DriftModel::index(int x_order, int a, int b) const {
  const int d = dim();
  const std::size_t per_order = 1 + static_cast<std::size_t>(d) +
                                static_cast<std::size_t>(d) * (d + 1) / 2;
  std::size_t slot;
  if (a < 0) {
    slot = 0;
  } else if (b < 0) {
    slot = 1 + static_cast<std::size_t>(a);
  } else {
    if (a > b) std::swap(a, b);
    // triangular index of (a, b) with a <= b
    slot = 1 + static_cast<std::size_t>(d) +
           static_cast<std::size_t>(a) * d - static_cast<std::size_t>(a) * (a - 1) / 2 +
           static_cast<std::size_t>(b - a);
  }
  return per_order * static_cast<std::size_t>(x_order) + slot;
}

const ExprPtr& DriftModel::derivative(int x_order,
                                      std::span<const int> theta_components) const {
  if (x_order < 0 || x_order > kMaxXOrder ||
      theta_components.size() > static_cast<std::size_t>(kMaxThetaOrder))
    throw validation_error("derivative order out of the supported range");
  for (int a : theta_components)
    if (a < 0 || a >= dim()) throw validation_error("parameter index out of range");
  int a = theta_components.size() > 0 ? theta_components[0] : -1;
  int b = theta_components.size() > 1 ? theta_components[1] : -1;
  return derivs_[index(x_order, a, b)];
}

double DriftModel::deriv(int x_order, std::initializer_list<int> theta_components,
                         double x, std::span<const double> theta) const {
  std::vector<int> js(theta_components);
  const ExprPtr& e = derivative(x_order, js);
  (void)e;
  int a = js.size() > 0 ? js[0] : -1;
  int b = js.size() > 1 ? js[1] : -1;
  return compiled_[index(x_order, a, b)].eval(x, theta);
}

const CompiledExpr& DriftModel::compiled(int x_order) const {
  return compiled_[index(x_order, -1, -1)];
}
const CompiledExpr& DriftModel::compiled(int x_order, int a) const {
  return compiled_[index(x_order, a, -1)];
}
const CompiledExpr& DriftModel::compiled(int x_order, int a, int b) const {
  return compiled_[index(x_order, a, b)];
}

DriftModel parse_drift(const std::string& source, std::vector<std::string> params) {
  return DriftModel(source, std::move(params));
}

ExprPtr differentiate(const DriftModel& model, int x_order,
                      std::vector<int> theta_components) {
  std::sort(theta_components.begin(), theta_components.end());
  return model.derivative(x_order, theta_components);
}

}  // namespace levyest
