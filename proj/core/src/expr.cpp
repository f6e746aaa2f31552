#include "levyest/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

namespace levyest {
namespace {

bool is_integer_exponent(double c) {
  return std::abs(c - std::nearbyint(c)) < 1e-12 && std::abs(c) < 2147483647.0;
}

double pow_checked(double base, double c) {
  if (is_integer_exponent(c)) {
    long long n = static_cast<long long>(std::nearbyint(c));
    if (base == 0.0 && n <= 0)
      throw domain_error(n == 0 ? "0^0 is undefined" : "zero base with non-positive exponent");
    // exponentiation by squaring keeps integer powers exact
    double acc = 1.0, b = base;
    unsigned long long m = static_cast<unsigned long long>(n < 0 ? -n : n);
    while (m) {
      if (m & 1u) acc *= b;
      b *= b;
      m >>= 1;
    }
    return n < 0 ? 1.0 / acc : acc;
  }
  if (base < 0.0) throw domain_error("non-integer power of a negative base");
  if (base == 0.0) {
    if (c > 0.0) return 0.0;
    throw domain_error("zero base with non-positive exponent");
  }
  return std::pow(base, c);
}

double apply_unary(NodeKind k, double v) {
  switch (k) {
    case NodeKind::Neg:
      return -v;
    case NodeKind::Sin:
      return std::sin(v);
    case NodeKind::Cos:
      return std::cos(v);
    case NodeKind::Atan:
      return std::atan(v);
    case NodeKind::Log:
      if (v <= 0.0) throw domain_error("log of a non-positive value");
      return std::log(v);
    case NodeKind::Exp:
      return std::exp(v);
    case NodeKind::Sqrt:
      if (v < 0.0) throw domain_error("sqrt of a negative value");
      return std::sqrt(v);
    case NodeKind::Abs:
      return std::abs(v);
    case NodeKind::Sign:
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    default:
      throw error("not a unary node");
  }
}

double apply_binary(NodeKind k, double l, double r) {
  switch (k) {
    case NodeKind::Add:
      return l + r;
    case NodeKind::Sub:
      return l - r;
    case NodeKind::Mul:
      return l * r;
    case NodeKind::Div:
      if (r == 0.0) throw domain_error("division by zero");
      return l / r;
    default:
      throw error("not a binary node");
  }
}

}  // namespace

ExprPtr make_const(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = NodeKind::Const;
  e->value = v;
  return e;
}

ExprPtr make_var() {
  auto e = std::make_shared<Expr>();
  e->kind = NodeKind::Var;
  return e;
}

ExprPtr make_param(int index) {
  auto e = std::make_shared<Expr>();
  e->kind = NodeKind::Param;
  e->param = index;
  return e;
}

ExprPtr make_unary(NodeKind k, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  return e;
}

ExprPtr make_binary(NodeKind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr make_pow(ExprPtr base, double exponent) {
  auto e = std::make_shared<Expr>();
  e->kind = NodeKind::Pow;
  e->a = std::move(base);
  e->value = exponent;
  return e;
}

double eval(const Expr& e, double x, std::span<const double> theta) {
  double r;
  switch (e.kind) {
    case NodeKind::Const:
      r = e.value;
      break;
    case NodeKind::Var:
      r = x;
      break;
    case NodeKind::Param:
      r = theta[static_cast<std::size_t>(e.param)];
      break;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      r = apply_binary(e.kind, eval(*e.a, x, theta), eval(*e.b, x, theta));
      break;
    case NodeKind::Pow:
      r = pow_checked(eval(*e.a, x, theta), e.value);
      break;
    default:
      r = apply_unary(e.kind, eval(*e.a, x, theta));
      break;
  }
  if (!std::isfinite(r)) throw domain_error("non-finite value in evaluation");
  return r;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent.
//
//   expr    = term { ("+" | "-") term }
//   term    = unary { ("*" | "/") unary }
//   unary   = { "+" | "-" } power
//   power   = primary [ "^" exponent ]          (right-associative)
//   primary = number | ident | ident "(" expr ")" | "(" expr ")"
//   exponent = constant-valued unary
// ---------------------------------------------------------------------------

namespace {

struct Parser {
  const std::string& src;
  std::span<const std::string> params;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw parse_error(msg, pos); }

  ExprPtr parse() {
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos != src.size()) fail("unexpected trailing input");
    return e;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      if (eat('+'))
        e = make_binary(NodeKind::Add, e, parse_term());
      else if (eat('-'))
        e = make_binary(NodeKind::Sub, e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      if (eat('*'))
        e = make_binary(NodeKind::Mul, e, parse_unary());
      else if (eat('/'))
        e = make_binary(NodeKind::Div, e, parse_unary());
      else
        return e;
    }
  }

  ExprPtr parse_unary() {
    bool negate = false;
    for (;;) {
      if (eat('-'))
        negate = !negate;
      else if (eat('+'))
        ;
      else
        break;
    }
    ExprPtr e = parse_power();
    return negate ? make_unary(NodeKind::Neg, e) : e;
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (!eat('^')) return base;
    std::size_t at = pos;
    ExprPtr raw = parse_unary();  // allows x^-2 and x^(1/3)
    ExprPtr folded = simplify(raw);
    if (folded->kind != NodeKind::Const) {
      pos = at;
      fail("power exponent must be a constant");
    }
    return make_pow(base, folded->value);
  }

  ExprPtr parse_primary() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of input");
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (eat('(')) {
      ExprPtr e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    const char* begin = src.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos += static_cast<std::size_t>(end - begin);
    return make_const(v);
  }

  ExprPtr parse_ident() {
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name = src.substr(start, pos - start);

    static const struct {
      const char* name;
      NodeKind kind;
    } fns[] = {{"sin", NodeKind::Sin},   {"cos", NodeKind::Cos},
               {"atan", NodeKind::Atan}, {"log", NodeKind::Log},
               {"exp", NodeKind::Exp},   {"sqrt", NodeKind::Sqrt},
               {"abs", NodeKind::Abs},   {"sign", NodeKind::Sign}};
    for (const auto& f : fns) {
      if (name == f.name) {
        if (!eat('(')) {
          pos = start;
          fail("function '" + name + "' requires an argument list");
        }
        ExprPtr arg = parse_expr();
        if (!eat(')')) fail("expected ')' after argument of '" + name + "'");
        return make_unary(f.kind, arg);
      }
    }

    if (peek() == '(') {
      pos = start;
      fail("'" + name + "' is not a known function");
    }
    if (name == "x") return make_var();
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params[i] == name) return make_param(static_cast<int>(i));
    pos = start;
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

ExprPtr parse_expression(const std::string& source,
                         std::span<const std::string> params) {
  for (const auto& p : params)
    if (p == "x") throw validation_error("'x' cannot be a parameter name");
  Parser parser{source, params};
  return parser.parse();
}

// ---------------------------------------------------------------------------
// Differentiation and simplification
// ---------------------------------------------------------------------------

ExprPtr simplify(const ExprPtr& e) {
  switch (e->kind) {
    case NodeKind::Const:
    case NodeKind::Var:
    case NodeKind::Param:
      return e;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      ExprPtr a = simplify(e->a);
      ExprPtr b = simplify(e->b);
      bool ca = a->kind == NodeKind::Const;
      bool cb = b->kind == NodeKind::Const;
      if (ca && cb && !(e->kind == NodeKind::Div && b->value == 0.0))
        return make_const(apply_binary(e->kind, a->value, b->value));
      switch (e->kind) {
        case NodeKind::Add:
          if (ca && a->value == 0.0) return b;
          if (cb && b->value == 0.0) return a;
          break;
        case NodeKind::Sub:
          if (cb && b->value == 0.0) return a;
          if (ca && a->value == 0.0) return simplify(make_unary(NodeKind::Neg, b));
          break;
        case NodeKind::Mul:
          if ((ca && a->value == 0.0) || (cb && b->value == 0.0)) return make_const(0.0);
          if (ca && a->value == 1.0) return b;
          if (cb && b->value == 1.0) return a;
          break;
        case NodeKind::Div:
          if (ca && a->value == 0.0) return make_const(0.0);
          if (cb && b->value == 1.0) return a;
          break;
        default:
          break;
      }
      if (a == e->a && b == e->b) return e;
      return make_binary(e->kind, a, b);
    }
    case NodeKind::Pow: {
      ExprPtr a = simplify(e->a);
      if (e->value == 0.0) return make_const(1.0);
      if (e->value == 1.0) return a;
      if (a->kind == NodeKind::Const && !(a->value == 0.0 && e->value <= 0.0))
        return make_const(pow_checked(a->value, e->value));
      if (a == e->a) return e;
      return make_pow(a, e->value);
    }
    default: {  // unary
      ExprPtr a = simplify(e->a);
      if (a->kind == NodeKind::Const) {
        // fold only when inside the function's domain
        bool foldable = true;
        if (e->kind == NodeKind::Log && a->value <= 0.0) foldable = false;
        if (e->kind == NodeKind::Sqrt && a->value < 0.0) foldable = false;
        if (foldable) return make_const(apply_unary(e->kind, a->value));
      }
      if (e->kind == NodeKind::Neg && a->kind == NodeKind::Neg) return a->a;
      if (a == e->a) return e;
      return make_unary(e->kind, a);
    }
  }
}

ExprPtr differentiate(const ExprPtr& e, int wrt_param) {
  switch (e->kind) {
    case NodeKind::Const:
      return make_const(0.0);
    case NodeKind::Var:
      return make_const(wrt_param < 0 ? 1.0 : 0.0);
    case NodeKind::Param:
      return make_const(e->param == wrt_param ? 1.0 : 0.0);
    case NodeKind::Neg:
      return make_unary(NodeKind::Neg, differentiate(e->a, wrt_param));
    case NodeKind::Sin:
      return make_binary(NodeKind::Mul, make_unary(NodeKind::Cos, e->a),
                         differentiate(e->a, wrt_param));
    case NodeKind::Cos:
      return make_unary(NodeKind::Neg,
                        make_binary(NodeKind::Mul, make_unary(NodeKind::Sin, e->a),
                                    differentiate(e->a, wrt_param)));
    case NodeKind::Atan:
      return make_binary(
          NodeKind::Div, differentiate(e->a, wrt_param),
          make_binary(NodeKind::Add, make_const(1.0), make_pow(e->a, 2.0)));
    case NodeKind::Log:
      return make_binary(NodeKind::Div, differentiate(e->a, wrt_param), e->a);
    case NodeKind::Exp:
      return make_binary(NodeKind::Mul, make_unary(NodeKind::Exp, e->a),
                         differentiate(e->a, wrt_param));
    case NodeKind::Sqrt:
      return make_binary(
          NodeKind::Div, differentiate(e->a, wrt_param),
          make_binary(NodeKind::Mul, make_const(2.0), make_unary(NodeKind::Sqrt, e->a)));
    case NodeKind::Abs:
      return make_binary(NodeKind::Mul, make_unary(NodeKind::Sign, e->a),
                         differentiate(e->a, wrt_param));
    case NodeKind::Sign:
      return make_const(0.0);  // a.e. derivative; diagnostics only
    case NodeKind::Add:
      return make_binary(NodeKind::Add, differentiate(e->a, wrt_param),
                         differentiate(e->b, wrt_param));
    case NodeKind::Sub:
      return make_binary(NodeKind::Sub, differentiate(e->a, wrt_param),
                         differentiate(e->b, wrt_param));
    case NodeKind::Mul:
      return make_binary(
          NodeKind::Add,
          make_binary(NodeKind::Mul, differentiate(e->a, wrt_param), e->b),
          make_binary(NodeKind::Mul, e->a, differentiate(e->b, wrt_param)));
    case NodeKind::Div:
      return make_binary(
          NodeKind::Div,
          make_binary(
              NodeKind::Sub,
              make_binary(NodeKind::Mul, differentiate(e->a, wrt_param), e->b),
              make_binary(NodeKind::Mul, e->a, differentiate(e->b, wrt_param))),
          make_pow(e->b, 2.0));
    case NodeKind::Pow:
      // d u^c = c * u^(c-1) * u'
      return make_binary(
          NodeKind::Mul, make_const(e->value),
          make_binary(NodeKind::Mul, make_pow(e->a, e->value - 1.0),
                      differentiate(e->a, wrt_param)));
  }
  throw error("unreachable");
}

bool is_const_zero(const Expr& e) {
  return e.kind == NodeKind::Const && e.value == 0.0;
}

ExprPtr substitute_params(const ExprPtr& e, std::span<const double> values) {
  switch (e->kind) {
    case NodeKind::Const:
    case NodeKind::Var:
      return e;
    case NodeKind::Param:
      return make_const(values[static_cast<std::size_t>(e->param)]);
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return make_binary(e->kind, substitute_params(e->a, values),
                         substitute_params(e->b, values));
    case NodeKind::Pow:
      return make_pow(substitute_params(e->a, values), e->value);
    default:
      return make_unary(e->kind, substitute_params(e->a, values));
  }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace {

int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string const_to_string(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr& e, std::span<const std::string> params, std::string& out) {
  auto child = [&](const Expr& c, bool needs_paren) {
    if (needs_paren) out += '(';
    print(c, params, out);
    if (needs_paren) out += ')';
  };
  switch (e.kind) {
    case NodeKind::Const:
      if (e.value < 0.0) {
        out += '(';
        out += const_to_string(e.value);
        out += ')';
      } else {
        out += const_to_string(e.value);
      }
      return;
    case NodeKind::Var:
      out += 'x';
      return;
    case NodeKind::Param:
      out += params[static_cast<std::size_t>(e.param)];
      return;
    case NodeKind::Neg:
      out += '-';
      child(*e.a, precedence(e.a->kind) < precedence(NodeKind::Neg));
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div: {
      const char* op = e.kind == NodeKind::Add   ? " + "
                       : e.kind == NodeKind::Sub ? " - "
                       : e.kind == NodeKind::Mul ? "*"
                                                 : "/";
      int p = precedence(e.kind);
      child(*e.a, precedence(e.a->kind) < p);
      out += op;
      // right child of - and / needs parens at equal precedence
      child(*e.b, precedence(e.b->kind) < p ||
                      (precedence(e.b->kind) == p &&
                       (e.kind == NodeKind::Sub || e.kind == NodeKind::Div)));
      return;
    }
    case NodeKind::Pow:
      child(*e.a, precedence(e.a->kind) <= precedence(NodeKind::Pow));
      out += '^';
      if (e.value < 0.0 || e.value != std::nearbyint(e.value)) {
        out += '(';
        out += const_to_string(e.value);
        out += ')';
      } else {
        out += const_to_string(e.value);
      }
      return;
    default: {
      static const char* names[] = {"", "", "", "", "sin", "cos", "atan", "log",
                                    "exp", "sqrt", "abs", "sign"};
      out += names[static_cast<int>(e.kind)];
      out += '(';
      print(*e.a, params, out);
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e, std::span<const std::string> params) {
  std::string out;
  print(e, params, out);
  return out;
}

// ---------------------------------------------------------------------------
// Compilation
// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e) {
  std::size_t depth = 0, max_depth = 0;
  // postorder walk
  struct Frame {
    const Expr* node;
    int stage;
  };
  std::vector<Frame> stack{{&e, 0}};
  while (!stack.empty()) {
    auto& [node, stage] = stack.back();
    if (node->a && stage == 0) {
      stage = 1;
      stack.push_back({node->a.get(), 0});
      continue;
    }
    if (node->b && stage == 1) {
      stage = 2;
      stack.push_back({node->b.get(), 0});
      continue;
    }
    ops_.push_back({node->kind, node->value, node->param});
    switch (node->kind) {
      case NodeKind::Const:
      case NodeKind::Var:
      case NodeKind::Param:
        ++depth;
        max_depth = std::max(max_depth, depth);
        break;
      case NodeKind::Add:
      case NodeKind::Sub:
      case NodeKind::Mul:
      case NodeKind::Div:
        --depth;
        break;
      default:
        break;  // unary and Pow keep depth
    }
    stack.pop_back();
  }
  depth_ = max_depth;
}

double CompiledExpr::eval(double x, std::span<const double> theta) const {
  double stack[64];
  double* sp = stack;
  if (depth_ > 64) throw error("expression too deep to evaluate");
  for (const Op& op : ops_) {
    switch (op.code) {
      case NodeKind::Const:
        *sp++ = op.value;
        break;
      case NodeKind::Var:
        *sp++ = x;
        break;
      case NodeKind::Param:
        *sp++ = theta[static_cast<std::size_t>(op.param)];
        break;
      case NodeKind::Add:
        sp[-2] = sp[-2] + sp[-1];
        --sp;
        break;
      case NodeKind::Sub:
        sp[-2] = sp[-2] - sp[-1];
        --sp;
        break;
      case NodeKind::Mul:
        sp[-2] = sp[-2] * sp[-1];
        --sp;
        break;
      case NodeKind::Div:
        if (sp[-1] == 0.0) throw domain_error("division by zero");
        sp[-2] = sp[-2] / sp[-1];
        --sp;
        break;
      case NodeKind::Pow:
        sp[-1] = pow_checked(sp[-1], op.value);
        break;
      default:
        sp[-1] = apply_unary(op.code, sp[-1]);
        break;
    }
  }
  double r = stack[0];
  if (!std::isfinite(r)) throw domain_error("non-finite value in evaluation");
  return r;
}

}  // namespace levyest
