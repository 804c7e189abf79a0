#include "apfsm/expr.hpp"

#include <stdexcept>

#include "apfsm/model.hpp"

namespace apfsm {

Expr& Expr::operator=(const Expr& other) {
  if (this == &other) return *this;
  op = other.op;
  lit = other.lit;
  name = other.name;
  ref = other.ref;
  loc = other.loc;
  lhs = other.lhs ? std::make_unique<Expr>(*other.lhs) : nullptr;
  rhs = other.rhs ? std::make_unique<Expr>(*other.rhs) : nullptr;
  return *this;
}

Expr Expr::clone() const { return *this; }

Expr Expr::literal(Rat v) {
  Expr e;
  e.op = ExprOp::Lit;
  e.lit = v;
  return e;
}

Expr Expr::var(std::string n) {
  Expr e;
  e.op = ExprOp::Var;
  e.name = std::move(n);
  return e;
}

Expr Expr::binary(ExprOp o, Expr a, Expr b) {
  Expr e;
  e.op = o;
  e.lhs = std::make_unique<Expr>(std::move(a));
  e.rhs = std::make_unique<Expr>(std::move(b));
  return e;
}

Expr Expr::unary_not(Expr a) {
  Expr e;
  e.op = ExprOp::Not;
  e.lhs = std::make_unique<Expr>(std::move(a));
  return e;
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case ExprOp::Lit:
      if (a.lit != b.lit) return false;
      break;
    case ExprOp::Var:
    case ExprOp::ConstRef:
    case ExprOp::IntervalRef:
      if (a.name != b.name) return false;
      break;
    default:
      break;
  }
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !expr_equal(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !expr_equal(*a.rhs, *b.rhs)) return false;
  return true;
}

Rat eval_expr(const Expr& e, const EvalCtx& ctx) {
  switch (e.op) {
    case ExprOp::Lit:
      return e.lit;
    case ExprOp::Var:
      return Rat(ctx.values[e.ref]);
    case ExprOp::ConstRef:
      return Rat(ctx.model.constants[e.ref].value);
    case ExprOp::IntervalRef: {
      const IntervalDecl& iv = ctx.model.intervals[e.ref];
      if (iv.degenerate()) return Rat(iv.lo);
      if (ctx.corner == nullptr)
        throw ModelError("interval-in-dtmc",
                         "interval constant '" + iv.name + "' needs a corner binding");
      return Rat(ctx.corner[e.ref] ? iv.hi : iv.lo);
    }
    case ExprOp::And: {
      if (eval_expr(*e.lhs, ctx).is_zero()) return Rat(0);
      return eval_expr(*e.rhs, ctx).is_zero() ? Rat(0) : Rat(1);
    }
    case ExprOp::Or: {
      if (!eval_expr(*e.lhs, ctx).is_zero()) return Rat(1);
      return eval_expr(*e.rhs, ctx).is_zero() ? Rat(0) : Rat(1);
    }
    case ExprOp::Not:
      return eval_expr(*e.lhs, ctx).is_zero() ? Rat(1) : Rat(0);
    default:
      break;
  }
  Rat a = eval_expr(*e.lhs, ctx);
  Rat b = eval_expr(*e.rhs, ctx);
  switch (e.op) {
    case ExprOp::Add: return a + b;
    case ExprOp::Sub: return a - b;
    case ExprOp::Mul: return a * b;
    case ExprOp::Div:
      if (b.is_zero()) throw ModelError("div-zero", "division by zero in expression");
      return a / b;
    case ExprOp::Eq: return Rat(a == b ? 1 : 0);
    case ExprOp::Ne: return Rat(a != b ? 1 : 0);
    case ExprOp::Lt: return Rat(a < b ? 1 : 0);
    case ExprOp::Le: return Rat(a <= b ? 1 : 0);
    case ExprOp::Gt: return Rat(a > b ? 1 : 0);
    case ExprOp::Ge: return Rat(a >= b ? 1 : 0);
    default:
      throw std::logic_error("eval_expr: unhandled operator");
  }
}

bool eval_guard(const Expr& e, const EvalCtx& ctx) { return !eval_expr(e, ctx).is_zero(); }

void collect_interval_refs(const Expr& e, const Model& model, std::vector<int>& out) {
  if (e.op == ExprOp::IntervalRef) {
    if (!model.intervals[e.ref].degenerate()) {
      for (int i : out)
        if (i == e.ref) return;
      out.push_back(e.ref);
    }
    return;
  }
  if (e.lhs) collect_interval_refs(*e.lhs, model, out);
  if (e.rhs) collect_interval_refs(*e.rhs, model, out);
}

namespace {

// Precedence levels, loosest first. All binary operators are left-associative.
int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Or: return 1;
    case ExprOp::And: return 2;
    case ExprOp::Eq:
    case ExprOp::Ne:
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge: return 3;
    case ExprOp::Add:
    case ExprOp::Sub: return 4;
    case ExprOp::Mul:
    case ExprOp::Div: return 5;
    case ExprOp::Not: return 6;
    default: return 7;  // atoms
  }
}

const char* op_token(ExprOp op) {
  switch (op) {
    case ExprOp::Or: return "|";
    case ExprOp::And: return "&";
    case ExprOp::Eq: return "=";
    case ExprOp::Ne: return "!=";
    case ExprOp::Lt: return "<";
    case ExprOp::Le: return "<=";
    case ExprOp::Gt: return ">";
    case ExprOp::Ge: return ">=";
    case ExprOp::Add: return "+";
    case ExprOp::Sub: return "-";
    case ExprOp::Mul: return "*";
    case ExprOp::Div: return "/";
    default: return "?";
  }
}

void print_rec(const Expr& e, int parent_prec, bool is_rhs, std::string& out) {
  int prec = precedence(e.op);
  switch (e.op) {
    case ExprOp::Lit:
      // A fraction literal prints as n/d; parenthesize where the slash would
      // otherwise bind into a surrounding arithmetic context.
      if (!e.lit.is_integer() && parent_prec >= 4) {
        out += '(';
        out += e.lit.str();
        out += ')';
      } else {
        out += e.lit.str();
      }
      return;
    case ExprOp::Var:
    case ExprOp::ConstRef:
    case ExprOp::IntervalRef:
      out += e.name;
      return;
    case ExprOp::Not: {
      out += '!';
      print_rec(*e.lhs, prec, false, out);
      return;
    }
    default:
      break;
  }
  // Comparisons are non-associative: a comparison child of a comparison is
  // always parenthesized.
  bool need = prec < parent_prec || (prec == parent_prec && (is_rhs || prec == 3));
  if (need) out += '(';
  print_rec(*e.lhs, prec, false, out);
  out += ' ';
  out += op_token(e.op);
  out += ' ';
  print_rec(*e.rhs, prec, true, out);
  if (need) out += ')';
}

}  // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  print_rec(e, 0, false, out);
  return out;
}

}  // namespace apfsm
