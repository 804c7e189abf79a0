#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "apfsm/rational.hpp"

namespace apfsm {

struct Model;

/// Source position, 1-based. (0,0) marks synthesized nodes.
struct SourceLoc {
  int line = 0;
  int col = 0;
};

enum class ExprOp {
  Lit,       // rational literal
  Var,       // variable reference
  ConstRef,  // plain integer constant
  IntervalRef,  // interval constant; value picked by the active corner
  Add,
  Sub,
  Mul,
  Div,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  And,
  Or,
  Not,
};

/// Expression tree shared by guards, weights, label predicates and update
/// amounts. There is a single value domain (exact rationals); comparisons and
/// boolean connectives yield 0/1, and guard satisfaction means "evaluates to
/// nonzero".
struct Expr {
  ExprOp op = ExprOp::Lit;
  Rat lit;
  std::string name;  // Var/ConstRef/IntervalRef
  int ref = -1;      // index into the model's variable/constant/interval table, set by validate
  std::unique_ptr<Expr> lhs;
  std::unique_ptr<Expr> rhs;
  SourceLoc loc;

  Expr() = default;
  Expr(Expr&&) = default;
  Expr& operator=(Expr&&) = default;
  Expr(const Expr& other) { *this = other; }
  Expr& operator=(const Expr& other);  // deep copy

  Expr clone() const;

  static Expr literal(Rat v);
  static Expr var(std::string n);
  static Expr binary(ExprOp o, Expr a, Expr b);
  static Expr unary_not(Expr a);
};

bool expr_equal(const Expr& a, const Expr& b);

/// Corner binding: for every interval constant, 0 selects the lower endpoint
/// and 1 the upper. Null means "degenerate intervals only".
struct EvalCtx {
  const Model& model;
  std::span<const std::int32_t> values;
  const std::uint8_t* corner = nullptr;
};

Rat eval_expr(const Expr& e, const EvalCtx& ctx);
bool eval_guard(const Expr& e, const EvalCtx& ctx);

/// Collects the indices of non-degenerate interval constants referenced by
/// the expression, in first-appearance order.
void collect_interval_refs(const Expr& e, const Model& model, std::vector<int>& out);

std::string print_expr(const Expr& e);

}  // namespace apfsm
