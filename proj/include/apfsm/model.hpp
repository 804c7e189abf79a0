#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apfsm/expr.hpp"
#include "apfsm/rational.hpp"

namespace apfsm {

/// Error raised by model evaluation and state-space construction. `code` is a
/// stable machine-readable identifier (e.g. "domain-violation", "weight-tie").
struct ModelError : std::runtime_error {
  std::string code;
  ModelError(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

struct VariableDecl {
  std::string name;
  std::int32_t lo = 0;
  std::int32_t hi = 0;
  std::int32_t init = 0;
  SourceLoc loc;
};

struct ConstDecl {
  std::string name;
  std::int64_t value = 0;
  SourceLoc loc;
};

struct IntervalDecl {
  std::string name;
  std::int32_t lo = 0;
  std::int32_t hi = 0;
  SourceLoc loc;
  bool degenerate() const { return lo == hi; }
};

enum class UpdateKind { Assign, Add, Sub };

struct UpdateOp {
  std::string var;
  int var_idx = -1;
  UpdateKind kind = UpdateKind::Assign;
  Expr amount;
  SourceLoc loc;
};

struct Outcome {
  Rat prob;
  std::vector<UpdateOp> updates;
  SourceLoc loc;
};

struct Command {
  std::string action;
  Expr guard;
  Expr weight;
  std::vector<Outcome> outcomes;
  SourceLoc loc;
};

struct LabelDecl {
  std::string name;
  Expr pred;
  SourceLoc loc;
};

/// A total assignment of the model's variables, in declaration order.
using Valuation = std::vector<std::int32_t>;

struct Model {
  std::vector<VariableDecl> variables;
  std::vector<ConstDecl> constants;
  std::vector<IntervalDecl> intervals;
  std::vector<LabelDecl> labels;
  std::vector<Command> commands;

  int var_index(const std::string& name) const;
  int const_index(const std::string& name) const;
  int interval_index(const std::string& name) const;
  int label_index(const std::string& name) const;

  Valuation initial_state() const;
  bool in_domain(const Valuation& s) const;
  std::string format_state(std::span<const std::int32_t> s) const;
};

bool model_equal(const Model& a, const Model& b);

/// s[v:=x] / s[v±x]. Throws ModelError("domain-violation") when the result
/// leaves the variable's domain; violations are never clamped.
Valuation apply_update(const Model& m, const Valuation& s, const UpdateOp& u,
                       const std::uint8_t* corner = nullptr);

/// Applies one outcome's updates sequentially: each amount is evaluated
/// against the partially updated valuation, matching chained s[..][..]
/// substitution.
Valuation apply_outcome(const Model& m, const Valuation& s, const Outcome& o,
                        const std::uint8_t* corner = nullptr);

std::vector<const Command*> enabled_commands(const Model& m, const Valuation& s);
std::vector<std::string> enabled_actions(const Model& m, const Valuation& s);

/// Argmax of the weight function over enabled commands. Weights are compared
/// exactly; equal weights on two enabled actions are a model-validity error
/// ("weight-tie"), an empty enabled set is "no-action", and two enabled
/// commands sharing an action name is "ambiguous-action".
const Command& select_command(const Model& m, const Valuation& s);
std::string select_action(const Model& m, const Valuation& s);

/// Successor distribution of an enabled command, with duplicate successors
/// merged by summing probability. Probabilities stay exact.
std::vector<std::pair<Rat, Valuation>> outcome_distribution(const Model& m, const Valuation& s,
                                                            const Command& c,
                                                            const std::uint8_t* corner = nullptr);

/// Checks that every enabled command's weight lies in [0,1]; throws
/// ModelError("weight-range") otherwise. Used during state-space build.
void check_weights_in_range(const Model& m, const Valuation& s);

}  // namespace apfsm
