#include "apfsm/model.hpp"

#include <algorithm>
#include <sstream>

namespace apfsm {

namespace {

int find_name(const auto& decls, const std::string& name) {
  for (std::size_t i = 0; i < decls.size(); ++i)
    if (decls[i].name == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

int Model::var_index(const std::string& name) const { return find_name(variables, name); }
int Model::const_index(const std::string& name) const { return find_name(constants, name); }
int Model::interval_index(const std::string& name) const { return find_name(intervals, name); }
int Model::label_index(const std::string& name) const { return find_name(labels, name); }

Valuation Model::initial_state() const {
  Valuation s(variables.size());
  for (std::size_t i = 0; i < variables.size(); ++i) s[i] = variables[i].init;
  return s;
}

bool Model::in_domain(const Valuation& s) const {
  if (s.size() != variables.size()) return false;
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (s[i] < variables[i].lo || s[i] > variables[i].hi) return false;
  return true;
}

std::string Model::format_state(std::span<const std::int32_t> s) const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (i) os << ',';
    os << variables[i].name << '=' << s[i];
  }
  os << '}';
  return os.str();
}

bool model_equal(const Model& a, const Model& b) {
  if (a.variables.size() != b.variables.size() || a.constants.size() != b.constants.size() ||
      a.intervals.size() != b.intervals.size() || a.labels.size() != b.labels.size() ||
      a.commands.size() != b.commands.size())
    return false;
  for (std::size_t i = 0; i < a.variables.size(); ++i) {
    const auto& x = a.variables[i];
    const auto& y = b.variables[i];
    if (x.name != y.name || x.lo != y.lo || x.hi != y.hi || x.init != y.init) return false;
  }
  for (std::size_t i = 0; i < a.constants.size(); ++i)
    if (a.constants[i].name != b.constants[i].name || a.constants[i].value != b.constants[i].value)
      return false;
  for (std::size_t i = 0; i < a.intervals.size(); ++i) {
    const auto& x = a.intervals[i];
    const auto& y = b.intervals[i];
    if (x.name != y.name || x.lo != y.lo || x.hi != y.hi) return false;
  }
  for (std::size_t i = 0; i < a.labels.size(); ++i)
    if (a.labels[i].name != b.labels[i].name || !expr_equal(a.labels[i].pred, b.labels[i].pred))
      return false;
  for (std::size_t i = 0; i < a.commands.size(); ++i) {
    const auto& x = a.commands[i];
    const auto& y = b.commands[i];
    if (x.action != y.action || !expr_equal(x.guard, y.guard) || !expr_equal(x.weight, y.weight))
      return false;
    if (x.outcomes.size() != y.outcomes.size()) return false;
    for (std::size_t j = 0; j < x.outcomes.size(); ++j) {
      const auto& ox = x.outcomes[j];
      const auto& oy = y.outcomes[j];
      if (ox.prob != oy.prob || ox.updates.size() != oy.updates.size()) return false;
      for (std::size_t k = 0; k < ox.updates.size(); ++k) {
        const auto& ux = ox.updates[k];
        const auto& uy = oy.updates[k];
        if (ux.var != uy.var || ux.kind != uy.kind || !expr_equal(ux.amount, uy.amount))
          return false;
      }
    }
  }
  return true;
}

Valuation apply_update(const Model& m, const Valuation& s, const UpdateOp& u,
                       const std::uint8_t* corner) {
  Valuation out = s;
  EvalCtx ctx{m, out, corner};
  Rat amount = eval_expr(u.amount, ctx);
  if (!amount.is_integer())
    throw ModelError("nonint-update", "update of '" + u.var + "' is not an integer: " + amount.str());
  std::int64_t v = out[u.var_idx];
  switch (u.kind) {
    case UpdateKind::Assign: v = amount.num; break;
    case UpdateKind::Add: v += amount.num; break;
    case UpdateKind::Sub: v -= amount.num; break;
  }
  const VariableDecl& decl = m.variables[u.var_idx];
  if (v < decl.lo || v > decl.hi)
    throw ModelError("domain-violation", "variable '" + decl.name + "' leaves [" +
                                             std::to_string(decl.lo) + "," + std::to_string(decl.hi) +
                                             "] with value " + std::to_string(v) + " in state " +
                                             m.format_state(s));
  out[u.var_idx] = static_cast<std::int32_t>(v);
  return out;
}

Valuation apply_outcome(const Model& m, const Valuation& s, const Outcome& o,
                        const std::uint8_t* corner) {
  Valuation cur = s;
  for (const UpdateOp& u : o.updates) cur = apply_update(m, cur, u, corner);
  return cur;
}

std::vector<const Command*> enabled_commands(const Model& m, const Valuation& s) {
  std::vector<const Command*> out;
  EvalCtx ctx{m, s, nullptr};
  for (const Command& c : m.commands)
    if (eval_guard(c.guard, ctx)) out.push_back(&c);
  return out;
}

std::vector<std::string> enabled_actions(const Model& m, const Valuation& s) {
  std::vector<std::string> out;
  for (const Command* c : enabled_commands(m, s))
    if (std::find(out.begin(), out.end(), c->action) == out.end()) out.push_back(c->action);
  return out;
}

const Command& select_command(const Model& m, const Valuation& s) {
  auto enabled = enabled_commands(m, s);
  if (enabled.empty()) throw ModelError("no-action", "no action enabled in state " + m.format_state(s));
  for (std::size_t i = 0; i < enabled.size(); ++i)
    for (std::size_t j = i + 1; j < enabled.size(); ++j)
      if (enabled[i]->action == enabled[j]->action)
        throw ModelError("ambiguous-action", "two commands for action '" + enabled[i]->action +
                                                 "' enabled in state " + m.format_state(s));
  EvalCtx ctx{m, s, nullptr};
  std::vector<Rat> weights(enabled.size());
  for (std::size_t i = 0; i < enabled.size(); ++i) weights[i] = eval_expr(enabled[i]->weight, ctx);
  std::size_t best = 0;
  for (std::size_t i = 0; i < enabled.size(); ++i) {
    for (std::size_t j = i + 1; j < enabled.size(); ++j)
      if (weights[i] == weights[j])
        throw ModelError("weight-tie", "actions '" + enabled[i]->action + "' and '" +
                                           enabled[j]->action + "' have equal weight " +
                                           weights[i].str() + " in state " + m.format_state(s));
    if (weights[i] > weights[best]) best = i;
  }
  return *enabled[best];
}

std::string select_action(const Model& m, const Valuation& s) { return select_command(m, s).action; }

void check_weights_in_range(const Model& m, const Valuation& s) {
  EvalCtx ctx{m, s, nullptr};
  for (const Command* c : enabled_commands(m, s)) {
    Rat w = eval_expr(c->weight, ctx);
    if (w < Rat(0) || w > Rat(1))
      throw ModelError("weight-range", "weight of action '" + c->action + "' evaluates to " +
                                           w.str() + " outside [0,1] in state " + m.format_state(s));
  }
}

std::vector<std::pair<Rat, Valuation>> outcome_distribution(const Model& m, const Valuation& s,
                                                            const Command& c,
                                                            const std::uint8_t* corner) {
  std::vector<std::pair<Rat, Valuation>> out;
  for (const Outcome& o : c.outcomes) {
    Valuation succ = apply_outcome(m, s, o, corner);
    bool merged = false;
    for (auto& [p, existing] : out) {
      if (existing == succ) {
        p = p + o.prob;
        merged = true;
        break;
      }
    }
    if (!merged) out.emplace_back(o.prob, std::move(succ));
  }
  return out;
}

}  // namespace apfsm
