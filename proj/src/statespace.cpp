#include "apfsm/statespace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <ostream>

namespace apfsm {

std::string to_string(BuildMode m) {
  switch (m) {
    case BuildMode::Autonomous: return "autonomous";
    case BuildMode::Interval: return "interval";
    case BuildMode::Uniform: return "uniform";
  }
  return "?";
}

namespace {

// Open-addressing intern table over byte-packed valuations. Values are stored
// offset by the domain's lower bound, 1/2/4 bytes per variable as the span
// requires; ids are dense and assigned in insertion order.
class StateTable {
 public:
  explicit StateTable(const Model& m) {
    widths_.reserve(m.variables.size());
    offsets_.reserve(m.variables.size());
    key_bytes_ = 0;
    for (const auto& v : m.variables) {
      std::uint64_t span = static_cast<std::int64_t>(v.hi) - v.lo;
      int w = span < 256 ? 1 : (span < 65536 ? 2 : 4);
      widths_.push_back(w);
      offsets_.push_back(key_bytes_);
      key_bytes_ += w;
    }
    slots_.assign(1024, 0);
    mask_ = slots_.size() - 1;
  }

  int key_bytes() const { return key_bytes_; }
  std::uint32_t size() const { return count_; }

  void pack(const Model& m, std::span<const std::int32_t> vals, std::uint8_t* out) const {
    for (std::size_t i = 0; i < widths_.size(); ++i) {
      std::uint32_t u = static_cast<std::uint32_t>(vals[i] - m.variables[i].lo);
      std::memcpy(out + offsets_[i], &u, widths_[i]);
    }
  }

  void unpack(const Model& m, const std::uint8_t* key, std::int32_t* out) const {
    for (std::size_t i = 0; i < widths_.size(); ++i) {
      std::uint32_t u = 0;
      std::memcpy(&u, key + offsets_[i], widths_[i]);
      out[i] = static_cast<std::int32_t>(u) + m.variables[i].lo;
    }
  }

  // Returns (id, inserted).
  std::pair<std::uint32_t, bool> intern(const std::uint8_t* key) {
    if (count_ == UINT32_MAX)
      throw ModelError("state-budget-exceeded", "dense 32-bit state ids exhausted");
    if ((static_cast<std::uint64_t>(count_) + 1) * 10 >= slots_.size() * 7) grow();
    std::uint64_t h = hash(key);
    std::size_t i = h & mask_;
    while (true) {
      std::uint32_t slot = slots_[i];
      if (slot == 0) {
        slots_[i] = count_ + 1;
        arena_.insert(arena_.end(), key, key + key_bytes_);
        return {count_++, true};
      }
      if (std::memcmp(arena_.data() + static_cast<std::size_t>(slot - 1) * key_bytes_, key,
                      key_bytes_) == 0)
        return {slot - 1, false};
      i = (i + 1) & mask_;
    }
  }

  const std::uint8_t* key_of(std::uint32_t id) const {
    return arena_.data() + static_cast<std::size_t>(id) * key_bytes_;
  }

 private:
  std::uint64_t hash(const std::uint8_t* key) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < key_bytes_; ++i) {
      h ^= key[i];
      h *= 1099511628211ull;
    }
    return h;
  }

  void grow() {
    std::vector<std::uint32_t> old = std::move(slots_);
    slots_.assign(old.size() * 2, 0);
    mask_ = slots_.size() - 1;
    for (std::uint32_t slot : old) {
      if (slot == 0) continue;
      std::uint64_t h = hash(arena_.data() + static_cast<std::size_t>(slot - 1) * key_bytes_);
      std::size_t i = h & mask_;
      while (slots_[i] != 0) i = (i + 1) & mask_;
      slots_[i] = slot;
    }
  }

  std::vector<int> widths_;
  std::vector<int> offsets_;
  int key_bytes_ = 0;
  std::vector<std::uint8_t> arena_;
  std::vector<std::uint32_t> slots_;
  std::size_t mask_ = 0;
  std::uint32_t count_ = 0;
};

std::uint64_t env_state_budget(std::uint64_t fallback) {
  const char* v = std::getenv("APFSM_STATE_BUDGET");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  unsigned long long parsed = std::strtoull(v, &end, 10);
  if (end == v || parsed == 0) return fallback;
  return parsed;
}

// Dispatch index over the commands' leading `var = literal` conjuncts.
// Guards like `m = 2 & px = 1 & py = 0 & ...` bucket by m, then px, then py,
// so candidate lookup touches a handful of commands instead of all of them.
// Filtered-out commands have a falsified conjunct, so the filter never drops
// an enabled command; surviving candidates still evaluate their full guard.
class CommandIndex {
 public:
  CommandIndex(const Model& model, const std::vector<const Command*>& cmds) {
    chains_.reserve(cmds.size());
    for (const Command* c : cmds) chains_.push_back(leading_eqs(c->guard));
    std::vector<int> all(cmds.size());
    for (std::size_t i = 0; i < cmds.size(); ++i) all[static_cast<int>(i)] = static_cast<int>(i);
    root_ = build_node(model, cmds, all, 0);
    commands_ = cmds;
  }

  void lookup(std::span<const std::int32_t> vals, std::vector<const Command*>& out) const {
    out.clear();
    const Node* node = root_.get();
    while (node) {
      for (int ci : node->here) out.push_back(commands_[ci]);
      if (node->var < 0) break;
      auto it = node->children.find(vals[node->var]);
      if (it == node->children.end()) break;
      node = it->second.get();
    }
  }

 private:
  struct Node {
    int var = -1;
    std::vector<int> here;
    std::map<std::int32_t, std::unique_ptr<Node>> children;
  };

  using Chain = std::vector<std::pair<int, std::int32_t>>;

  static void conjuncts(const Expr& e, std::vector<const Expr*>& out) {
    if (e.op == ExprOp::And) {
      conjuncts(*e.lhs, out);
      out.push_back(e.rhs.get());
      return;
    }
    out.push_back(&e);
  }

  static Chain leading_eqs(const Expr& guard) {
    std::vector<const Expr*> cs;
    cs.clear();
    conjuncts(guard, cs);
    Chain chain;
    for (const Expr* c : cs) {
      if (c->op != ExprOp::Eq) break;
      const Expr* v = c->lhs.get();
      const Expr* l = c->rhs.get();
      if (v->op != ExprOp::Var) std::swap(v, l);
      if (v->op != ExprOp::Var || l->op != ExprOp::Lit || !l->lit.is_integer()) break;
      chain.emplace_back(v->ref, static_cast<std::int32_t>(l->lit.num));
    }
    return chain;
  }

  std::unique_ptr<Node> build_node(const Model& model, const std::vector<const Command*>& cmds,
                                   const std::vector<int>& members, std::size_t depth) {
    auto node = std::make_unique<Node>();
    // majority variable among the members' next chain element
    std::map<int, int> votes;
    for (int ci : members)
      if (chains_[ci].size() > depth) ++votes[chains_[ci][depth].first];
    int best_var = -1, best_count = 0;
    for (auto [var, count] : votes)
      if (count > best_count) {
        best_var = var;
        best_count = count;
      }
    if (best_var < 0 || best_count < 2) {
      node->here = members;
      return node;
    }
    node->var = best_var;
    std::map<std::int32_t, std::vector<int>> split;
    for (int ci : members) {
      if (chains_[ci].size() > depth && chains_[ci][depth].first == best_var)
        split[chains_[ci][depth].second].push_back(ci);
      else
        node->here.push_back(ci);
    }
    for (auto& [val, ids] : split) node->children[val] = build_node(model, cmds, ids, depth + 1);
    return node;
  }

  std::vector<const Command*> commands_;
  std::vector<Chain> chains_;
  std::unique_ptr<Node> root_;
};

}  // namespace

bool StateSpace::is_absorbing(std::uint32_t id) const {
  for (std::uint64_t c = choice_offset[id]; c < choice_offset[id + 1]; ++c) {
    std::uint64_t b = row_offset[c], e = row_offset[c + 1];
    if (e - b != 1 || target[b] != id) return false;
  }
  return true;
}

StateSpace build(const Model& model, const BuildOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  StateSpace ss;
  ss.model = model;
  ss.mode = opts.mode;
  ss.num_vars = static_cast<int>(model.variables.size());
  std::uint64_t budget = env_state_budget(opts.state_budget);

  StateTable table(model);
  std::vector<std::uint8_t> keybuf(table.key_bytes());

  Valuation init = model.initial_state();
  if (!model.in_domain(init))
    throw ModelError("domain-violation", "initial state outside variable domains");
  table.pack(model, init, keybuf.data());
  table.intern(keybuf.data());
  ss.initial_id = 0;

  ss.choice_offset.push_back(0);
  ss.row_offset.push_back(0);
  ss.label_sets.assign(model.labels.size(), {});

  Valuation val(ss.num_vars);
  std::vector<std::uint8_t> corner(model.intervals.size(), 0);
  // Per-corner rows, exact probabilities, first-appearance target order.
  std::vector<std::vector<std::pair<std::uint32_t, Rat>>> corner_rows;

  std::vector<const Command*> all_commands;
  for (const Command& c : model.commands) all_commands.push_back(&c);
  CommandIndex index(model, all_commands);
  std::vector<const Command*> candidates, enabled;

  for (std::uint32_t id = 0; id < table.size(); ++id) {
    table.unpack(model, table.key_of(id), val.data());
    EvalCtx ctx{model, val, nullptr};

    for (std::size_t li = 0; li < model.labels.size(); ++li)
      ss.label_sets[li].push_back(eval_guard(model.labels[li].pred, ctx));
    ss.deadlock.push_back(false);

    index.lookup(val, candidates);
    enabled.clear();
    for (const Command* c : candidates)
      if (eval_guard(c->guard, ctx)) enabled.push_back(c);
    if (enabled.empty()) {
      // Deadlock: absorbing self-loop so probability mass is conserved.
      ss.deadlock.back() = true;
      ss.target.push_back(id);
      ss.prob.push_back(1.0);
      ss.row_offset.push_back(ss.target.size());
      ss.choice_offset.push_back(ss.row_offset.size() - 1);
      continue;
    }

    for (std::size_t i = 0; i < enabled.size(); ++i)
      for (std::size_t j = i + 1; j < enabled.size(); ++j)
        if (enabled[i]->action == enabled[j]->action)
          throw ModelError("ambiguous-action", "two commands for action '" + enabled[i]->action +
                                                   "' enabled in state " + model.format_state(val));
    std::vector<Rat> weights(enabled.size());
    for (std::size_t i = 0; i < enabled.size(); ++i) {
      weights[i] = eval_expr(enabled[i]->weight, ctx);
      if (weights[i] < Rat(0) || weights[i] > Rat(1))
        throw ModelError("weight-range", "weight of action '" + enabled[i]->action +
                                             "' evaluates to " + weights[i].str() +
                                             " outside [0,1] in state " + model.format_state(val));
    }
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < enabled.size(); ++i) {
      for (std::size_t j = i + 1; j < enabled.size(); ++j)
        if (weights[i] == weights[j])
          throw ModelError("weight-tie", "actions '" + enabled[i]->action + "' and '" +
                                             enabled[j]->action + "' have equal weight " +
                                             weights[i].str() + " in state " +
                                             model.format_state(val));
      if (weights[i] > weights[best_i]) best_i = i;
    }
    const Command* best = enabled[best_i];

    std::vector<int> ivs;
    for (const Outcome& o : best->outcomes)
      for (const UpdateOp& u : o.updates) collect_interval_refs(u.amount, model, ivs);
    std::sort(ivs.begin(), ivs.end());
    int k = static_cast<int>(ivs.size());
    if (k > opts.max_corner_constants)
      throw ModelError("corner-cap", "command for action '" + best->action + "' references " +
                                         std::to_string(k) + " interval constants (cap " +
                                         std::to_string(opts.max_corner_constants) + ")");
    if (k > 0 && opts.mode == BuildMode::Autonomous)
      throw ModelError("interval-in-dtmc",
                       "autonomous build reached a command with non-degenerate interval "
                       "constants; use interval or uniform mode (state " +
                           model.format_state(val) + ")");

    std::uint32_t ncorners = 1u << k;
    corner_rows.assign(ncorners, {});
    for (std::uint32_t mask = 0; mask < ncorners; ++mask) {
      for (int bi = 0; bi < k; ++bi) corner[ivs[bi]] = (mask >> bi) & 1u;
      auto dist = outcome_distribution(model, val, *best, corner.data());
      auto& row = corner_rows[mask];
      for (auto& [p, succ] : dist) {
        table.pack(model, succ, keybuf.data());
        auto [tid, inserted] = table.intern(keybuf.data());
        if (inserted && table.size() > budget)
          throw ModelError("state-budget-exceeded",
                           "state budget of " + std::to_string(budget) + " states exceeded");
        bool merged = false;
        for (auto& [t, q] : row)
          if (t == tid) {
            q = q + p;
            merged = true;
            break;
          }
        if (!merged) row.emplace_back(tid, p);
      }
    }

    if (opts.mode == BuildMode::Uniform && k > 0) {
      std::vector<std::pair<std::uint32_t, Rat>> avg;
      for (auto& row : corner_rows)
        for (auto& [t, p] : row) {
          bool merged = false;
          for (auto& [at, ap] : avg)
            if (at == t) {
              ap = ap + p;
              merged = true;
              break;
            }
          if (!merged) avg.emplace_back(t, p);
        }
      Rat scale(1, static_cast<std::int64_t>(ncorners));
      for (auto& [t, p] : avg) {
        ss.target.push_back(t);
        ss.prob.push_back((p * scale).to_double());
      }
      ss.row_offset.push_back(ss.target.size());
    } else {
      for (auto& row : corner_rows) {
        for (auto& [t, p] : row) {
          ss.target.push_back(t);
          ss.prob.push_back(p.to_double());
        }
        ss.row_offset.push_back(ss.target.size());
      }
    }
    ss.choice_offset.push_back(ss.row_offset.size() - 1);
  }

  // Exhaustive post-build stochasticity check.
  for (std::size_t c = 0; c + 1 < ss.row_offset.size(); ++c) {
    double sum = 0.0;
    for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i) sum += ss.prob[i];
    if (std::fabs(sum - 1.0) > 1e-9)
      throw ModelError("stochasticity", "probability row sums to " + std::to_string(sum));
  }

  ss.state_values.resize(static_cast<std::size_t>(table.size()) * ss.num_vars);
  for (std::uint32_t id = 0; id < table.size(); ++id)
    table.unpack(model, table.key_of(id),
                 ss.state_values.data() + static_cast<std::size_t>(id) * ss.num_vars);

  ss.stats.states = table.size();
  ss.stats.choices = ss.row_offset.size() - 1;
  ss.stats.transitions = ss.target.size();
  ss.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return ss;
}

int TerminalPartition::index_of(const std::string& category) const {
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == category) return static_cast<int>(i);
  return -1;
}

TerminalPartition classify_terminals(const StateSpace& ss) {
  const Model& m = ss.model;
  TerminalPartition part;
  std::vector<int> label_order;
  for (const char* name : {"success", "emergency", "timeout", "missed"}) {
    int idx = m.label_index(name);
    if (idx >= 0) label_order.push_back(idx);
  }
  for (std::size_t i = 0; i < m.labels.size(); ++i)
    if (std::find(label_order.begin(), label_order.end(), static_cast<int>(i)) == label_order.end())
      label_order.push_back(static_cast<int>(i));

  for (int li : label_order) part.categories.push_back(m.labels[li].name);
  part.categories.push_back("deadlock");
  part.members.assign(part.categories.size(), {});

  for (std::uint32_t id = 0; id < ss.num_states(); ++id) {
    if (!ss.is_absorbing(id)) continue;
    bool placed = false;
    for (std::size_t ci = 0; ci < label_order.size(); ++ci) {
      if (ss.has_label(id, label_order[ci])) {
        part.members[ci].push_back(id);
        placed = true;
        break;
      }
    }
    if (placed) continue;
    if (ss.deadlock[id]) {
      part.members.back().push_back(id);
      continue;
    }
    throw ModelError("unlabeled-terminal", "absorbing state " + m.format_state(ss.valuation(id)) +
                                               " matches no declared label");
  }
  return part;
}

void dump_statespace(const StateSpace& ss, std::ostream& os) {
  os << "apfsm-ss v1\n";
  const Model& m = ss.model;
  for (std::uint32_t id = 0; id < ss.num_states(); ++id) {
    os << "state " << id << " ";
    auto vals = ss.valuation(id);
    for (int i = 0; i < ss.num_vars; ++i) {
      if (i) os << ',';
      os << m.variables[i].name << '=' << vals[i];
    }
    os << " [";
    bool first = true;
    for (std::size_t li = 0; li < m.labels.size(); ++li) {
      if (ss.has_label(id, static_cast<int>(li))) {
        if (!first) os << ' ';
        os << m.labels[li].name;
        first = false;
      }
    }
    if (ss.deadlock[id]) {
      if (!first) os << ' ';
      os << "deadlock";
    }
    os << "]\n";
    int choice_no = 0;
    for (std::uint64_t c = ss.choices_begin(id); c < ss.choices_end(id); ++c, ++choice_no) {
      os << "row " << id << " " << choice_no;
      for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", ss.prob[i]);
        os << " " << ss.target[i] << ":" << buf;
      }
      os << "\n";
    }
  }
}

}  // namespace apfsm
