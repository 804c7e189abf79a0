#include "apfsm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

namespace apfsm {

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Min: return "min";
    case Direction::Max: return "max";
    case Direction::Fixed: return "fixed";
  }
  return "?";
}

namespace {

using Bits = std::vector<bool>;

bool all_single_choice(const StateSpace& ss) {
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (ss.choices_end(s) - ss.choices_begin(s) != 1) return false;
  return true;
}

// Predecessor adjacency (state granularity, choices flattened).
struct Preds {
  std::vector<std::uint64_t> offset;
  std::vector<std::uint32_t> pred;

  explicit Preds(const StateSpace& ss) {
    std::vector<std::uint64_t> count(ss.num_states() + 1, 0);
    for (std::size_t i = 0; i < ss.target.size(); ++i) ++count[ss.target[i] + 1];
    offset.resize(ss.num_states() + 1, 0);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) offset[s + 1] = offset[s] + count[s + 1];
    pred.resize(ss.target.size());
    std::vector<std::uint64_t> fill(offset.begin(), offset.end() - 1);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s)
      for (std::uint64_t c = ss.choices_begin(s); c < ss.choices_end(s); ++c)
        for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i)
          pred[fill[ss.target[i]]++] = s;
  }
};

// States with an all-choices-and-probabilities path to `from` (existential
// backward reachability).
Bits exist_reach(const StateSpace& ss, const Preds& preds, const Bits& from,
                 const Bits* restrict_to = nullptr) {
  Bits seen(ss.num_states(), false);
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (from[s]) {
      seen[s] = true;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    std::uint32_t s = stack.back();
    stack.pop_back();
    for (std::uint64_t i = preds.offset[s]; i < preds.offset[s + 1]; ++i) {
      std::uint32_t p = preds.pred[i];
      if (seen[p]) continue;
      if (restrict_to && !(*restrict_to)[p]) continue;
      seen[p] = true;
      stack.push_back(p);
    }
  }
  return seen;
}

// Least fixpoint of: target ∪ { s | every choice has some successor already
// in the set }. States outside have min probability exactly 0.
Bits universal_reach(const StateSpace& ss, const Bits& target) {
  Bits in(target);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
      if (in[s]) continue;
      bool all_choices = true;
      for (std::uint64_t c = ss.choices_begin(s); c < ss.choices_end(s) && all_choices; ++c) {
        bool some = false;
        for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i)
          if (in[ss.target[i]]) {
            some = true;
            break;
          }
        if (!some) all_choices = false;
      }
      if (all_choices && ss.choices_end(s) > ss.choices_begin(s)) {
        in[s] = true;
        changed = true;
      }
    }
  }
  return in;
}

// Greatest fixpoint of: Z ⊆ base with some choice whose full support stays in
// Z. From these states one scheduler avoids leaving `base` forever.
Bits safe_gfp(const StateSpace& ss, const Bits& base) {
  Bits in(base);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
      if (!in[s]) continue;
      bool has_safe_choice = false;
      for (std::uint64_t c = ss.choices_begin(s); c < ss.choices_end(s) && !has_safe_choice; ++c) {
        bool all_in = true;
        for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i)
          if (!in[ss.target[i]]) {
            all_in = false;
            break;
          }
        if (all_in) has_safe_choice = true;
      }
      if (!has_safe_choice) {
        in[s] = false;
        changed = true;
      }
    }
  }
  return in;
}

// Standard double fixpoint for the max-probability-1 set.
Bits prob1_max(const StateSpace& ss, const Bits& target) {
  Bits u(ss.num_states(), true);
  while (true) {
    Bits v(target);
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
        if (v[s]) continue;
        bool found = false;
        for (std::uint64_t c = ss.choices_begin(s); c < ss.choices_end(s) && !found; ++c) {
          bool all_in_u = true, some_in_v = false;
          for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i) {
            if (!u[ss.target[i]]) {
              all_in_u = false;
              break;
            }
            if (v[ss.target[i]]) some_in_v = true;
          }
          if (all_in_u && some_in_v) found = true;
        }
        if (found) {
          v[s] = true;
          grew = true;
        }
      }
    }
    if (v == u) return u;
    u = std::move(v);
  }
}

struct Qualitative {
  Bits zero;  // value exactly 0
  Bits one;   // value exactly 1
};

Qualitative precompute(const StateSpace& ss, const Preds& preds, const Bits& target,
                       Direction dir) {
  Qualitative q;
  bool dtmc = dir == Direction::Fixed || all_single_choice(ss);
  Bits can_reach = exist_reach(ss, preds, target);
  if (dtmc || dir == Direction::Max) {
    q.zero.assign(ss.num_states(), false);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) q.zero[s] = !can_reach[s];
  } else {
    Bits w = universal_reach(ss, target);
    q.zero.assign(ss.num_states(), false);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) q.zero[s] = !w[s];
  }
  if (dtmc) {
    // P(s)=1 iff s cannot reach a probability-0 state.
    Bits bad = exist_reach(ss, preds, q.zero);
    q.one.assign(ss.num_states(), false);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) q.one[s] = !bad[s];
  } else if (dir == Direction::Max) {
    q.one = prob1_max(ss, target);
  } else {
    Bits not_target(ss.num_states(), false);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) not_target[s] = !target[s];
    Bits safe = safe_gfp(ss, not_target);
    Bits bad = exist_reach(ss, preds, safe, &not_target);
    q.one.assign(ss.num_states(), false);
    for (std::uint32_t s = 0; s < ss.num_states(); ++s) q.one[s] = !bad[s];
  }
  return q;
}

double kahan_row(const StateSpace& ss, std::uint64_t choice, const std::vector<double>& x,
                 const std::vector<double>* rho = nullptr) {
  double sum = 0.0, comp = 0.0;
  for (std::uint64_t i = ss.row_offset[choice]; i < ss.row_offset[choice + 1]; ++i) {
    double term = ss.prob[i] * (x[ss.target[i]] + (rho ? (*rho)[i] : 0.0));
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

// Jacobi sweeps: x_new from x_old only, so results are bit-identical for any
// worker count.
Convergence iterate(const StateSpace& ss, std::vector<double>& x, const Bits& frozen, Direction dir,
                    const SolveOptions& opts, const std::vector<double>* rho = nullptr) {
  std::vector<double> x_new(x.size());
  Convergence conv;
  std::uint32_t n = static_cast<std::uint32_t>(x.size());
  int nworkers = std::max(1, opts.workers);
  if (n < 4096) nworkers = 1;
  std::uint32_t chunk = (n + nworkers - 1) / nworkers;
  std::vector<double> worker_residual(nworkers, 0.0);

  auto body = [&](std::uint32_t lo, std::uint32_t hi, double* out_res) {
    double res = 0.0;
    for (std::uint32_t s = lo; s < hi; ++s) {
      if (frozen[s]) {
        x_new[s] = x[s];
        continue;
      }
      std::uint64_t b = ss.choices_begin(s), e = ss.choices_end(s);
      double v = kahan_row(ss, b, x, rho);
      for (std::uint64_t c = b + 1; c < e; ++c) {
        double w = kahan_row(ss, c, x, rho);
        if (dir == Direction::Max ? (w > v) : (w < v)) v = w;
      }
      x_new[s] = v;
      double diff = std::fabs(v - x[s]);
      double denom = std::fabs(v) > 0.0 ? std::fabs(v) : 1.0;
      double rel = diff / denom;
      if (rel > res) res = rel;
    }
    *out_res = res;
  };

  for (std::uint64_t it = 0; it < opts.max_iterations; ++it) {
    if (nworkers == 1) {
      body(0, n, &worker_residual[0]);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < nworkers; ++w) {
        std::uint32_t lo = std::min<std::uint32_t>(w * chunk, n);
        std::uint32_t hi = std::min<std::uint32_t>(lo + chunk, n);
        worker_residual[w] = 0.0;
        if (lo < hi) pool.emplace_back(body, lo, hi, &worker_residual[w]);
      }
      for (auto& t : pool) t.join();
    }
    double residual = 0.0;
    for (double r : worker_residual) residual = std::max(residual, r);
    x.swap(x_new);
    conv.iterations = it + 1;
    conv.residual = residual;
    if (residual < opts.tol) return conv;
  }
  throw ModelError("non-convergence",
                   "value iteration did not converge after " + std::to_string(opts.max_iterations) +
                       " iterations (residual " + std::to_string(conv.residual) + ")");
}

}  // namespace

std::vector<bool> label_states(const StateSpace& ss, const std::string& label) {
  int idx = ss.model.label_index(label);
  if (idx < 0) throw ModelError("unknown-label", "label '" + label + "' not declared");
  Bits out(ss.num_states(), false);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s) out[s] = ss.has_label(s, idx);
  return out;
}

ValueVector reach(const StateSpace& ss, const std::vector<bool>& target_states, Direction dir,
                  const SolveOptions& opts) {
  bool any = false;
  for (bool b : target_states) any = any || b;
  if (!any) {
    // an empty target set is unreachable with probability exactly 0
    ValueVector out;
    out.direction = dir;
    out.values.assign(ss.num_states(), 0.0);
    return out;
  }
  if (dir == Direction::Fixed && !all_single_choice(ss))
    throw ModelError("fixed-on-mdp", "fixed direction requires a single-choice state space");

  Preds preds(ss);
  Qualitative q = precompute(ss, preds, target_states, dir);

  ValueVector out;
  out.direction = dir;
  out.values.assign(ss.num_states(), 0.0);
  Bits frozen(ss.num_states(), false);
  std::uint32_t open = 0;
  for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
    if (target_states[s] || q.one[s]) {
      out.values[s] = 1.0;
      frozen[s] = true;
    } else if (q.zero[s]) {
      frozen[s] = true;
    } else {
      ++open;
    }
  }
  if (open > 0) out.conv = iterate(ss, out.values, frozen, dir, opts);
  return out;
}

ValueVector reach(const StateSpace& ss, const std::string& target_label, Direction dir,
                  const SolveOptions& opts) {
  ValueVector v = reach(ss, label_states(ss, target_label), dir, opts);
  v.objective = "reach " + target_label + " " + to_string(dir);
  return v;
}

std::vector<double> forward_absorption(const StateSpace& ss, const SolveOptions& opts) {
  if (!all_single_choice(ss))
    throw ModelError("fixed-on-mdp", "forward absorption requires a single-choice state space");
  std::uint32_t n = ss.num_states();
  Bits absorbing(n, false);
  for (std::uint32_t s = 0; s < n; ++s) absorbing[s] = ss.is_absorbing(s);

  // Transposed transient-to-any adjacency with probabilities.
  std::vector<std::uint64_t> offset(n + 1, 0);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (absorbing[s]) continue;
    std::uint64_t c = ss.choices_begin(s);
    for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i) ++offset[ss.target[i] + 1];
  }
  for (std::uint32_t s = 0; s < n; ++s) offset[s + 1] += offset[s];
  std::vector<std::uint32_t> src(offset[n]);
  std::vector<double> pr(offset[n]);
  {
    std::vector<std::uint64_t> fill(offset.begin(), offset.end() - 1);
    for (std::uint32_t s = 0; s < n; ++s) {
      if (absorbing[s]) continue;
      std::uint64_t c = ss.choices_begin(s);
      for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i) {
        std::uint64_t at = fill[ss.target[i]]++;
        src[at] = s;
        pr[at] = ss.prob[i];
      }
    }
  }

  // Expected visits to transient states: y = e_init + Q^T y.
  std::vector<double> y(n, 0.0), y_new(n, 0.0);
  bool converged = false;
  for (std::uint64_t it = 0; it < opts.max_iterations && !converged; ++it) {
    double residual = 0.0;
    for (std::uint32_t s = 0; s < n; ++s) {
      if (absorbing[s]) continue;
      double sum = s == ss.initial_id ? 1.0 : 0.0, comp = 0.0;
      for (std::uint64_t i = offset[s]; i < offset[s + 1]; ++i) {
        double term = pr[i] * y[src[i]];
        double v = term - comp;
        double t = sum + v;
        comp = (t - sum) - v;
        sum = t;
      }
      y_new[s] = sum;
      double diff = std::fabs(sum - y[s]);
      double denom = std::fabs(sum) > 0.0 ? std::fabs(sum) : 1.0;
      residual = std::max(residual, diff / denom);
    }
    y.swap(y_new);
    converged = residual < opts.tol;
  }
  if (!converged)
    throw ModelError("non-convergence", "forward absorption pass did not converge");

  std::vector<double> mu(n, 0.0);
  for (std::uint32_t u = 0; u < n; ++u) {
    if (!absorbing[u]) continue;
    double sum = u == ss.initial_id ? 1.0 : 0.0, comp = 0.0;
    for (std::uint64_t i = offset[u]; i < offset[u + 1]; ++i) {
      double term = pr[i] * y[src[i]];
      double v = term - comp;
      double t = sum + v;
      comp = (t - sum) - v;
      sum = t;
    }
    mu[u] = sum;
  }
  return mu;
}

namespace {

std::vector<double> reward_per_transition(const StateSpace& ss, const RewardStructure& r) {
  if (r.weight < 0.0) throw ModelError("negative-reward", "reward weight must be nonnegative");
  std::vector<double> rho(ss.target.size(), 0.0);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
    auto sv = ss.valuation(s);
    bool src_pred = false;
    if (r.kind == RewardStructure::Kind::Edge) {
      EvalCtx ctx{ss.model, sv, nullptr};
      src_pred = eval_guard(r.edge_pred, ctx);
    }
    bool self_absorbing = ss.is_absorbing(s);
    for (std::uint64_t c = ss.choices_begin(s); c < ss.choices_end(s); ++c) {
      for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i) {
        if (self_absorbing) continue;  // no reward on terminal self-loops
        auto tv = ss.valuation(ss.target[i]);
        double v = 0.0;
        switch (r.kind) {
          case RewardStructure::Kind::Step:
            v = 1.0;
            break;
          case RewardStructure::Kind::DeltaIncrease:
            v = std::max(0, tv[r.var_idx] - sv[r.var_idx]);
            break;
          case RewardStructure::Kind::DeltaDecrease:
            v = std::max(0, sv[r.var_idx] - tv[r.var_idx]);
            break;
          case RewardStructure::Kind::Edge: {
            EvalCtx ctx{ss.model, tv, nullptr};
            v = (!src_pred && eval_guard(r.edge_pred, ctx)) ? 1.0 : 0.0;
            break;
          }
        }
        rho[i] = v * r.weight;
      }
    }
  }
  return rho;
}

}  // namespace

ValueVector expected_reward(const StateSpace& ss, const RewardStructure& r,
                            const std::vector<bool>& target_states, Direction dir,
                            const SolveOptions& opts) {
  if (dir == Direction::Fixed && !all_single_choice(ss))
    throw ModelError("fixed-on-mdp", "fixed direction requires a single-choice state space");
  Preds preds(ss);
  Qualitative q = precompute(ss, preds, target_states, Direction::Min);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (!q.one[s] && !target_states[s])
      throw ModelError("reward-divergence",
                       "target not reached with probability 1 from state " +
                           ss.model.format_state(ss.valuation(s)) + "; expected reward diverges");

  std::vector<double> rho = reward_per_transition(ss, r);
  ValueVector out;
  out.direction = dir;
  out.objective = "reward " + r.name + " " + to_string(dir);
  out.values.assign(ss.num_states(), 0.0);
  Bits frozen(ss.num_states(), false);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s) frozen[s] = target_states[s];
  out.conv = iterate(ss, out.values, frozen, dir, opts, &rho);
  return out;
}

OutcomeSummary outcome_summary(const StateSpace& ss, const TerminalPartition& partition,
                               Direction dir, const SolveOptions& opts) {
  OutcomeSummary out;
  if (dir == Direction::Fixed) {
    std::vector<double> mu = forward_absorption(ss, opts);
    for (std::size_t ci = 0; ci < partition.categories.size(); ++ci) {
      double sum = 0.0, comp = 0.0;
      for (std::uint32_t id : partition.members[ci]) {
        double y = mu[id] - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      }
      out.probabilities.emplace_back(partition.categories[ci], sum);
      out.total += sum;
    }
    if (std::fabs(out.total - 1.0) > 1e-6)
      throw ModelError("absorption-deficit",
                       "terminal categories sum to " + std::to_string(out.total) +
                           "; some probability mass never absorbs");
    return out;
  }
  for (std::size_t ci = 0; ci < partition.categories.size(); ++ci) {
    if (partition.members[ci].empty()) {
      out.probabilities.emplace_back(partition.categories[ci], 0.0);
      continue;
    }
    Bits target(ss.num_states(), false);
    for (std::uint32_t id : partition.members[ci]) target[id] = true;
    ValueVector v = reach(ss, target, dir, opts);
    out.probabilities.emplace_back(partition.categories[ci], v.at_initial(ss));
    out.total += v.at_initial(ss);
  }
  return out;
}

std::vector<double> deadline_series(const StateSpace& ss, const std::string& target_label,
                                    const std::string& time_var,
                                    const std::vector<std::int64_t>& deadlines, Direction dir,
                                    const SolveOptions& opts) {
  int tvar = ss.model.var_index(time_var);
  if (tvar < 0) throw ModelError("unknown-variable", "time variable '" + time_var + "' not declared");
  // Monotonicity: the time variable may never decrease along a transition.
  for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
    std::int32_t ts = ss.value_of(s, tvar);
    for (std::uint64_t c = ss.choices_begin(s); c < ss.choices_end(s); ++c)
      for (std::uint64_t i = ss.row_offset[c]; i < ss.row_offset[c + 1]; ++i)
        if (ss.value_of(ss.target[i], tvar) < ts)
          throw ModelError("monotonicity-violation",
                           "time decreases from " + ss.model.format_state(ss.valuation(s)) +
                               " to " + ss.model.format_state(ss.valuation(ss.target[i])));
  }
  Bits labeled = label_states(ss, target_label);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (labeled[s] && !ss.is_absorbing(s))
      throw ModelError("target-not-absorbing", "deadline target state " +
                                                   ss.model.format_state(ss.valuation(s)) +
                                                   " is not absorbing");

  std::vector<double> out;
  out.reserve(deadlines.size());
  if (dir == Direction::Fixed) {
    // One pass: absorption mass aggregated per time value.
    std::vector<double> mu = forward_absorption(ss, opts);
    for (std::int64_t T : deadlines) {
      double sum = 0.0, comp = 0.0;
      for (std::uint32_t s = 0; s < ss.num_states(); ++s) {
        if (!labeled[s] || ss.value_of(s, tvar) > T) continue;
        double y = mu[s] - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      }
      out.push_back(sum);
    }
    return out;
  }
  // The optimal scheduler may differ per deadline: re-solve each sample.
  for (std::int64_t T : deadlines) {
    Bits target(ss.num_states(), false);
    bool any = false;
    for (std::uint32_t s = 0; s < ss.num_states(); ++s)
      if (labeled[s] && ss.value_of(s, tvar) <= T) {
        target[s] = true;
        any = true;
      }
    if (!any) {
      out.push_back(0.0);
      continue;
    }
    ValueVector v = reach(ss, target, dir, opts);
    out.push_back(v.at_initial(ss));
  }
  return out;
}

DeadlineCurve deadline_curve(const StateSpace& interval_ss, const StateSpace& uniform_ss,
                             const std::string& target_label, const std::string& time_var,
                             std::int64_t t_from, std::int64_t t_to, std::int64_t t_step,
                             const SolveOptions& opts) {
  if (t_step <= 0 || t_to < t_from)
    throw ModelError("bad-range", "deadline range requires from <= to and step > 0");
  DeadlineCurve c;
  for (std::int64_t T = t_from; T <= t_to; T += t_step) c.deadlines.push_back(T);
  c.min_p = deadline_series(interval_ss, target_label, time_var, c.deadlines, Direction::Min, opts);
  c.max_p = deadline_series(interval_ss, target_label, time_var, c.deadlines, Direction::Max, opts);
  c.uniform_p =
      deadline_series(uniform_ss, target_label, time_var, c.deadlines, Direction::Fixed, opts);
  return c;
}

std::string curve_csv(const DeadlineCurve& c) {
  std::ostringstream os;
  os << "T,min,max,uniform\n";
  char buf[64];
  for (std::size_t i = 0; i < c.deadlines.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%.10g,%.10g,%.10g",
                  static_cast<long long>(c.deadlines[i]), c.min_p[i], c.max_p[i], c.uniform_p[i]);
    os << buf << "\n";
  }
  return os.str();
}

}  // namespace apfsm
