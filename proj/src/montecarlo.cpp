#include "apfsm/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace apfsm {

std::string to_string(CornerScheduler s) {
  switch (s) {
    case CornerScheduler::UniformCorners: return "uniform";
    case CornerScheduler::AlwaysLo: return "lo";
    case CornerScheduler::AlwaysHi: return "hi";
  }
  return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// xoshiro-free minimal generator: splitmix64 stream. Keeps traces identical
// across platforms, unlike the distribution templates in <random>.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next_u64() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

struct ValuationHash {
  std::size_t operator()(const Valuation& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int32_t x : v) {
      h ^= static_cast<std::uint32_t>(x);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Everything deterministic about taking a step from a given state: the argmax
// command, its interval constants and the outcome CDF. Cached per valuation so
// repeated visits across sampled paths skip guard evaluation.
struct StepPlan {
  const Command* cmd = nullptr;  // null = no enabled action (terminal)
  std::vector<int> intervals;    // sorted non-degenerate interval indices
  std::vector<double> cdf;
};

using PlanCache = std::unordered_map<Valuation, StepPlan, ValuationHash>;

const StepPlan& plan_for(const Model& m, const Valuation& s, PlanCache& cache) {
  auto it = cache.find(s);
  if (it != cache.end()) return it->second;
  StepPlan plan;
  auto enabled = enabled_commands(m, s);
  if (!enabled.empty()) {
    plan.cmd = &select_command(m, s);
    for (const Outcome& o : plan.cmd->outcomes)
      for (const UpdateOp& u : o.updates) collect_interval_refs(u.amount, m, plan.intervals);
    std::sort(plan.intervals.begin(), plan.intervals.end());
    double acc = 0.0;
    for (const Outcome& o : plan.cmd->outcomes) {
      acc += o.prob.to_double();
      plan.cdf.push_back(acc);
    }
  }
  return cache.emplace(s, std::move(plan)).first->second;
}

std::string category_of(const Model& m, const Valuation& s) {
  EvalCtx ctx{m, s, nullptr};
  for (const char* name : {"success", "emergency", "timeout", "missed"}) {
    int idx = m.label_index(name);
    if (idx >= 0 && eval_guard(m.labels[idx].pred, ctx)) return name;
  }
  for (const LabelDecl& l : m.labels)
    if (l.name != "success" && l.name != "emergency" && l.name != "timeout" && l.name != "missed" &&
        eval_guard(l.pred, ctx))
      return l.name;
  return "deadlock";
}

Trace sample_one(const Model& m, CornerScheduler sched, Rng& rng, std::uint32_t step_cap,
                 PlanCache& cache) {
  Trace tr;
  tr.states.push_back(m.initial_state());
  std::vector<std::uint8_t> corner(m.intervals.size(), 0);
  if (sched == CornerScheduler::AlwaysHi)
    std::fill(corner.begin(), corner.end(), std::uint8_t{1});

  while (true) {
    const Valuation& cur = tr.states.back();
    const StepPlan& plan = plan_for(m, cur, cache);
    if (plan.cmd == nullptr) {
      tr.terminal_category = category_of(m, cur);
      break;
    }
    if (tr.steps.size() >= step_cap) {
      tr.truncated = true;
      break;
    }
    TraceStep step;
    step.action = plan.cmd->action;
    step.corner_count = static_cast<std::uint8_t>(plan.intervals.size());
    if (!plan.intervals.empty() && sched == CornerScheduler::UniformCorners) {
      std::uint64_t bits = rng.next_u64();
      for (std::size_t i = 0; i < plan.intervals.size(); ++i) {
        corner[plan.intervals[i]] = (bits >> i) & 1u;
        step.corner_mask |= static_cast<std::uint8_t>(((bits >> i) & 1u) << i);
      }
    } else if (!plan.intervals.empty() && sched == CornerScheduler::AlwaysHi) {
      step.corner_mask = static_cast<std::uint8_t>((1u << plan.intervals.size()) - 1);
    }
    int oi = 0;
    if (plan.cdf.size() > 1) {
      double u = rng.next_unit();
      while (oi + 1 < static_cast<int>(plan.cdf.size()) && u >= plan.cdf[oi]) ++oi;
    }
    step.outcome_index = oi;
    Valuation next = apply_outcome(m, cur, plan.cmd->outcomes[oi], corner.data());
    tr.steps.push_back(step);
    tr.states.push_back(std::move(next));
  }

  int t_idx = m.var_index("t");
  if (t_idx >= 0) tr.elapsed_time = tr.states.back()[t_idx] - tr.states.front()[t_idx];
  int b_idx = m.var_index("b");
  if (b_idx >= 0) {
    std::int64_t used = 0;
    for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) {
      std::int64_t d = static_cast<std::int64_t>(tr.states[i][b_idx]) - tr.states[i + 1][b_idx];
      if (d > 0) used += d;
    }
    tr.battery_consumed = used;
  }
  return tr;
}

}  // namespace

Trace sample_path(const Model& m, CornerScheduler sched, std::uint64_t seed,
                  std::uint32_t step_cap) {
  Rng rng(splitmix64(seed));
  PlanCache cache;
  return sample_one(m, sched, rng, step_cap, cache);
}

Estimate estimate(const Model& m, const std::string& event, std::uint64_t n, std::uint64_t seed,
                  CornerScheduler sched, std::uint32_t step_cap) {
  if (n < 1) throw ModelError("bad-sample-count", "estimate requires n >= 1");
  int label_idx = m.label_index(event);
  if (label_idx < 0) throw ModelError("unknown-label", "label '" + event + "' not declared");

  Estimate e;
  e.event = event;
  e.n = n;
  e.seed = seed;
  PlanCache cache;
  for (std::uint64_t i = 0; i < n; ++i) {
    Rng rng(splitmix64(seed ^ splitmix64(i + 1)));
    Trace tr = sample_one(m, sched, rng, step_cap, cache);
    if (tr.truncated) {
      ++e.truncated;  // counted as a non-event
      continue;
    }
    EvalCtx ctx{m, tr.states.back(), nullptr};
    if (eval_guard(m.labels[label_idx].pred, ctx)) ++e.successes;
  }
  double p = static_cast<double>(e.successes) / static_cast<double>(n);
  e.point = p;
  const double z = 1.959963984540054;
  double nn = static_cast<double>(n);
  double z2 = z * z;
  double denom = 1.0 + z2 / nn;
  double center = p + z2 / (2.0 * nn);
  double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  e.lo = std::max(0.0, (center - half) / denom);
  e.hi = std::min(1.0, (center + half) / denom);
  return e;
}

std::string format_trace(const Model& m, const Trace& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    os << m.format_state(t.states[i]);
    if (i < t.steps.size()) {
      const TraceStep& s = t.steps[i];
      os << " --" << s.action << "[";
      // Corner bits print low-to-high as l/h letters, one per interval.
      for (int bi = 0; bi < s.corner_count; ++bi)
        os << (((s.corner_mask >> bi) & 1) ? 'h' : 'l');
      os << "]/" << s.outcome_index << "--> ";
    }
  }
  if (t.truncated)
    os << " !truncated";
  else
    os << " :: " << t.terminal_category;
  os << "\n";
  return os.str();
}

std::string estimate_csv_header() { return "event,n,point,lo,hi,seed\n"; }

std::string estimate_csv_row(const Estimate& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%llu,%.10g,%.10g,%.10g,%llu\n", e.event.c_str(),
                static_cast<unsigned long long>(e.n), e.point, e.lo, e.hi,
                static_cast<unsigned long long>(e.seed));
  return buf;
}

}  // namespace apfsm
