#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apfsm/statespace.hpp"

namespace apfsm {

enum class Direction { Min, Max, Fixed };

std::string to_string(Direction d);

struct SolveOptions {
  double tol = 1e-9;  // relative sup-norm
  std::uint64_t max_iterations = 1'000'000;
  int workers = 1;
};

struct Convergence {
  std::uint64_t iterations = 0;
  double residual = 0.0;
};

struct ValueVector {
  std::vector<double> values;  // per state
  std::string objective;
  Direction direction = Direction::Fixed;
  Convergence conv;

  double at_initial(const StateSpace& ss) const { return values[ss.initial_id]; }
};

/// Target state set for reachability objectives.
std::vector<bool> label_states(const StateSpace& ss, const std::string& label);

/// Reachability probability of a target set. Graph-based precomputation pins
/// exact 0/1 states, then Jacobi value iteration runs on the rest until the
/// relative change drops below tol. Fixed direction requires a single-choice
/// state space.
ValueVector reach(const StateSpace& ss, const std::vector<bool>& target_states, Direction dir,
                  const SolveOptions& opts = {});
ValueVector reach(const StateSpace& ss, const std::string& target_label, Direction dir,
                  const SolveOptions& opts = {});

/// Per-transition reward. Step charges `weight` on every transition,
/// DeltaIncrease/DeltaDecrease charge the positive part of a variable's
/// change, Edge charges 1 whenever the predicate flips from false to true
/// across a transition.
struct RewardStructure {
  enum class Kind { Step, DeltaIncrease, DeltaDecrease, Edge };
  Kind kind = Kind::Step;
  int var_idx = -1;   // Delta*
  Expr edge_pred;     // Edge
  double weight = 1.0;
  std::string name;
};

/// Expected total reward accumulated before absorption in the target.
/// Requires the target to be reached with probability 1 under every
/// scheduler; raises "reward-divergence" otherwise.
ValueVector expected_reward(const StateSpace& ss, const RewardStructure& r,
                            const std::vector<bool>& target_states, Direction dir,
                            const SolveOptions& opts = {});

/// Per-category absorption probabilities from the initial state.
struct OutcomeSummary {
  std::vector<std::pair<std::string, double>> probabilities;
  double total = 0.0;
};

OutcomeSummary outcome_summary(const StateSpace& ss, const TerminalPartition& partition,
                               Direction dir, const SolveOptions& opts = {});

/// One-pass forward absorption analysis for single-choice state spaces:
/// expected-visit counts for transient states, absorbed mass per absorbing
/// state.
std::vector<double> forward_absorption(const StateSpace& ss, const SolveOptions& opts = {});

struct DeadlineCurve {
  std::vector<std::int64_t> deadlines;
  std::vector<double> min_p;
  std::vector<double> max_p;
  std::vector<double> uniform_p;
};

/// P(reach a target state whose time value <= T) for each sampled T.
/// Requires the time variable to be nondecreasing along every transition
/// ("monotonicity-violation" otherwise). Single-choice spaces aggregate
/// absorption mass in one pass; min/max re-solve per sample point since the
/// optimal scheduler may differ per deadline.
std::vector<double> deadline_series(const StateSpace& ss, const std::string& target_label,
                                    const std::string& time_var,
                                    const std::vector<std::int64_t>& deadlines, Direction dir,
                                    const SolveOptions& opts = {});

/// Three-series curve: min/max from the interval build, uniform from the
/// uniform build of the same model.
DeadlineCurve deadline_curve(const StateSpace& interval_ss, const StateSpace& uniform_ss,
                             const std::string& target_label, const std::string& time_var,
                             std::int64_t t_from, std::int64_t t_to, std::int64_t t_step,
                             const SolveOptions& opts = {});

/// CSV export, header `T,min,max,uniform`, 10 significant digits.
std::string curve_csv(const DeadlineCurve& c);

}  // namespace apfsm
