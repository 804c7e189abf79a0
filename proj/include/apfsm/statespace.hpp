#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "apfsm/model.hpp"

namespace apfsm {

enum class BuildMode {
  Autonomous,  // argmax DTMC; all referenced interval constants must be degenerate
  Interval,    // MDP: one choice per lo/hi corner of the selected command's intervals
  Uniform,     // DTMC: corner choices averaged with equal probability
};

std::string to_string(BuildMode m);

struct BuildOptions {
  BuildMode mode = BuildMode::Autonomous;
  std::uint64_t state_budget = 50'000'000;  // overridable via APFSM_STATE_BUDGET
  int max_corner_constants = 8;             // per-command cap on 2^k expansion
};

struct BuildStats {
  std::uint64_t states = 0;
  std::uint64_t choices = 0;
  std::uint64_t transitions = 0;
  double wall_ms = 0.0;
};

/// Explicit sparse transition system over interned states. DTMC builds have
/// exactly one choice per state; interval builds may have several. States are
/// dense 32-bit ids in BFS discovery order (canonical in single-worker mode).
struct StateSpace {
  Model model;
  BuildMode mode = BuildMode::Autonomous;
  int num_vars = 0;

  std::vector<std::int32_t> state_values;  // num_states * num_vars
  std::vector<std::uint64_t> choice_offset;  // per state, size states+1
  std::vector<std::uint64_t> row_offset;     // per choice, size choices+1
  std::vector<std::uint32_t> target;
  std::vector<double> prob;

  std::vector<std::vector<bool>> label_sets;  // aligned with model.labels
  std::vector<bool> deadlock;                 // states made absorbing by the builder
  std::uint32_t initial_id = 0;
  BuildStats stats;

  std::uint32_t num_states() const { return static_cast<std::uint32_t>(choice_offset.size() - 1); }
  std::span<const std::int32_t> valuation(std::uint32_t id) const {
    return {state_values.data() + static_cast<std::size_t>(id) * num_vars,
            static_cast<std::size_t>(num_vars)};
  }
  std::uint64_t choices_begin(std::uint32_t id) const { return choice_offset[id]; }
  std::uint64_t choices_end(std::uint32_t id) const { return choice_offset[id + 1]; }
  bool is_absorbing(std::uint32_t id) const;
  bool has_label(std::uint32_t id, int label_idx) const { return label_sets[label_idx][id]; }
  int value_of(std::uint32_t id, int var_idx) const {
    return state_values[static_cast<std::size_t>(id) * num_vars + var_idx];
  }
};

/// Breadth-first closure from the initial state. Deadlocked states become
/// absorbing self-loops flagged `deadlock`. Weight range, weight ties, domain
/// violations and the state budget are all checked against reachable states;
/// errors carry the offending valuation.
StateSpace build(const Model& model, const BuildOptions& opts);

/// Disjoint outcome categories over absorbing states, in priority order:
/// success > emergency > timeout > missed > remaining declared labels >
/// deadlock. An absorbing state the builder did not create that matches no
/// label raises "unlabeled-terminal".
struct TerminalPartition {
  std::vector<std::string> categories;
  std::vector<std::vector<std::uint32_t>> members;  // aligned with categories

  int index_of(const std::string& category) const;
};

TerminalPartition classify_terminals(const StateSpace& ss);

/// Plain-text dump: `apfsm-ss v1` header, then one `state`/`row` line per
/// state and choice, in id order.
void dump_statespace(const StateSpace& ss, std::ostream& os);

}  // namespace apfsm
