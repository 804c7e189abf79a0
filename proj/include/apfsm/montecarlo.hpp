#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apfsm/model.hpp"

namespace apfsm {

/// Corner policy for interval constants met along a sampled path.
enum class CornerScheduler {
  UniformCorners,  // every interval reference resolved by a fair coin
  AlwaysLo,
  AlwaysHi,
};

std::string to_string(CornerScheduler s);

struct TraceStep {
  std::string action;
  std::uint8_t corner_mask = 0;   // bit i = endpoint of the i-th interval in the command
  std::uint8_t corner_count = 0;  // number of non-degenerate intervals in the command
  int outcome_index = 0;
};

struct Trace {
  std::vector<Valuation> states;  // states.size() == steps.size() + 1
  std::vector<TraceStep> steps;
  std::string terminal_category;  // empty when truncated
  bool truncated = false;
  std::int64_t elapsed_time = 0;     // delta of variable `t` when declared
  std::int64_t battery_consumed = 0; // positive-part delta of variable `b` when declared
};

struct Estimate {
  std::string event;
  std::uint64_t n = 0;
  std::uint64_t successes = 0;
  std::uint64_t truncated = 0;
  double point = 0.0;
  double lo = 0.0;  // Wilson 95% interval
  double hi = 0.0;
  std::uint64_t seed = 0;
};

/// Samples one path on the model (not the state space): actions by argmax,
/// outcomes by the seeded generator, corners per scheduler. Deterministic for
/// a fixed seed. Paths that hit `step_cap` come back flagged truncated.
Trace sample_path(const Model& m, CornerScheduler sched, std::uint64_t seed,
                  std::uint32_t step_cap = 100'000);

/// n sampled paths; point estimate and Wilson 95% interval for the event
/// label holding at the absorbing state. Truncated traces count as
/// non-events and are reported in the estimate.
Estimate estimate(const Model& m, const std::string& event, std::uint64_t n, std::uint64_t seed,
                  CornerScheduler sched, std::uint32_t step_cap = 100'000);

/// One line per step: `<vars> --action[corner]/outcome#--> ...`.
std::string format_trace(const Model& m, const Trace& t);

std::string estimate_csv_header();
std::string estimate_csv_row(const Estimate& e);

}  // namespace apfsm
