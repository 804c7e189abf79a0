#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "apfsm/microsim.hpp"
#include "apfsm/rational.hpp"

namespace apfsm {

/// UAV mission modes, scenario-local numbering. Terminal modes are
/// EmergencyLanding, MissionComplete and MissionAbandoned.
enum Mode : int {
  kModeIdle = 0,
  kModeSystemCheck = 1,
  kModeSearch = 2,
  kModeTargetApproach = 3,
  kModeDescend = 4,
  kModeGrab = 5,
  kModeAscend = 6,
  kModeTransit = 7,
  kModeDeposit = 8,
  kModeReturnToBase = 9,
  kModeRecharge = 10,
  kModeEmergencyLanding = 11,
  kModeMissionComplete = 12,
  kModeMissionAbandoned = 13,
};

struct ScenarioParams {
  int width = 4;
  int height = 4;
  int objects = 1;
  std::int64_t time_limit = 100;
  std::int32_t battery_capacity = 60;
  std::int32_t battery_low = 15;  // B_low: return/recharge threshold

  std::int32_t step_dt = 1;  // per-cell time (search and transit)
  std::int32_t step_db = 1;  // per-cell battery

  std::int32_t t_ap_lo = 3, t_ap_hi = 3;  // approach cost intervals
  std::int32_t b_ap_lo = 2, b_ap_hi = 2;

  std::int32_t t_descend = 1, b_descend = 1;
  std::int32_t t_grab = 1, b_grab = 1;
  std::int32_t t_ascend = 1, b_ascend = 1;
  std::int32_t t_deposit = 1, b_deposit = 1;
  std::int32_t t_takeoff = 1, b_takeoff = 1;
  std::int32_t t_check = 1, b_check = 1;
  std::int32_t t_recharge = 10;  // fixed-duration full recharge

  Rat alpha{1, 4};          // per-cell detection probability while objects remain
  Rat drop_prob{1, 20};     // per transport step
  Rat emergency_prob{1, 1000};  // per airborne step
  Rat grab_fail_prob{0};
  Rat check_fail_prob{0};

  std::uint64_t state_budget = 50'000'000;

  void check() const;  // throws std::invalid_argument on inconsistent fields

  /// Pulls step costs, approach intervals and event probabilities from a
  /// calibration table (keys: approach, search, grab, transport).
  void apply_action_stats(const ActionStats& stats);
};

/// Boustrophedon sweep: left-to-right on even rows, right-to-left on odd
/// rows, wrapping to (0,0) after the last cell.
std::pair<int, int> search_pattern(const ScenarioParams& p, int x, int y);

/// Emits the mission model in .apfsm text. The output always validates;
/// estimated state count (cells x time limit x capacity) beyond the budget
/// raises "budget-exceeded".
std::string generate_model(const ScenarioParams& p);

}  // namespace apfsm
