#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "apfsm/rational.hpp"

namespace apfsm {

/// Physical parameters for the small-scale continuous simulations behind the
/// abstract actions. Deliberately simple: constant-speed kinematics, additive
/// truncated-Gaussian settle noise, piecewise-constant power draw, fixed-step
/// integration.
struct MicroParams {
  double cruise_speed_mps = 2.0;
  double cell_size_m = 5.0;
  double settle_mean_s = 1.0;       // nominal settle time when positioning
  double settle_noise_std_s = 0.5;  // std dev of the truncated-at-zero Gaussian
  double descent_speed_mps = 1.0;
  double ascent_speed_mps = 1.0;
  double search_height_m = 6.0;
  double transport_height_m = 4.0;
  double power_cruise = 1.0;  // charge units per second, per mode
  double power_hover = 0.8;
  double power_vertical = 1.2;
  double grab_success_prob = 0.95;
  double grab_grip_time_s = 2.0;
  double detection_radius_m = 2.0;
  double drop_prob_per_step = 0.05;
  double integration_step_s = 0.01;  // must be <= 0.1
  std::uint32_t trial_count = 1000;
  std::uint64_t seed = 1;

  void check() const;  // throws std::invalid_argument on nonphysical values
};

struct QuantityStats {
  double mean = 0.0;
  std::int64_t lo = 0;  // floor of the sample minimum
  std::int64_t hi = 0;  // ceil of the sample maximum
};

struct ActionRecord {
  QuantityStats time;
  QuantityStats battery;
  bool has_prob = false;
  Rat prob;  // exact successes/trials
};

/// Calibration table per abstract action (approach, search, grab, transport).
using ActionStats = std::map<std::string, ActionRecord>;

/// One approach trial: travel `offset` metres at cruise speed, then settle
/// with a seeded truncated-Gaussian perturbation; battery is the power draw
/// integrated over both phases. Throws when the drawn settle time exceeds
/// 10x nominal (bad parameters).
struct ApproachSample {
  double time_s = 0.0;
  double battery = 0.0;
};

ApproachSample simulate_approach(const MicroParams& p, double offset_m, std::uint64_t seed);

/// Runs trial_count trials per action and aggregates interval endpoints from
/// sample extremes. Bit-identical for identical (params, seed).
ActionStats calibrate(const MicroParams& p);

std::string action_stats_json(const ActionStats& s);
ActionStats parse_action_stats(const std::string& json_text);

std::string micro_params_json(const MicroParams& p);
MicroParams parse_micro_params(const std::string& json_text);

}  // namespace apfsm
