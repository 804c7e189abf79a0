#include "doctest.h"

#include <cmath>

#include "apfsm/microsim.hpp"

using namespace apfsm;

namespace {

MicroParams zero_noise() {
  MicroParams p;
  p.settle_mean_s = 0.0;
  p.settle_noise_std_s = 0.0;
  p.grab_success_prob = 1.0;
  p.drop_prob_per_step = 0.0;
  p.trial_count = 64;
  // integral per-action times and unit powers, so floor(min) == ceil(max)
  p.cruise_speed_mps = 1.0;
  p.cell_size_m = 6.0;
  p.grab_grip_time_s = 2.0;
  p.power_cruise = 1.0;
  p.power_hover = 1.0;
  p.power_vertical = 1.0;
  return p;
}

// Mean of a Gaussian(mu, sigma) truncated to [0, inf).
double truncated_mean(double mu, double sigma) {
  double a = -mu / sigma;
  double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * 3.141592653589793);
  double Phi = 0.5 * std::erfc(a / std::sqrt(2.0));
  return mu + sigma * phi / Phi;
}

}  // namespace

TEST_CASE("zero-noise approach over 5 m at 1 m/s takes exactly 5.0 s") {
  MicroParams p = zero_noise();
  p.cruise_speed_mps = 1.0;
  ApproachSample s = simulate_approach(p, 5.0, 42);
  CHECK(s.time_s == 5.0);
  CHECK(s.battery == doctest::Approx(5.0 * p.power_cruise).epsilon(1e-9));
}

TEST_CASE("zero offset with zero noise costs nothing") {
  MicroParams p = zero_noise();
  ApproachSample s = simulate_approach(p, 0.0, 1);
  CHECK(s.time_s == 0.0);
  CHECK(s.battery == 0.0);
}

TEST_CASE("noisy approach mean lands within three standard errors of the closed form") {
  MicroParams p;
  p.cruise_speed_mps = 1.0;
  p.settle_mean_s = 1.0;
  p.settle_noise_std_s = 0.5;
  const int trials = 1000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < trials; ++i) {
    double t = simulate_approach(p, 5.0, 1000 + i).time_s;
    sum += t;
    sumsq += t * t;
  }
  double mean = sum / trials;
  double var = sumsq / trials - mean * mean;
  double se = std::sqrt(var / trials);
  double expected = 5.0 + truncated_mean(p.settle_mean_s, p.settle_noise_std_s);
  CHECK(std::fabs(mean - expected) < 3.0 * se);
}

TEST_CASE("approach time never decreases with offset under zero noise") {
  MicroParams p = zero_noise();
  double prev = -1.0;
  for (int d = 0; d <= 20; ++d) {
    double t = simulate_approach(p, d * 0.7, 5).time_s;
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("settle draws far beyond nominal are flagged as nonphysical") {
  MicroParams p;
  p.settle_mean_s = 0.01;
  p.settle_noise_std_s = 5.0;  // almost every draw exceeds 10x nominal
  CHECK_THROWS_AS(
      [&] {
        for (int i = 0; i < 200; ++i) simulate_approach(p, 1.0, i);
      }(),
      std::runtime_error);
}

TEST_CASE("calibrate is bit-identical for identical parameters and seed") {
  MicroParams p;
  p.trial_count = 200;
  p.seed = 31337;
  ActionStats a = calibrate(p);
  ActionStats b = calibrate(p);
  REQUIRE(a.size() == b.size());
  CHECK(action_stats_json(a) == action_stats_json(b));
  for (auto& [name, rec] : a) {
    CHECK(rec.time.mean == b[name].time.mean);
    CHECK(rec.battery.mean == b[name].battery.mean);
  }
}

TEST_CASE("zero noise makes every calibration interval degenerate") {
  ActionStats stats = calibrate(zero_noise());
  for (auto& [name, rec] : stats) {
    CHECK(rec.time.lo == rec.time.hi);
    CHECK(rec.battery.lo == rec.battery.hi);
  }
  // perfect grab, no drops
  CHECK(stats["grab"].prob == Rat(0));
  CHECK(stats["transport"].prob == Rat(0));
}

TEST_CASE("interval endpoints bound every trial sample") {
  MicroParams p;
  p.trial_count = 300;
  p.seed = 9;
  ActionStats stats = calibrate(p);
  const ActionRecord& ap = stats["approach"];
  CHECK(ap.time.lo <= std::ceil(ap.time.mean));
  CHECK(ap.time.lo <= ap.time.hi);
  // replay the same trials: every sample within [floor(min), ceil(max)]
  for (std::uint32_t i = 0; i < p.trial_count; ++i) {
    ApproachSample s = simulate_approach(p, p.cell_size_m / 2.0,
                                         [&] {
                                           std::uint64_t x = p.seed ^ (0x10000ull + i);
                                           x += 0x9E3779B97F4A7C15ull;
                                           x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
                                           x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
                                           return x ^ (x >> 31);
                                         }());
    CHECK(static_cast<double>(ap.time.lo) <= s.time_s);
    CHECK(s.time_s <= static_cast<double>(ap.time.hi));
    CHECK(static_cast<double>(ap.battery.lo) <= s.battery);
    CHECK(s.battery <= static_cast<double>(ap.battery.hi));
  }
}

TEST_CASE("a detection radius covering the whole cell gives alpha = 1") {
  MicroParams p;
  p.detection_radius_m = p.cell_size_m;  // covers any offset from the centerline
  p.trial_count = 500;
  ActionStats stats = calibrate(p);
  CHECK(stats["search"].prob == Rat(1));
}

TEST_CASE("stats JSON round-trips") {
  MicroParams p;
  p.trial_count = 100;
  ActionStats a = calibrate(p);
  ActionStats b = parse_action_stats(action_stats_json(a));
  CHECK(action_stats_json(a) == action_stats_json(b));
}

TEST_CASE("micro parameter JSON round-trips and validates") {
  MicroParams p;
  p.cruise_speed_mps = 3.5;
  p.trial_count = 77;
  MicroParams q = parse_micro_params(micro_params_json(p));
  CHECK(q.cruise_speed_mps == 3.5);
  CHECK(q.trial_count == 77);
  MicroParams bad;
  bad.integration_step_s = 0.5;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  MicroParams negative;
  negative.cruise_speed_mps = -1.0;
  CHECK_THROWS_AS(negative.check(), std::invalid_argument);
}
