#include "apfsm/microsim.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace apfsm {

namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

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
  // Box-Muller; one value per call, the twin is discarded to keep the
  // consumption pattern simple and reproducible.
  double next_normal() {
    double u1 = next_unit(), u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
};

// Truncated-at-zero Gaussian on the settle time. Zero std is exact.
double draw_settle(const MicroParams& p, Rng& rng) {
  if (p.settle_noise_std_s == 0.0) return p.settle_mean_s;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    double x = p.settle_mean_s + p.settle_noise_std_s * rng.next_normal();
    if (x < 0.0) continue;
    if (x > 10.0 * std::max(p.settle_mean_s, 1e-9))
      throw std::runtime_error("microsim: settle time " + std::to_string(x) +
                               " exceeds 10x nominal; parameters are nonphysical");
    return x;
  }
  throw std::runtime_error("microsim: settle-time rejection sampling failed to converge");
}

// Piecewise-constant power integrated with fixed steps plus an exact
// remainder step.
double integrate_power(double power, double duration, double dt) {
  double t = 0.0, energy = 0.0;
  while (t + dt <= duration) {
    energy += power * dt;
    t += dt;
  }
  energy += power * (duration - t);
  return energy;
}

QuantityStats make_stats(const std::vector<double>& samples) {
  QuantityStats q;
  double sum = 0.0, lo = samples[0], hi = samples[0];
  for (double s : samples) {
    sum += s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  q.mean = sum / static_cast<double>(samples.size());
  q.lo = static_cast<std::int64_t>(std::floor(lo));
  q.hi = static_cast<std::int64_t>(std::ceil(hi));
  return q;
}

}  // namespace

void MicroParams::check() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("microsim: ") + what + " must be > 0");
  };
  positive(cruise_speed_mps, "cruise speed");
  positive(cell_size_m, "cell size");
  positive(descent_speed_mps, "descent speed");
  positive(ascent_speed_mps, "ascent speed");
  positive(search_height_m, "search height");
  positive(transport_height_m, "transport height");
  positive(power_cruise, "cruise power");
  positive(power_hover, "hover power");
  positive(power_vertical, "vertical power");
  positive(detection_radius_m, "detection radius");
  positive(integration_step_s, "integration step");
  positive(grab_grip_time_s, "grip time");
  if (integration_step_s > 0.1)
    throw std::invalid_argument("microsim: integration step must be <= 0.1 s");
  if (settle_mean_s < 0.0 || settle_noise_std_s < 0.0)
    throw std::invalid_argument("microsim: settle time parameters must be nonnegative");
  if (grab_success_prob < 0.0 || grab_success_prob > 1.0)
    throw std::invalid_argument("microsim: grab success probability outside [0,1]");
  if (drop_prob_per_step < 0.0 || drop_prob_per_step > 1.0)
    throw std::invalid_argument("microsim: drop probability outside [0,1]");
}

ApproachSample simulate_approach(const MicroParams& p, double offset_m, std::uint64_t seed) {
  p.check();
  if (offset_m < 0.0) throw std::invalid_argument("microsim: offset must be >= 0");
  Rng rng(splitmix64(seed));
  double travel = offset_m / p.cruise_speed_mps;
  double settle = draw_settle(p, rng);
  ApproachSample out;
  out.time_s = travel + settle;
  out.battery = integrate_power(p.power_cruise, travel, p.integration_step_s) +
                integrate_power(p.power_hover, settle, p.integration_step_s);
  return out;
}

ActionStats calibrate(const MicroParams& p) {
  p.check();
  if (p.trial_count < 2) throw std::invalid_argument("microsim: calibrate requires >= 2 trials");
  ActionStats stats;
  std::uint32_t n = p.trial_count;

  {  // approach: fixed nominal within-cell offset, noise drives the spread
    std::vector<double> times, batts;
    double offset = p.cell_size_m / 2.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      ApproachSample s = simulate_approach(p, offset, splitmix64(p.seed ^ (0x10000ull + i)));
      times.push_back(s.time_s);
      batts.push_back(s.battery);
    }
    ActionRecord r;
    r.time = make_stats(times);
    r.battery = make_stats(batts);
    stats["approach"] = r;
  }

  {  // search sweep: one cell traverse; detection if the object lies within
     // the camera radius of the centerline sweep
    std::vector<double> times, batts;
    std::uint64_t detected = 0;
    double sweep_time = p.cell_size_m / p.cruise_speed_mps;
    for (std::uint32_t i = 0; i < n; ++i) {
      Rng rng(splitmix64(p.seed ^ (0x20000ull + i)));
      double oy = rng.next_unit() * p.cell_size_m;
      if (std::fabs(oy - p.cell_size_m / 2.0) <= p.detection_radius_m) ++detected;
      times.push_back(sweep_time);
      batts.push_back(integrate_power(p.power_cruise, sweep_time, p.integration_step_s));
    }
    ActionRecord r;
    r.time = make_stats(times);
    r.battery = make_stats(batts);
    r.has_prob = true;
    r.prob = Rat(static_cast<std::int64_t>(detected), static_cast<std::int64_t>(n));
    stats["search"] = r;
  }

  {  // grab: grip cycle with settle noise; prob records the failure rate
    std::vector<double> times, batts;
    std::uint64_t failures = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      Rng rng(splitmix64(p.seed ^ (0x30000ull + i)));
      double t = p.grab_grip_time_s + draw_settle(p, rng);
      if (rng.next_unit() >= p.grab_success_prob) ++failures;
      times.push_back(t);
      batts.push_back(integrate_power(p.power_hover, t, p.integration_step_s));
    }
    ActionRecord r;
    r.time = make_stats(times);
    r.battery = make_stats(batts);
    r.has_prob = true;
    r.prob = Rat(static_cast<std::int64_t>(failures), static_cast<std::int64_t>(n));
    stats["grab"] = r;
  }

  {  // transport step: one cell at transport height; prob records drops
    std::vector<double> times, batts;
    std::uint64_t drops = 0;
    double step_time = p.cell_size_m / p.cruise_speed_mps;
    for (std::uint32_t i = 0; i < n; ++i) {
      Rng rng(splitmix64(p.seed ^ (0x40000ull + i)));
      if (rng.next_unit() < p.drop_prob_per_step) ++drops;
      times.push_back(step_time);
      batts.push_back(integrate_power(p.power_cruise, step_time, p.integration_step_s));
    }
    ActionRecord r;
    r.time = make_stats(times);
    r.battery = make_stats(batts);
    r.has_prob = true;
    r.prob = Rat(static_cast<std::int64_t>(drops), static_cast<std::int64_t>(n));
    stats["transport"] = r;
  }
  return stats;
}

std::string action_stats_json(const ActionStats& s) {
  ordered_json j;
  for (const auto& [name, rec] : s) {
    ordered_json a;
    a["time"] = {{"mean", rec.time.mean}, {"lo", rec.time.lo}, {"hi", rec.time.hi}};
    a["battery"] = {{"mean", rec.battery.mean}, {"lo", rec.battery.lo}, {"hi", rec.battery.hi}};
    if (rec.has_prob)
      a["prob"] = rec.prob.str();
    else
      a["prob"] = nullptr;
    j[name] = a;
  }
  return j.dump(2) + "\n";
}

ActionStats parse_action_stats(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  ActionStats out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    ActionRecord r;
    const auto& a = it.value();
    r.time.mean = a.at("time").at("mean").get<double>();
    r.time.lo = a.at("time").at("lo").get<std::int64_t>();
    r.time.hi = a.at("time").at("hi").get<std::int64_t>();
    r.battery.mean = a.at("battery").at("mean").get<double>();
    r.battery.lo = a.at("battery").at("lo").get<std::int64_t>();
    r.battery.hi = a.at("battery").at("hi").get<std::int64_t>();
    if (a.contains("prob") && !a.at("prob").is_null()) {
      r.has_prob = true;
      r.prob = parse_rational(a.at("prob").get<std::string>());
    }
    out[it.key()] = r;
  }
  return out;
}

std::string micro_params_json(const MicroParams& p) {
  ordered_json j;
  j["cruise_speed_mps"] = p.cruise_speed_mps;
  j["cell_size_m"] = p.cell_size_m;
  j["settle_mean_s"] = p.settle_mean_s;
  j["settle_noise_std_s"] = p.settle_noise_std_s;
  j["descent_speed_mps"] = p.descent_speed_mps;
  j["ascent_speed_mps"] = p.ascent_speed_mps;
  j["search_height_m"] = p.search_height_m;
  j["transport_height_m"] = p.transport_height_m;
  j["power_cruise"] = p.power_cruise;
  j["power_hover"] = p.power_hover;
  j["power_vertical"] = p.power_vertical;
  j["grab_success_prob"] = p.grab_success_prob;
  j["grab_grip_time_s"] = p.grab_grip_time_s;
  j["detection_radius_m"] = p.detection_radius_m;
  j["drop_prob_per_step"] = p.drop_prob_per_step;
  j["integration_step_s"] = p.integration_step_s;
  j["trial_count"] = p.trial_count;
  j["seed"] = p.seed;
  return j.dump(2) + "\n";
}

MicroParams parse_micro_params(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  MicroParams p;
  auto load = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  load("cruise_speed_mps", p.cruise_speed_mps);
  load("cell_size_m", p.cell_size_m);
  load("settle_mean_s", p.settle_mean_s);
  load("settle_noise_std_s", p.settle_noise_std_s);
  load("descent_speed_mps", p.descent_speed_mps);
  load("ascent_speed_mps", p.ascent_speed_mps);
  load("search_height_m", p.search_height_m);
  load("transport_height_m", p.transport_height_m);
  load("power_cruise", p.power_cruise);
  load("power_hover", p.power_hover);
  load("power_vertical", p.power_vertical);
  load("grab_success_prob", p.grab_success_prob);
  load("grab_grip_time_s", p.grab_grip_time_s);
  load("detection_radius_m", p.detection_radius_m);
  load("drop_prob_per_step", p.drop_prob_per_step);
  load("integration_step_s", p.integration_step_s);
  load("trial_count", p.trial_count);
  load("seed", p.seed);
  return p;
}

}  // namespace apfsm
