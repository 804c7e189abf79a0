#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "apfsm/analysis.hpp"
#include "apfsm/microsim.hpp"
#include "apfsm/montecarlo.hpp"
#include "apfsm/parser.hpp"
#include "apfsm/scenario.hpp"
#include "apfsm/statespace.hpp"

namespace {

using namespace apfsm;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Data artifacts land in a temp file first; a failed run never leaves a
// partial output behind.
void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, target);
}

Model load_or_die(const std::string& path, int& rc) {
  std::string text = read_file(path);
  ParseResult pr = parse_model(text);
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&pr)) {
    for (const auto& d : *diags) std::cerr << path << ":" << d.str() << "\n";
    rc = 1;
    return {};
  }
  ValidateResult vr = validate(std::get<ModelSource>(pr));
  if (auto* diags = std::get_if<std::vector<Diagnostic>>(&vr)) {
    for (const auto& d : *diags) std::cerr << path << ":" << d.str() << "\n";
    rc = 1;
    return {};
  }
  return std::move(std::get<Model>(vr));
}

BuildMode parse_mode(const std::string& s) {
  if (s == "autonomous") return BuildMode::Autonomous;
  if (s == "interval") return BuildMode::Interval;
  if (s == "uniform") return BuildMode::Uniform;
  throw std::invalid_argument("--mode expects autonomous|interval|uniform");
}

Direction parse_dir(const std::string& s) {
  if (s == "min") return Direction::Min;
  if (s == "max") return Direction::Max;
  if (s == "fixed") return Direction::Fixed;
  throw std::invalid_argument("--dir expects min|max|fixed");
}

RewardStructure parse_reward_spec(const Model& m, const std::string& spec) {
  RewardStructure r;
  r.name = spec;
  if (spec == "steps") {
    r.kind = RewardStructure::Kind::Step;
    return r;
  }
  auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ModelError("bad-reward", "reward spec must be steps, delta-inc:<var>, delta-dec:<var> "
                                   "or edge:<label>");
  std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "delta-inc" || kind == "delta-dec") {
    int idx = m.var_index(arg);
    if (idx < 0) throw ModelError("bad-reward", "unknown variable '" + arg + "' in reward spec");
    r.kind = kind == "delta-inc" ? RewardStructure::Kind::DeltaIncrease
                                 : RewardStructure::Kind::DeltaDecrease;
    r.var_idx = idx;
    return r;
  }
  if (kind == "edge") {
    int idx = m.label_index(arg);
    if (idx < 0) throw ModelError("bad-reward", "unknown label '" + arg + "' in reward spec");
    r.kind = RewardStructure::Kind::Edge;
    r.edge_pred = m.labels[idx].pred;
    return r;
  }
  throw ModelError("bad-reward", "unknown reward kind '" + kind + "'");
}

struct CommonOpts {
  std::string mode;  // empty = derived from --dir
  double tol = 1e-9;
  int workers = 1;
};

BuildMode mode_for(const CommonOpts& c, Direction dir) {
  if (!c.mode.empty()) return parse_mode(c.mode);
  return dir == Direction::Fixed ? BuildMode::Autonomous : BuildMode::Interval;
}

int run(int argc, char** argv) {
  CLI::App app{"apfsm: model, build and verify autonomous probabilistic finite-state machines"};
  app.require_subcommand(1);

  std::string model_path, out_path, target_label = "success", dir_s = "fixed", dump_path;
  std::string time_var = "t", reward_spec = "steps", event_label = "success", sched_s = "uniform";
  std::string stats_path, params_path;
  CommonOpts common;
  std::int64_t t_from = 0, t_to = 100, t_step = 5;
  std::uint64_t samples = 10000, seed = 1;
  std::uint32_t trace_count = 0;
  std::string trace_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mode", common.mode, "build mode override (autonomous|interval|uniform)");
    sub->add_option("--tol", common.tol, "value-iteration tolerance");
    sub->add_option("--workers", common.workers, "analysis worker threads");
  };

  auto* c_validate = app.add_subcommand("validate", "parse and validate a model file");
  c_validate->add_option("model", model_path)->required();

  auto* c_build = app.add_subcommand("build", "build the state space and print statistics");
  c_build->add_option("model", model_path)->required();
  std::string build_mode = "autonomous";
  c_build->add_option("--mode", build_mode, "autonomous|interval|uniform");
  c_build->add_option("--dump", dump_path, "write a plain-text state-space dump");

  auto* c_check = app.add_subcommand("check", "reachability probability of a label");
  c_check->add_option("model", model_path)->required();
  c_check->add_option("--target", target_label, "target label")->required();
  c_check->add_option("--dir", dir_s, "min|max|fixed");
  add_common(c_check);

  auto* c_outcomes = app.add_subcommand("outcomes", "terminal outcome-category probabilities");
  c_outcomes->add_option("model", model_path)->required();
  c_outcomes->add_option("--dir", dir_s, "min|max|fixed");
  add_common(c_outcomes);

  auto* c_curve = app.add_subcommand("curve", "deadline curve (CSV: T,min,max,uniform)");
  c_curve->add_option("model", model_path)->required();
  c_curve->add_option("--target", target_label, "target label");
  c_curve->add_option("--time-var", time_var, "monotone time variable");
  c_curve->add_option("--from", t_from)->required();
  c_curve->add_option("--to", t_to)->required();
  c_curve->add_option("--step", t_step)->required();
  c_curve->add_option("--out", out_path, "CSV output path (default stdout)");
  add_common(c_curve);

  auto* c_reward = app.add_subcommand("reward", "expected accumulated reward until absorption");
  c_reward->add_option("model", model_path)->required();
  c_reward->add_option("--reward", reward_spec,
                       "steps | delta-inc:<var> | delta-dec:<var> | edge:<label>");
  c_reward->add_option("--target", target_label, "absorbing target label (default: all terminals)");
  c_reward->add_option("--dir", dir_s, "min|max|fixed");
  add_common(c_reward);

  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo estimation by path sampling");
  c_sim->add_option("model", model_path)->required();
  c_sim->add_option("-n,--samples", samples, "sample count");
  c_sim->add_option("--seed", seed, "base seed");
  c_sim->add_option("--event", event_label, "event label");
  c_sim->add_option("--scheduler", sched_s, "corner scheduler: uniform|lo|hi");
  c_sim->add_option("--out", out_path, "estimate CSV output path");
  c_sim->add_option("--trace-count", trace_count, "also dump the first K traces");
  c_sim->add_option("--trace-out", trace_out, "trace dump path (default stdout)");

  auto* c_cal = app.add_subcommand("calibrate", "run micro-simulations, emit action statistics");
  c_cal->add_option("--params", params_path, "micro-simulation parameter JSON");
  c_cal->add_option("--out", out_path, "action statistics JSON output")->required();
  std::uint64_t cal_seed = 0;
  std::uint32_t cal_trials = 0;
  c_cal->add_option("--seed", cal_seed, "seed override");
  c_cal->add_option("--trials", cal_trials, "trial count override");

  auto* c_gen = app.add_subcommand("gen-scenario", "emit the UAV mission model");
  ScenarioParams sp;
  std::string alpha_s, drop_s, emergency_s, grab_fail_s, check_fail_s;
  c_gen->add_option("--width", sp.width);
  c_gen->add_option("--height", sp.height);
  c_gen->add_option("--objects", sp.objects);
  c_gen->add_option("--limit", sp.time_limit);
  c_gen->add_option("--capacity", sp.battery_capacity);
  c_gen->add_option("--b-low", sp.battery_low);
  c_gen->add_option("--dt", sp.step_dt);
  c_gen->add_option("--db", sp.step_db);
  c_gen->add_option("--t-ap-lo", sp.t_ap_lo);
  c_gen->add_option("--t-ap-hi", sp.t_ap_hi);
  c_gen->add_option("--b-ap-lo", sp.b_ap_lo);
  c_gen->add_option("--b-ap-hi", sp.b_ap_hi);
  c_gen->add_option("--t-descend", sp.t_descend);
  c_gen->add_option("--b-descend", sp.b_descend);
  c_gen->add_option("--t-grab", sp.t_grab);
  c_gen->add_option("--b-grab", sp.b_grab);
  c_gen->add_option("--t-ascend", sp.t_ascend);
  c_gen->add_option("--b-ascend", sp.b_ascend);
  c_gen->add_option("--t-deposit", sp.t_deposit);
  c_gen->add_option("--b-deposit", sp.b_deposit);
  c_gen->add_option("--t-takeoff", sp.t_takeoff);
  c_gen->add_option("--b-takeoff", sp.b_takeoff);
  c_gen->add_option("--t-check", sp.t_check);
  c_gen->add_option("--b-check", sp.b_check);
  c_gen->add_option("--t-recharge", sp.t_recharge);
  c_gen->add_option("--alpha", alpha_s, "detection probability (rational, e.g. 1/4 or 0.25)");
  c_gen->add_option("--drop", drop_s, "per-step drop probability");
  c_gen->add_option("--emergency", emergency_s, "per-step emergency probability");
  c_gen->add_option("--grab-fail", grab_fail_s, "grab failure probability");
  c_gen->add_option("--check-fail", check_fail_s, "system-check failure probability");
  c_gen->add_option("--stats", stats_path, "action statistics JSON from calibrate");
  c_gen->add_option("--out", out_path, "model output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  int rc = 0;
  try {
    if (*c_validate) {
      load_or_die(model_path, rc);
      return rc;
    }
    if (*c_build) {
      Model m = load_or_die(model_path, rc);
      if (rc) return rc;
      BuildOptions opts;
      opts.mode = parse_mode(build_mode);
      StateSpace ss = build(m, opts);
      std::printf("states %llu\nchoices %llu\ntransitions %llu\nbuild-ms %.1f\n",
                  static_cast<unsigned long long>(ss.stats.states),
                  static_cast<unsigned long long>(ss.stats.choices),
                  static_cast<unsigned long long>(ss.stats.transitions), ss.stats.wall_ms);
      if (!dump_path.empty()) {
        std::ostringstream os;
        dump_statespace(ss, os);
        write_file_atomic(dump_path, os.str());
      }
      return 0;
    }
    if (*c_check) {
      Model m = load_or_die(model_path, rc);
      if (rc) return rc;
      Direction dir = parse_dir(dir_s);
      BuildOptions opts;
      opts.mode = mode_for(common, dir);
      StateSpace ss = build(m, opts);
      SolveOptions sopts{common.tol, 1'000'000, common.workers};
      ValueVector v = reach(ss, target_label, dir, sopts);
      std::printf("%.10f\n", v.at_initial(ss));
      return 0;
    }
    if (*c_outcomes) {
      Model m = load_or_die(model_path, rc);
      if (rc) return rc;
      Direction dir = parse_dir(dir_s);
      BuildOptions opts;
      opts.mode = mode_for(common, dir);
      StateSpace ss = build(m, opts);
      TerminalPartition part = classify_terminals(ss);
      SolveOptions sopts{common.tol, 1'000'000, common.workers};
      OutcomeSummary sum = outcome_summary(ss, part, dir, sopts);
      for (auto& [cat, p] : sum.probabilities) std::printf("%s %.10f\n", cat.c_str(), p);
      std::printf("total %.10f\n", sum.total);
      return 0;
    }
    if (*c_curve) {
      Model m = load_or_die(model_path, rc);
      if (rc) return rc;
      if (t_step <= 0 || t_to < t_from) {
        std::cerr << "curve: requires --from <= --to and --step > 0\n";
        return 2;
      }
      BuildOptions iopts;
      iopts.mode = BuildMode::Interval;
      StateSpace interval_ss = build(m, iopts);
      BuildOptions uopts;
      uopts.mode = BuildMode::Uniform;
      StateSpace uniform_ss = build(m, uopts);
      SolveOptions sopts{common.tol, 1'000'000, common.workers};
      DeadlineCurve c = deadline_curve(interval_ss, uniform_ss, target_label, time_var, t_from,
                                       t_to, t_step, sopts);
      std::string csv = curve_csv(c);
      if (out_path.empty())
        std::fputs(csv.c_str(), stdout);
      else
        write_file_atomic(out_path, csv);
      return 0;
    }
    if (*c_reward) {
      Model m = load_or_die(model_path, rc);
      if (rc) return rc;
      Direction dir = parse_dir(dir_s);
      BuildOptions opts;
      opts.mode = mode_for(common, dir);
      StateSpace ss = build(m, opts);
      RewardStructure r = parse_reward_spec(m, reward_spec);
      std::vector<bool> target;
      if (c_reward->count("--target")) {
        target = label_states(ss, target_label);
      } else {
        // default: accumulate until any terminal state
        target.assign(ss.num_states(), false);
        for (std::uint32_t s = 0; s < ss.num_states(); ++s) target[s] = ss.is_absorbing(s);
      }
      SolveOptions sopts{common.tol, 1'000'000, common.workers};
      ValueVector v = expected_reward(ss, r, target, dir, sopts);
      std::printf("%.10f\n", v.at_initial(ss));
      return 0;
    }
    if (*c_sim) {
      Model m = load_or_die(model_path, rc);
      if (rc) return rc;
      CornerScheduler sched = sched_s == "lo"   ? CornerScheduler::AlwaysLo
                              : sched_s == "hi" ? CornerScheduler::AlwaysHi
                                                : CornerScheduler::UniformCorners;
      Estimate e = estimate(m, event_label, samples, seed, sched);
      std::string csv = estimate_csv_header() + estimate_csv_row(e);
      if (out_path.empty())
        std::fputs(csv.c_str(), stdout);
      else
        write_file_atomic(out_path, csv);
      if (e.truncated > 0)
        std::fprintf(stderr, "simulate: %llu truncated traces counted as non-events\n",
                     static_cast<unsigned long long>(e.truncated));
      if (trace_count > 0) {
        std::ostringstream os;
        for (std::uint32_t i = 0; i < trace_count; ++i)
          os << format_trace(m, sample_path(m, sched, seed + i));
        if (trace_out.empty())
          std::fputs(os.str().c_str(), stdout);
        else
          write_file_atomic(trace_out, os.str());
      }
      return 0;
    }
    if (*c_cal) {
      MicroParams p;
      if (!params_path.empty()) p = parse_micro_params(read_file(params_path));
      if (c_cal->count("--seed")) p.seed = cal_seed;
      if (c_cal->count("--trials")) p.trial_count = cal_trials;
      ActionStats stats = calibrate(p);
      write_file_atomic(out_path, action_stats_json(stats));
      return 0;
    }
    if (*c_gen) {
      if (!stats_path.empty()) sp.apply_action_stats(parse_action_stats(read_file(stats_path)));
      // explicit probability flags override calibration data
      if (!alpha_s.empty()) sp.alpha = parse_rational(alpha_s);
      if (!drop_s.empty()) sp.drop_prob = parse_rational(drop_s);
      if (!emergency_s.empty()) sp.emergency_prob = parse_rational(emergency_s);
      if (!grab_fail_s.empty()) sp.grab_fail_prob = parse_rational(grab_fail_s);
      if (!check_fail_s.empty()) sp.check_fail_prob = parse_rational(check_fail_s);
      std::string text = generate_model(sp);
      if (out_path.empty())
        std::fputs(text.c_str(), stdout);
      else
        write_file_atomic(out_path, text);
      return 0;
    }
  } catch (const ModelError& e) {
    std::cerr << "error " << e.code << ": " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
