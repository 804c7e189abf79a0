#include "doctest.h"

#include <cmath>

#include "apfsm/analysis.hpp"
#include "apfsm/parser.hpp"
#include "apfsm/scenario.hpp"
#include "oracles.hpp"

using namespace apfsm;
using namespace apfsm::test;

namespace {

StateSpace chain_half() {
  // s0 -> {s1: 1/2, s2: 1/2}, s1 = goal (absorbing), s2 = sink
  SyntheticMdp m;
  m.n = 3;
  m.choices = {{{{1, 0.5}, {2, 0.5}}}, {{{1, 1.0}}}, {{{2, 1.0}}}};
  m.target.assign(3, false);
  m.target[1] = true;
  StateSpace ss = to_statespace(m);
  ss.initial_id = 0;
  return ss;
}

std::vector<bool> target_of(const SyntheticMdp& m) { return m.target; }

}  // namespace

TEST_CASE("one-step law: half/half chain reaches the goal with 0.5") {
  StateSpace ss = chain_half();
  std::vector<bool> target(3, false);
  target[1] = true;
  ValueVector v = reach(ss, target, Direction::Fixed);
  CHECK(v.values[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("almost-sure absorption: self-loop plus exit reaches with 1") {
  SyntheticMdp m;
  m.n = 2;
  m.choices = {{{{0, 0.5}, {1, 0.5}}}, {{{1, 1.0}}}};
  m.target = {false, true};
  StateSpace ss = to_statespace(m);
  ss.initial_id = 0;
  ValueVector v = reach(ss, m.target, Direction::Fixed);
  // the qualitative pass pins this at exactly 1.0
  CHECK(v.values[0] == 1.0);
  CHECK(v.conv.iterations <= 1);
}

TEST_CASE("random DTMCs agree with the dense linear-solve oracle") {
  for (int i = 0; i < 25; ++i) {
    SyntheticMdp m = random_dtmc(50, 1000 + i);
    std::vector<double> oracle = linear_reach(m, {});
    StateSpace ss = to_statespace(m);
    ValueVector v = reach(ss, target_of(m), Direction::Fixed);
    for (int s = 0; s < m.n; ++s) CHECK(std::fabs(v.values[s] - oracle[s]) < 1e-6);
  }
}

TEST_CASE("random MDPs: min <= max and both match exhaustive enumeration on tiny instances") {
  for (int i = 0; i < 12; ++i) {
    SyntheticMdp m = random_mdp(8, 2, 77 + i);
    std::vector<double> lo = exhaustive_reach(m, false);
    std::vector<double> hi = exhaustive_reach(m, true);
    StateSpace ss = to_statespace(m);
    ValueVector vmin = reach(ss, target_of(m), Direction::Min);
    ValueVector vmax = reach(ss, target_of(m), Direction::Max);
    for (int s = 0; s < m.n; ++s) {
      CHECK(vmin.values[s] <= vmax.values[s] + 1e-12);
      CHECK(std::fabs(vmin.values[s] - lo[s]) < 1e-6);
      CHECK(std::fabs(vmax.values[s] - hi[s]) < 1e-6);
    }
    // the policy-iteration oracle agrees with enumeration
    std::vector<double> pi_lo = policy_iteration_reach(m, false);
    std::vector<double> pi_hi = policy_iteration_reach(m, true);
    for (int s = 0; s < m.n; ++s) {
      CHECK(std::fabs(pi_lo[s] - lo[s]) < 1e-9);
      CHECK(std::fabs(pi_hi[s] - hi[s]) < 1e-9);
    }
  }
}

TEST_CASE("fixed direction on a genuine MDP is rejected") {
  SyntheticMdp m = random_mdp(5, 2, 3);
  StateSpace ss = to_statespace(m);
  try {
    reach(ss, target_of(m), Direction::Fixed);
    CHECK(false);
  } catch (const ModelError& e) {
    CHECK(e.code == "fixed-on-mdp");
  }
}

TEST_CASE("an empty target set is unreachable with probability zero") {
  StateSpace ss = chain_half();
  std::vector<bool> none(3, false);
  ValueVector v = reach(ss, none, Direction::Fixed);
  for (double x : v.values) CHECK(x == 0.0);
}

TEST_CASE("expected reward: one per step with a half self-loop solves x = 1 + x/2") {
  SyntheticMdp m;
  m.n = 2;
  m.choices = {{{{0, 0.5}, {1, 0.5}}}, {{{1, 1.0}}}};
  m.target = {false, true};
  StateSpace ss = to_statespace(m);
  ss.initial_id = 0;
  RewardStructure r;
  r.kind = RewardStructure::Kind::Step;
  r.name = "steps";
  ValueVector v = expected_reward(ss, r, m.target, Direction::Fixed);
  CHECK(v.values[0] == doctest::Approx(2.0).epsilon(1e-8));

  r.weight = 0.0;  // zero reward annihilates
  ValueVector z = expected_reward(ss, r, m.target, Direction::Fixed);
  CHECK(z.values[0] == 0.0);
}

TEST_CASE("expected reward diverges when the target is not almost-sure") {
  StateSpace ss = chain_half();  // sink state never reaches the goal
  std::vector<bool> target(3, false);
  target[1] = true;
  RewardStructure r;
  r.kind = RewardStructure::Kind::Step;
  try {
    expected_reward(ss, r, target, Direction::Fixed);
    CHECK(false);
  } catch (const ModelError& e) {
    CHECK(e.code == "reward-divergence");
  }
}

TEST_CASE("outcome summary on a DTMC sums to one and matches categories") {
  StateSpace ss =
      build(load_model("var b : [0..2] init 2;\nlabel empty = b = 0;\n"
                       "[D] b > 0 weight 1 -> 1:(b-=1);\n"),
            BuildOptions{BuildMode::Autonomous});
  TerminalPartition part = classify_terminals(ss);
  OutcomeSummary sum = outcome_summary(ss, part, Direction::Fixed);
  CHECK(sum.total == doctest::Approx(1.0).epsilon(1e-9));
  bool found = false;
  for (auto& [cat, p] : sum.probabilities)
    if (cat == "empty") {
      CHECK(p == doctest::Approx(1.0).epsilon(1e-9));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("min-direction outcome sums stay at or below one, max at or above") {
  ScenarioParams p;
  p.t_ap_lo = 3;
  p.t_ap_hi = 4;
  p.b_ap_lo = 2;
  p.b_ap_hi = 3;
  StateSpace ss = build(load_model(generate_model(p)), BuildOptions{BuildMode::Interval});
  TerminalPartition part = classify_terminals(ss);
  OutcomeSummary lo = outcome_summary(ss, part, Direction::Min);
  OutcomeSummary hi = outcome_summary(ss, part, Direction::Max);
  CHECK(lo.total <= 1.0 + 1e-9);
  CHECK(hi.total >= 1.0 - 1e-9);
}

TEST_CASE("deadline series: below-minimum zero, monotone, limit equals unbounded reach") {
  Model m = load_model(
      "const interval D = [2..3];\n"
      "var md : [0..3] init 0;\nvar t : [0..30] init 0;\n"
      "label goal = md = 3;\n"
      "[A] md = 0 weight 1 -> 1/2:(md:=1, t+=D) + 1/2:(md:=2, t+=1);\n"
      "[B1] md = 1 weight 1 -> 1:(md:=3, t+=1);\n"
      "[B2] md = 2 weight 1 -> 1:(md:=3, t+=5);\n");
  StateSpace iss = build(m, BuildOptions{BuildMode::Interval});
  StateSpace uss = build(m, BuildOptions{BuildMode::Uniform});
  DeadlineCurve c = deadline_curve(iss, uss, "goal", "t", 0, 10, 1);
  // fastest completion: t = 2+1 = 3
  for (int i = 0; i <= 2; ++i) {
    CHECK(c.min_p[i] == 0.0);
    CHECK(c.max_p[i] == 0.0);
    CHECK(c.uniform_p[i] == 0.0);
  }
  CHECK(c.max_p[3] == doctest::Approx(0.5));   // lo corner arrives at 3
  CHECK(c.min_p[3] == 0.0);                    // hi corner arrives at 4
  CHECK(c.uniform_p[3] == doctest::Approx(0.25));
  for (std::size_t i = 1; i < c.deadlines.size(); ++i) {
    CHECK(c.min_p[i] >= c.min_p[i - 1] - 1e-15);
    CHECK(c.max_p[i] >= c.max_p[i - 1] - 1e-15);
    CHECK(c.uniform_p[i] >= c.uniform_p[i - 1] - 1e-15);
  }
  // sandwich at every sample point
  for (std::size_t i = 0; i < c.deadlines.size(); ++i) {
    CHECK(c.min_p[i] <= c.uniform_p[i] + 1e-9);
    CHECK(c.uniform_p[i] <= c.max_p[i] + 1e-9);
  }
  // final point equals unbounded reachability
  ValueVector vmin = reach(iss, "goal", Direction::Min);
  ValueVector vmax = reach(iss, "goal", Direction::Max);
  ValueVector vfix = reach(uss, "goal", Direction::Fixed);
  CHECK(std::fabs(c.min_p.back() - vmin.at_initial(iss)) < 1e-9);
  CHECK(std::fabs(c.max_p.back() - vmax.at_initial(iss)) < 1e-9);
  CHECK(std::fabs(c.uniform_p.back() - vfix.at_initial(uss)) < 1e-9);
}

TEST_CASE("deadline series rejects a decreasing time variable") {
  Model m = load_model(
      "var md : [0..1] init 0;\nvar t : [0..9] init 5;\n"
      "label goal = md = 1;\n"
      "[Back] md = 0 weight 1 -> 1:(md:=1, t-=1);\n");
  StateSpace ss = build(m, BuildOptions{BuildMode::Autonomous});
  try {
    deadline_series(ss, "goal", "t", {5}, Direction::Fixed);
    CHECK(false);
  } catch (const ModelError& e) {
    CHECK(e.code == "monotonicity-violation");
  }
}

TEST_CASE("forward absorption matches backward reach on the desk DTMC") {
  StateSpace ss = build(load_model(generate_model(ScenarioParams{})),
                        BuildOptions{BuildMode::Autonomous});
  std::vector<double> mu = forward_absorption(ss);
  std::vector<bool> succ = label_states(ss, "success");
  double mass = 0.0;
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (succ[s]) mass += mu[s];
  ValueVector v = reach(ss, "success", Direction::Fixed);
  CHECK(std::fabs(mass - v.at_initial(ss)) < 1e-9);
}

TEST_CASE("worker count does not change results") {
  // desk scenario has enough states to actually split across threads
  StateSpace ss = build(load_model(generate_model(ScenarioParams{})),
                        BuildOptions{BuildMode::Autonomous});
  SolveOptions one;
  one.workers = 1;
  SolveOptions four;
  four.workers = 4;
  ValueVector a = reach(ss, "success", Direction::Fixed, one);
  ValueVector b = reach(ss, "success", Direction::Fixed, four);
  CHECK(a.values == b.values);
}

TEST_CASE("desk curve values match the forward-flow oracle at every sample") {
  ScenarioParams p;
  p.t_ap_lo = 3;
  p.t_ap_hi = 4;
  p.b_ap_lo = 2;
  p.b_ap_hi = 3;
  Model m = load_model(generate_model(p));
  StateSpace uss = build(m, BuildOptions{BuildMode::Uniform});
  std::vector<std::int64_t> Ts;
  for (std::int64_t T = 0; T <= 150; T += 10) Ts.push_back(T);
  std::vector<double> engine = deadline_series(uss, "success", "t", Ts, Direction::Fixed);

  OracleGraph g = explore_model(m);
  int tvar = m.var_index("t");
  std::vector<bool> succ(g.states.size(), false);
  for (std::size_t s = 0; s < g.states.size(); ++s)
    succ[s] = g.absorbing[s] && state_category(m, g.states[s]) == "success";
  std::vector<double> oracle = oracle_deadline_uniform(g, succ, tvar, Ts);
  REQUIRE(engine.size() == oracle.size());
  for (std::size_t i = 0; i < engine.size(); ++i)
    CHECK(std::fabs(engine[i] - oracle[i]) < 1e-6);
}

TEST_CASE("expected drops per mission match the forward-flow oracle") {
  ScenarioParams p;
  p.drop_prob = Rat(1, 10);
  Model m = load_model(generate_model(p));
  StateSpace ss = build(m, BuildOptions{BuildMode::Autonomous});
  RewardStructure r;
  r.kind = RewardStructure::Kind::Edge;
  r.edge_pred = m.labels[m.label_index("dropped")].pred;
  r.name = "edge:dropped";
  std::vector<bool> terminals(ss.num_states(), false);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s) terminals[s] = ss.is_absorbing(s);
  double engine = expected_reward(ss, r, terminals, Direction::Fixed).at_initial(ss);

  OracleGraph g = explore_model(m);
  int vdrp = m.var_index("drp");
  std::vector<bool> pred(g.states.size(), false);
  for (std::size_t s = 0; s < g.states.size(); ++s) pred[s] = g.states[s][vdrp] == 1;
  double oracle = oracle_expected_edges(g, pred);
  CHECK(engine == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(engine > 0.0);
}

TEST_CASE("curve CSV format") {
  DeadlineCurve c;
  c.deadlines = {0, 5};
  c.min_p = {0.0, 0.123456789012};
  c.max_p = {0.0, 0.5};
  c.uniform_p = {0.0, 0.25};
  std::string csv = curve_csv(c);
  CHECK(csv.substr(0, 19) == "T,min,max,uniform\n0");
  CHECK(csv.find("5,0.123456789,0.5,0.25") != std::string::npos);
}
