#include "doctest.h"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "apfsm/parser.hpp"
#include "apfsm/scenario.hpp"
#include "apfsm/statespace.hpp"

using namespace apfsm;

namespace {

StateSpace build_text(const std::string& text, BuildMode mode) {
  BuildOptions opts;
  opts.mode = mode;
  return build(load_model(text), opts);
}

const char* kIntervalChain =
    "const interval T_ap = [3..4];\n"
    "var md : [0..2] init 0;\nvar t : [0..20] init 0;\n"
    "label done = md = 2;\n"
    "[Go] md = 0 weight 1 -> 1:(md:=1, t+=T_ap);\n"
    "[Fin] md = 1 weight 1 -> 1:(md:=2);\n";

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ModelError& e) {
    return e.code;
  }
  return "";
}

}  // namespace

TEST_CASE("interval-free models build identically in autonomous and interval mode") {
  const char* text =
      "var b : [0..4] init 4;\n"
      "label empty = b = 0;\n"
      "[Drain] b > 1 weight 1 -> 1/2:(b-=1) + 1/2:(b-=2);\n"
      "[Last] b = 1 weight 1 -> 1:(b-=1);\n";
  StateSpace a = build_text(text, BuildMode::Autonomous);
  StateSpace i = build_text(text, BuildMode::Interval);
  StateSpace u = build_text(text, BuildMode::Uniform);
  CHECK(a.stats.states == i.stats.states);
  CHECK(a.choice_offset == i.choice_offset);
  CHECK(a.row_offset == i.row_offset);
  CHECK(a.target == i.target);
  CHECK(a.prob == i.prob);
  CHECK(a.target == u.target);
  CHECK(a.prob == u.prob);
  CHECK(a.stats.states == 5);
}

TEST_CASE("interval build expands floor/ceiling corners into two choices") {
  StateSpace ss = build_text(kIntervalChain, BuildMode::Interval);
  // initial state triggers T_ap: exactly 2 choices (t+3 / t+4)
  REQUIRE(ss.choices_end(0) - ss.choices_begin(0) == 2);
  std::uint64_t c0 = ss.choices_begin(0);
  REQUIRE(ss.row_offset[c0 + 1] - ss.row_offset[c0] == 1);
  std::uint32_t lo_succ = ss.target[ss.row_offset[c0]];
  std::uint32_t hi_succ = ss.target[ss.row_offset[c0 + 1]];
  CHECK(ss.value_of(lo_succ, 1) == 3);
  CHECK(ss.value_of(hi_succ, 1) == 4);
  // the non-triggering command keeps a single choice
  CHECK(ss.choices_end(lo_succ) - ss.choices_begin(lo_succ) == 1);
}

TEST_CASE("uniform build averages the interval corners exactly") {
  StateSpace i = build_text(kIntervalChain, BuildMode::Interval);
  StateSpace u = build_text(kIntervalChain, BuildMode::Uniform);
  // same state table in both modes
  REQUIRE(i.stats.states == u.stats.states);
  for (std::uint32_t s = 0; s < i.num_states(); ++s) {
    auto iv = i.valuation(s);
    auto uv = u.valuation(s);
    CHECK(std::equal(iv.begin(), iv.end(), uv.begin()));
  }
  // uniform row over the initial state: both corner targets at exactly 1/2
  std::uint64_t c0 = u.choices_begin(0);
  REQUIRE(u.choices_end(0) - c0 == 1);
  REQUIRE(u.row_offset[c0 + 1] - u.row_offset[c0] == 2);
  CHECK(u.prob[u.row_offset[c0]] == 0.5);
  CHECK(u.prob[u.row_offset[c0] + 1] == 0.5);

  // choice-wise average of the interval matrix equals the uniform matrix
  for (std::uint32_t s = 0; s < i.num_states(); ++s) {
    std::map<std::uint32_t, double> avg;
    int k = 0;
    for (std::uint64_t c = i.choices_begin(s); c < i.choices_end(s); ++c, ++k)
      for (std::uint64_t e = i.row_offset[c]; e < i.row_offset[c + 1]; ++e)
        avg[i.target[e]] += i.prob[e];
    for (auto& [t, p] : avg) p /= k;
    std::map<std::uint32_t, double> urow;
    std::uint64_t c = u.choices_begin(s);
    for (std::uint64_t e = u.row_offset[c]; e < u.row_offset[c + 1]; ++e)
      urow[u.target[e]] += u.prob[e];
    REQUIRE(avg.size() == urow.size());
    for (auto& [t, p] : avg) CHECK(urow[t] == doctest::Approx(p).epsilon(1e-15));
  }
}

TEST_CASE("autonomous build rejects live interval constants") {
  CHECK(error_code([] { build_text(kIntervalChain, BuildMode::Autonomous); }) ==
        "interval-in-dtmc");
}

TEST_CASE("deadlocked states become absorbing self-loops labeled deadlock") {
  StateSpace ss = build_text(
      "var b : [0..3] init 3;\n[Drain] b > 0 weight 1 -> 1:(b-=1);\n", BuildMode::Autonomous);
  // b=0 deadlocks
  std::uint32_t dead = 0;
  bool found = false;
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (ss.deadlock[s]) {
      dead = s;
      found = true;
    }
  REQUIRE(found);
  CHECK(ss.value_of(dead, 0) == 0);
  CHECK(ss.is_absorbing(dead));
  std::uint64_t c = ss.choices_begin(dead);
  CHECK(ss.row_offset[c + 1] - ss.row_offset[c] == 1);
  CHECK(ss.target[ss.row_offset[c]] == dead);
  CHECK(ss.prob[ss.row_offset[c]] == 1.0);
}

TEST_CASE("build errors carry the offending reachable state") {
  CHECK(error_code([] {
          build_text("var b : [0..3] init 3;\n"
                     "[A] b > 0 weight 1/2 -> 1:(b-=1);\n"
                     "[B] b > 0 weight 1/2 -> 1:(b-=2);\n",
                     BuildMode::Autonomous);
        }) == "weight-tie");
  CHECK(error_code([] {
          build_text("var b : [0..3] init 3;\n[Over] b < 4 weight 1 -> 1:(b+=1);\n",
                     BuildMode::Autonomous);
        }) == "domain-violation");
  CHECK(error_code([] {
          build_text("var b : [0..3] init 3;\n[Bad] b = 3 weight 2 -> 1:(b-=1);\n",
                     BuildMode::Autonomous);
        }) == "weight-range");
  CHECK(error_code([] {
          build_text("var b : [0..3] init 3;\n"
                     "[A] b > 0 weight 1 -> 1:(b-=1);\n"
                     "[A] b > 2 weight 1/2 -> 1:(b-=2);\n",
                     BuildMode::Autonomous);
        }) == "ambiguous-action");
}

TEST_CASE("state budget is enforced") {
  BuildOptions opts;
  opts.mode = BuildMode::Autonomous;
  opts.state_budget = 10;
  Model m = load_model("var t : [0..100] init 0;\n[Tick] t < 100 weight 1 -> 1:(t+=1);\n");
  CHECK(error_code([&] { build(m, opts); }) == "state-budget-exceeded");
}

TEST_CASE("two builds of the same model yield identical ids and rows") {
  ScenarioParams p;
  p.t_ap_lo = 3;
  p.t_ap_hi = 4;
  Model m = load_model(generate_model(p));
  BuildOptions opts;
  opts.mode = BuildMode::Interval;
  StateSpace a = build(m, opts);
  StateSpace b = build(m, opts);
  CHECK(a.stats.states == b.stats.states);
  CHECK(a.state_values == b.state_values);
  CHECK(a.choice_offset == b.choice_offset);
  CHECK(a.row_offset == b.row_offset);
  CHECK(a.target == b.target);
  CHECK(a.prob == b.prob);
}

TEST_CASE("every probability row sums to one") {
  ScenarioParams p;
  p.t_ap_lo = 3;
  p.t_ap_hi = 4;
  p.b_ap_lo = 2;
  p.b_ap_hi = 3;
  p.grab_fail_prob = Rat(1, 10);
  StateSpace ss = build_text(generate_model(p), BuildMode::Interval);
  for (std::size_t c = 0; c + 1 < ss.row_offset.size(); ++c) {
    double sum = 0;
    for (std::uint64_t e = ss.row_offset[c]; e < ss.row_offset[c + 1]; ++e) sum += ss.prob[e];
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("autonomous scenario build is a literal DTMC") {
  StateSpace ss = build_text(generate_model(ScenarioParams{}), BuildMode::Autonomous);
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    CHECK(ss.choices_end(s) - ss.choices_begin(s) == 1);
}

TEST_CASE("terminal classification follows the priority order") {
  // absorbing state matching both success and timeout labels goes to success
  StateSpace ss = build_text(
      "var md : [0..2] init 0;\n"
      "label timeout = md >= 1;\nlabel success = md = 2;\n"
      "[Go] md = 0 weight 1 -> 1:(md:=2);\n",
      BuildMode::Autonomous);
  TerminalPartition part = classify_terminals(ss);
  int succ = part.index_of("success");
  int tout = part.index_of("timeout");
  REQUIRE(succ >= 0);
  REQUIRE(tout >= 0);
  CHECK(part.members[succ].size() == 1);
  CHECK(part.members[tout].empty());
  // categories are disjoint and cover all absorbing states
  std::size_t total = 0;
  for (auto& ids : part.members) total += ids.size();
  std::size_t absorbing = 0;
  for (std::uint32_t s = 0; s < ss.num_states(); ++s)
    if (ss.is_absorbing(s)) ++absorbing;
  CHECK(total == absorbing);
}

TEST_CASE("builder deadlocks classify as deadlock; explicit unlabeled sinks error") {
  StateSpace dead = build_text("var b : [0..1] init 0;\n[X] b = 1 weight 1 -> 1:(b:=0);\n",
                               BuildMode::Autonomous);
  TerminalPartition part = classify_terminals(dead);
  CHECK(part.members[part.index_of("deadlock")].size() == 1);

  StateSpace sink = build_text("var b : [0..1] init 0;\n[Loop] b = 0 weight 1 -> 1:();\n",
                               BuildMode::Autonomous);
  try {
    classify_terminals(sink);
    CHECK(false);
  } catch (const ModelError& e) {
    CHECK(e.code == "unlabeled-terminal");
  }
}

TEST_CASE("state-space dump has the documented format and is deterministic") {
  StateSpace ss = build_text(kIntervalChain, BuildMode::Interval);
  std::ostringstream a, b;
  dump_statespace(ss, a);
  dump_statespace(ss, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, 11) == "apfsm-ss v1");
  CHECK(a.str().find("state 0 md=0,t=0 []") != std::string::npos);
  CHECK(a.str().find("row 0 0 ") != std::string::npos);
  CHECK(a.str().find("row 0 1 ") != std::string::npos);
}
