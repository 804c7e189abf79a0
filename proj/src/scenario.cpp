#include "apfsm/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "apfsm/model.hpp"
#include "apfsm/parser.hpp"

namespace apfsm {

std::pair<int, int> search_pattern(const ScenarioParams& p, int x, int y) {
  if (x < 0 || x >= p.width || y < 0 || y >= p.height)
    throw std::invalid_argument("search_pattern: position outside arena");
  bool last_row = y == p.height - 1;
  if (y % 2 == 0) {  // even rows sweep left-to-right
    if (x < p.width - 1) return {x + 1, y};
    return last_row ? std::pair<int, int>{0, 0} : std::pair<int, int>{x, y + 1};
  }
  if (x > 0) return {x - 1, y};
  return last_row ? std::pair<int, int>{0, 0} : std::pair<int, int>{x, y + 1};
}

void ScenarioParams::check() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("scenario: " + msg); };
  if (width < 1 || height < 1) bad("arena must be at least 1x1");
  if (width > 200 || height > 200) bad("arena side beyond 200 cells");
  if (objects < 1) bad("object count must be >= 1");
  if (time_limit < 1) bad("time limit must be positive");
  if (!(battery_low > 0 && battery_low < battery_capacity)) bad("requires 0 < B_low < capacity");
  if (step_dt < 1) bad("per-cell time must be >= 1");
  if (step_db < 0) bad("per-cell battery must be >= 0");
  if (battery_low < step_db) bad("B_low must cover at least one step's battery");
  if (t_ap_lo < 0 || t_ap_lo > t_ap_hi) bad("approach time interval malformed");
  if (b_ap_lo < 0 || b_ap_lo > b_ap_hi) bad("approach battery interval malformed");
  const std::pair<std::int32_t, const char*> costs[] = {
      {t_descend, "t_descend"}, {t_grab, "t_grab"},       {t_ascend, "t_ascend"},
      {t_deposit, "t_deposit"}, {t_takeoff, "t_takeoff"}, {t_check, "t_check"},
      {t_recharge, "t_recharge"}, {b_descend, "b_descend"}, {b_grab, "b_grab"},
      {b_ascend, "b_ascend"},   {b_deposit, "b_deposit"}, {b_takeoff, "b_takeoff"},
      {b_check, "b_check"}};
  for (auto [v, name] : costs)
    if (v < 0) bad(std::string(name) + " must be >= 0");
  auto prob_ok = [](const Rat& r) { return r >= Rat(0) && r <= Rat(1); };
  if (!prob_ok(alpha)) bad("alpha outside [0,1]");
  if (!prob_ok(drop_prob)) bad("drop probability outside [0,1]");
  if (!prob_ok(emergency_prob)) bad("emergency probability outside [0,1]");
  if (!prob_ok(grab_fail_prob) || grab_fail_prob == Rat(1)) bad("grab failure outside [0,1)");
  if (!prob_ok(check_fail_prob)) bad("system-check failure outside [0,1]");
  if (grab_fail_prob > Rat(0) && t_grab < 1) bad("grab retries need t_grab >= 1");
  if (battery_capacity < b_takeoff + b_check) bad("capacity cannot fund takeoff and system check");
}

void ScenarioParams::apply_action_stats(const ActionStats& stats) {
  auto it = stats.find("approach");
  if (it != stats.end()) {
    t_ap_lo = static_cast<std::int32_t>(it->second.time.lo);
    t_ap_hi = static_cast<std::int32_t>(it->second.time.hi);
    b_ap_lo = static_cast<std::int32_t>(it->second.battery.lo);
    b_ap_hi = static_cast<std::int32_t>(it->second.battery.hi);
  }
  it = stats.find("search");
  if (it != stats.end()) {
    step_dt = std::max<std::int32_t>(1, static_cast<std::int32_t>(std::llround(it->second.time.mean)));
    step_db = std::max<std::int32_t>(0, static_cast<std::int32_t>(std::llround(it->second.battery.mean)));
    if (it->second.has_prob) alpha = it->second.prob;
  }
  it = stats.find("grab");
  if (it != stats.end()) {
    t_grab = std::max<std::int32_t>(1, static_cast<std::int32_t>(std::llround(it->second.time.mean)));
    b_grab = std::max<std::int32_t>(0, static_cast<std::int32_t>(std::llround(it->second.battery.mean)));
    if (it->second.has_prob) grab_fail_prob = it->second.prob;
  }
  it = stats.find("transport");
  if (it != stats.end() && it->second.has_prob) drop_prob = it->second.prob;
}

namespace {

// Expression shorthand for assembling the model tree. Names resolve when the
// emitted text is validated.
Expr N(const char* name) { return Expr::var(name); }
Expr L(std::int64_t v) { return Expr::literal(Rat(v)); }

Expr bin(ExprOp op, Expr a, Expr b) { return Expr::binary(op, std::move(a), std::move(b)); }
Expr eq(Expr a, Expr b) { return bin(ExprOp::Eq, std::move(a), std::move(b)); }
Expr ne(Expr a, Expr b) { return bin(ExprOp::Ne, std::move(a), std::move(b)); }
Expr lt(Expr a, Expr b) { return bin(ExprOp::Lt, std::move(a), std::move(b)); }
Expr le(Expr a, Expr b) { return bin(ExprOp::Le, std::move(a), std::move(b)); }
Expr gt(Expr a, Expr b) { return bin(ExprOp::Gt, std::move(a), std::move(b)); }
Expr ge(Expr a, Expr b) { return bin(ExprOp::Ge, std::move(a), std::move(b)); }

Expr conj(Expr a, Expr b) { return bin(ExprOp::And, std::move(a), std::move(b)); }
template <typename... Rest>
Expr conj(Expr a, Expr b, Rest... rest) {
  return conj(conj(std::move(a), std::move(b)), std::move(rest)...);
}
Expr disj(Expr a, Expr b) { return bin(ExprOp::Or, std::move(a), std::move(b)); }

UpdateOp set(const char* var, Expr amount) {
  UpdateOp u;
  u.var = var;
  u.kind = UpdateKind::Assign;
  u.amount = std::move(amount);
  return u;
}
UpdateOp set(const char* var, std::int64_t v) { return set(var, L(v)); }
UpdateOp add(const char* var, Expr amount) {
  UpdateOp u;
  u.var = var;
  u.kind = UpdateKind::Add;
  u.amount = std::move(amount);
  return u;
}
UpdateOp sub(const char* var, Expr amount) {
  UpdateOp u;
  u.var = var;
  u.kind = UpdateKind::Sub;
  u.amount = std::move(amount);
  return u;
}

struct Branch {
  Rat prob;
  std::vector<UpdateOp> updates;
};

class Gen {
 public:
  explicit Gen(const ScenarioParams& p) : p_(p) {}

  Model build() {
    declare();
    commands();
    return std::move(m_);
  }

 private:
  void declare() {
    auto constant = [&](const char* name, std::int64_t v) {
      m_.constants.push_back({name, v, {}});
    };
    constant("limit", p_.time_limit);
    constant("b_low", p_.battery_low);
    constant("b_cap", p_.battery_capacity);
    constant("dt", p_.step_dt);
    constant("db", p_.step_db);
    if (p_.t_ap_lo == p_.t_ap_hi)
      constant("T_ap", p_.t_ap_lo);
    else
      m_.intervals.push_back({"T_ap", p_.t_ap_lo, p_.t_ap_hi, {}});
    if (p_.b_ap_lo == p_.b_ap_hi)
      constant("B_ap", p_.b_ap_lo);
    else
      m_.intervals.push_back({"B_ap", p_.b_ap_lo, p_.b_ap_hi, {}});
    constant("B_ap_max", p_.b_ap_hi);
    constant("t_desc", p_.t_descend);
    constant("b_desc", p_.b_descend);
    constant("t_grab", p_.t_grab);
    constant("b_grab", p_.b_grab);
    constant("t_asc", p_.t_ascend);
    constant("b_asc", p_.b_ascend);
    constant("t_dep", p_.t_deposit);
    constant("b_dep", p_.b_deposit);
    constant("t_rch", p_.t_recharge);
    constant("t_to", p_.t_takeoff);
    constant("b_to", p_.b_takeoff);
    constant("t_chk", p_.t_check);
    constant("b_chk", p_.b_check);

    // Worst-case overshoot past the limit: the step that crosses it, then the
    // ascent, the loaded leg home, the deposit and the return flight. Drops
    // on the post-limit leg abandon immediately, so no retrieve cycles pile
    // up past the deadline.
    std::int64_t travel = static_cast<std::int64_t>(p_.width + p_.height) * p_.step_dt;
    std::int64_t slack = p_.t_takeoff + p_.t_check + p_.t_ap_hi + p_.t_descend + p_.t_grab +
                         p_.t_ascend + p_.t_deposit + p_.t_recharge + 2 * travel + p_.step_dt + 2;
    std::int64_t t_max = p_.time_limit + slack;

    auto variable = [&](const char* name, std::int32_t lo, std::int32_t hi, std::int32_t init) {
      m_.variables.push_back({name, lo, hi, init, {}});
    };
    variable("m", 0, 13, kModeIdle);
    variable("px", 0, p_.width - 1, 0);
    variable("py", 0, p_.height - 1, 0);
    variable("rx", 0, p_.width - 1, 0);
    variable("ry", 0, p_.height - 1, 0);
    variable("obj", 0, p_.objects, p_.objects);
    variable("carry", 0, 1, 0);
    variable("drp", 0, 1, 0);
    variable("rch", 0, 1, 0);
    variable("t", 0, static_cast<std::int32_t>(t_max), 0);
    variable("b", 0, p_.battery_capacity, p_.battery_capacity);

    auto label = [&](const char* name, Expr pred) {
      m_.labels.push_back({name, std::move(pred), {}});
    };
    label("success", conj(eq(N("m"), L(kModeMissionComplete)), eq(N("obj"), L(0))));
    label("missed", conj(eq(N("m"), L(kModeMissionComplete)), gt(N("obj"), L(0))));
    label("emergency", eq(N("m"), L(kModeEmergencyLanding)));
    label("timeout", eq(N("m"), L(kModeMissionAbandoned)));
    label("dropped", eq(N("drp"), L(1)));
    label("recharging", eq(N("m"), L(kModeRecharge)));
  }

  void cmd(const char* action, Expr guard, Expr weight, std::vector<Branch> branches) {
    Command c;
    c.action = action;
    c.guard = std::move(guard);
    c.weight = std::move(weight);
    for (Branch& b : branches) {
      if (b.prob == Rat(0)) continue;
      Outcome o;
      o.prob = b.prob;
      o.updates = std::move(b.updates);
      c.outcomes.push_back(std::move(o));
    }
    if (c.outcomes.empty()) return;  // fully degenerate distribution
    m_.commands.push_back(std::move(c));
  }

  // Airborne commands carry a per-step emergency branch.
  std::vector<Branch> airborne(std::vector<Branch> branches) {
    std::vector<Branch> out;
    Rat em = p_.emergency_prob;
    if (em > Rat(0)) out.push_back({em, {set("m", kModeEmergencyLanding)}});
    Rat rest = Rat(1) - em;
    for (Branch& b : branches) out.push_back({rest * b.prob, std::move(b.updates)});
    return out;
  }

  Expr in_mode(int mode) { return eq(N("m"), L(mode)); }
  Expr before_limit() { return lt(N("t"), N("limit")); }
  Expr past_limit() { return ge(N("t"), N("limit")); }

  std::vector<UpdateOp> step_cost(std::vector<UpdateOp> upds) {
    upds.push_back(add("t", N("dt")));
    upds.push_back(sub("b", N("db")));
    return upds;
  }

  void commands() {
    // launch and system check
    cmd("Takeoff", in_mode(kModeIdle), L(1),
        {{Rat(1), {set("m", kModeSystemCheck), add("t", N("t_to")), sub("b", N("b_to"))}}});

    Rat ok = Rat(1) - p_.check_fail_prob;
    cmd("SysCheck", in_mode(kModeSystemCheck), L(1),
        airborne({{p_.check_fail_prob, {set("m", kModeReturnToBase)}},
                  {ok, {set("m", kModeSearch), add("t", N("t_chk")), sub("b", N("b_chk"))}}}));

    // search sweep, one command pair per cell (threshold weights mirror the
    // guards, keeping the enabled set disjoint)
    for (int y = 0; y < p_.height; ++y) {
      for (int x = 0; x < p_.width; ++x) {
        auto [nx, ny] = search_pattern(p_, x, y);
        Expr at_cell = conj(in_mode(kModeSearch), eq(N("px"), L(x)), eq(N("py"), L(y)));
        Rat found = p_.alpha;
        cmd("Search",
            conj(at_cell.clone(), gt(N("b"), N("b_low")), before_limit()),
            gt(N("b"), N("b_low")),
            airborne({{Rat(1) - found,
                       step_cost({set("px", nx), set("py", ny)})},
                      {found,
                       step_cost({set("px", nx), set("py", ny), set("rx", nx), set("ry", ny),
                                  set("m", kModeTargetApproach)})}}));
        cmd("BatteryLow",
            conj(at_cell.clone(), le(N("b"), N("b_low")), ge(N("b"), N("db")), before_limit()),
            bin(ExprOp::Sub, L(1), gt(N("b"), N("b_low"))),
            airborne({{Rat(1),
                       step_cost({set("px", nx), set("py", ny), set("rx", nx), set("ry", ny),
                                  set("rch", 1), set("m", kModeTransit)})}}));
      }
    }
    cmd("BatteryDead", conj(in_mode(kModeSearch), lt(N("b"), N("db")), before_limit()), L(1),
        {{Rat(1), {set("m", kModeEmergencyLanding)}}});

    // target approach consumes the calibrated interval costs
    cmd("Approach", conj(in_mode(kModeTargetApproach), before_limit(), ge(N("b"), N("B_ap_max"))),
        L(1),
        airborne({{Rat(1), {set("m", kModeDescend), add("t", N("T_ap")), sub("b", N("B_ap"))}}}));
    cmd("BatteryDead",
        conj(in_mode(kModeTargetApproach), before_limit(), lt(N("b"), N("B_ap_max"))), L(1),
        {{Rat(1), {set("m", kModeEmergencyLanding)}}});

    cmd("Descend", conj(in_mode(kModeDescend), before_limit(), ge(N("b"), N("b_desc"))), L(1),
        airborne({{Rat(1), {set("m", kModeGrab), add("t", N("t_desc")), sub("b", N("b_desc"))}}}));
    cmd("BatteryDead", conj(in_mode(kModeDescend), before_limit(), lt(N("b"), N("b_desc"))), L(1),
        {{Rat(1), {set("m", kModeEmergencyLanding)}}});

    // first grab takes the object off the arena count; a regrab only clears
    // the dropped flag
    Rat grabbed = Rat(1) - p_.grab_fail_prob;
    cmd("Grab",
        conj(in_mode(kModeGrab), eq(N("drp"), L(0)), before_limit(), ge(N("b"), N("b_grab"))),
        L(1),
        airborne({{grabbed,
                   {set("m", kModeAscend), set("carry", 1), sub("obj", L(1)),
                    add("t", N("t_grab")), sub("b", N("b_grab"))}},
                  {p_.grab_fail_prob, {add("t", N("t_grab")), sub("b", N("b_grab"))}}}));
    cmd("Regrab",
        conj(in_mode(kModeGrab), eq(N("drp"), L(1)), before_limit(), ge(N("b"), N("b_grab"))),
        L(1),
        airborne({{grabbed,
                   {set("m", kModeAscend), set("carry", 1), set("drp", 0), add("t", N("t_grab")),
                    sub("b", N("b_grab"))}},
                  {p_.grab_fail_prob, {add("t", N("t_grab")), sub("b", N("b_grab"))}}}));
    cmd("BatteryDead", conj(in_mode(kModeGrab), before_limit(), lt(N("b"), N("b_grab"))), L(1),
        {{Rat(1), {set("m", kModeEmergencyLanding)}}});

    // the ascent finishes even past the deadline so a held object is not lost
    cmd("Ascend", conj(in_mode(kModeAscend), ge(N("b"), N("b_asc"))), L(1),
        airborne({{Rat(1), {set("m", kModeTransit), add("t", N("t_asc")), sub("b", N("b_asc"))}}}));
    cmd("BatteryDead", conj(in_mode(kModeAscend), lt(N("b"), N("b_asc"))), L(1),
        {{Rat(1), {set("m", kModeEmergencyLanding)}}});

    transit_commands();
    deposit_commands();
    return_commands();

    cmd("Recharge", conj(in_mode(kModeRecharge), before_limit()), L(1),
        {{Rat(1),
          {set("b", N("b_cap")), set("rch", 0), set("m", kModeTransit), add("t", N("t_rch"))}}});

    // mission-abandon redirects once the limit is hit
    cmd("Abandon", conj(in_mode(kModeSearch), past_limit()), L(1),
        {{Rat(1), {set("m", kModeReturnToBase)}}});
    cmd("Abandon", conj(in_mode(kModeTargetApproach), past_limit()), L(1),
        {{Rat(1), {set("m", kModeReturnToBase)}}});
    for (int mode : {kModeDescend, kModeGrab}) {
      cmd("Abandon", conj(in_mode(mode), eq(N("drp"), L(0)), past_limit()), L(1),
          {{Rat(1), {set("m", kModeReturnToBase)}}});
      // abandoning a dropped object leaves it in the arena
      cmd("Abandon", conj(in_mode(mode), eq(N("drp"), L(1)), past_limit()), L(1),
          {{Rat(1), {set("m", kModeReturnToBase), add("obj", L(1)), set("drp", 0)}}});
    }
    cmd("Abandon", conj(in_mode(kModeTransit), eq(N("carry"), L(0)), past_limit()), L(1),
        {{Rat(1), {set("m", kModeReturnToBase), set("rch", 0)}}});
    cmd("Abandon",
        conj(in_mode(kModeDeposit), eq(N("carry"), L(0)), gt(N("obj"), L(0)), past_limit()), L(1),
        {{Rat(1), {set("m", kModeReturnToBase)}}});
    cmd("Abandon", conj(in_mode(kModeRecharge), past_limit()), L(1),
        {{Rat(1), {set("m", kModeReturnToBase), set("rch", 0)}}});
  }

  void transit_commands() {
    Expr carrying = conj(in_mode(kModeTransit), eq(N("carry"), L(1)));
    // loaded leg: head for the deposit site at base, x first, with the
    // per-step drop risk
    Rat kept = Rat(1) - p_.drop_prob;
    cmd("Transport", conj(carrying.clone(), gt(N("px"), L(0)), ge(N("b"), N("db"))), L(1),
        airborne({{p_.drop_prob,
                   step_cost({sub("px", L(1)), set("carry", 0), set("drp", 1),
                              set("m", kModeDescend)})},
                  {kept, step_cost({sub("px", L(1))})}}));
    cmd("Transport",
        conj(carrying.clone(), eq(N("px"), L(0)), gt(N("py"), L(0)), ge(N("b"), N("db"))), L(1),
        airborne({{p_.drop_prob,
                   step_cost({sub("py", L(1)), set("carry", 0), set("drp", 1),
                              set("m", kModeDescend)})},
                  {kept, step_cost({sub("py", L(1))})}}));
    cmd("DepositArrive", conj(carrying.clone(), eq(N("px"), L(0)), eq(N("py"), L(0))), L(1),
        {{Rat(1), {set("m", kModeDeposit)}}});

    // unloaded legs: resume point or recharge base
    Expr back = conj(in_mode(kModeTransit), eq(N("carry"), L(0)), eq(N("rch"), L(0)),
                     before_limit());
    cmd("FlyBack", conj(back.clone(), lt(N("px"), N("rx")), ge(N("b"), N("db"))), L(1),
        airborne({{Rat(1), step_cost({add("px", L(1))})}}));
    cmd("FlyBack", conj(back.clone(), gt(N("px"), N("rx")), ge(N("b"), N("db"))), L(1),
        airborne({{Rat(1), step_cost({sub("px", L(1))})}}));
    cmd("FlyBack",
        conj(back.clone(), eq(N("px"), N("rx")), lt(N("py"), N("ry")), ge(N("b"), N("db"))), L(1),
        airborne({{Rat(1), step_cost({add("py", L(1))})}}));
    cmd("FlyBack",
        conj(back.clone(), eq(N("px"), N("rx")), gt(N("py"), N("ry")), ge(N("b"), N("db"))), L(1),
        airborne({{Rat(1), step_cost({sub("py", L(1))})}}));
    cmd("ResumeSearch", conj(back.clone(), eq(N("px"), N("rx")), eq(N("py"), N("ry"))), L(1),
        {{Rat(1), {set("m", kModeSearch)}}});

    Expr home = conj(in_mode(kModeTransit), eq(N("carry"), L(0)), eq(N("rch"), L(1)),
                     before_limit());
    cmd("FlyHome", conj(home.clone(), gt(N("px"), L(0)), ge(N("b"), N("db"))), L(1),
        airborne({{Rat(1), step_cost({sub("px", L(1))})}}));
    cmd("FlyHome", conj(home.clone(), eq(N("px"), L(0)), gt(N("py"), L(0)), ge(N("b"), N("db"))),
        L(1), airborne({{Rat(1), step_cost({sub("py", L(1))})}}));
    cmd("RechargeArrive", conj(home.clone(), eq(N("px"), L(0)), eq(N("py"), L(0))), L(1),
        {{Rat(1), {set("m", kModeRecharge)}}});

    // forced landing when the battery cannot fund the pending leg
    Expr moving_carry = conj(eq(N("carry"), L(1)), disj(gt(N("px"), L(0)), gt(N("py"), L(0))));
    Expr moving_home = conj(eq(N("rch"), L(1)), disj(gt(N("px"), L(0)), gt(N("py"), L(0))));
    Expr moving_back =
        conj(eq(N("rch"), L(0)), disj(ne(N("px"), N("rx")), ne(N("py"), N("ry"))));
    Expr unloaded = conj(eq(N("carry"), L(0)), before_limit(),
                         disj(std::move(moving_home), std::move(moving_back)));
    cmd("BatteryDead",
        conj(in_mode(kModeTransit), lt(N("b"), N("db")),
             disj(std::move(moving_carry), std::move(unloaded))),
        L(1), {{Rat(1), {set("m", kModeEmergencyLanding)}}});
  }

  void deposit_commands() {
    cmd("Deposit", conj(in_mode(kModeDeposit), eq(N("carry"), L(1)), ge(N("b"), N("b_dep"))), L(1),
        airborne({{Rat(1), {set("carry", 0), add("t", N("t_dep")), sub("b", N("b_dep"))}}}));
    cmd("BatteryDead", conj(in_mode(kModeDeposit), eq(N("carry"), L(1)), lt(N("b"), N("b_dep"))),
        L(1), {{Rat(1), {set("m", kModeEmergencyLanding)}}});

    // post-deposit decision via threshold weights
    Expr decided = conj(in_mode(kModeDeposit), eq(N("carry"), L(0)));
    cmd("Continue",
        conj(decided.clone(), gt(N("obj"), L(0)), gt(N("b"), N("b_low")), before_limit()),
        gt(N("b"), N("b_low")), {{Rat(1), {set("m", kModeTransit)}}});
    cmd("RechargeFirst",
        conj(decided.clone(), gt(N("obj"), L(0)), le(N("b"), N("b_low")), before_limit()),
        bin(ExprOp::Sub, L(1), gt(N("b"), N("b_low"))),
        {{Rat(1), {set("m", kModeRecharge)}}});
    cmd("MissionDone", conj(decided.clone(), eq(N("obj"), L(0))), L(1),
        {{Rat(1), {set("m", kModeReturnToBase)}}});
  }

  void return_commands() {
    cmd("Return", conj(in_mode(kModeReturnToBase), gt(N("px"), L(0)), ge(N("b"), N("db"))), L(1),
        airborne({{Rat(1), step_cost({sub("px", L(1))})}}));
    cmd("Return",
        conj(in_mode(kModeReturnToBase), eq(N("px"), L(0)), gt(N("py"), L(0)), ge(N("b"), N("db"))),
        L(1), airborne({{Rat(1), step_cost({sub("py", L(1))})}}));
    cmd("Land", conj(in_mode(kModeReturnToBase), eq(N("px"), L(0)), eq(N("py"), L(0))), L(1),
        {{Rat(1), {set("m", kModeMissionComplete)}}});
    cmd("BatteryDead",
        conj(in_mode(kModeReturnToBase), lt(N("b"), N("db")),
             disj(gt(N("px"), L(0)), gt(N("py"), L(0)))),
        L(1), {{Rat(1), {set("m", kModeEmergencyLanding)}}});
  }

  const ScenarioParams& p_;
  Model m_;
};

}  // namespace

std::string generate_model(const ScenarioParams& p) {
  p.check();
  double estimate = static_cast<double>(p.width) * p.height * static_cast<double>(p.time_limit) *
                    static_cast<double>(p.battery_capacity);
  if (estimate > static_cast<double>(p.state_budget))
    throw ModelError("budget-exceeded",
                     "estimated state count " + std::to_string(estimate) + " exceeds budget " +
                         std::to_string(p.state_budget));
  Gen gen(p);
  return print_model(gen.build());
}

}  // namespace apfsm
