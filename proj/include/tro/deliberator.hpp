#pragma once

// The executive. Each tick selects the top goal, plans or adopts an override,
// runs one behavior at a time against the simulator and watches the safety
// envelope. Every state change is written as an event and folded in by the
// same reducer replay uses, so the live world and a replayed log agree.

#include <cmath>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "tro/acoustic.hpp"
#include "tro/behaviors_library.hpp"
#include "tro/coverage.hpp"
#include "tro/error.hpp"
#include "tro/events.hpp"
#include "tro/geometry.hpp"
#include "tro/json_io.hpp"
#include "tro/planner.hpp"
#include "tro/safety.hpp"
#include "tro/stores.hpp"
#include "tro/vehicle_sim.hpp"

namespace tro {

struct ExecutiveConfig {
  double observe_radius_m = 10.0;  // at(wp) is observed true inside this radius
  double safe_depth_margin_m = 20.0;
  double retreat_margin_m = 10.0;
  PlannerOptions planner;
};

struct CoverageSetting {
  double spacing_m = kDefaultSurveySpacing;
  double heading_deg = 0.0;
};

// Mutations submitted from other threads. They are applied by the executive
// at the start of its next tick.
struct GoalRequest {
  Conjunction condition;
  Priority priority = Priority::operator_;
  GoalSource source = GoalSource::operator_;
};
struct OverrideRequest {
  std::uint64_t goal_id = 0;
  std::vector<std::string> steps;
};
struct BindingRequest {
  Symbol symbol;
  ConcreteValue value;
};
struct AbortRequest {
  GoalSource source = GoalSource::operator_;
};
struct AcousticRequest {
  acoustic::Command command;
};
using Request = std::variant<GoalRequest, OverrideRequest, BindingRequest, AbortRequest, AcousticRequest>;

inline const char* request_name(const Request& r) {
  static constexpr const char* names[] = {"inject_goal", "override_plan", "set_binding", "abort", "acoustic_send"};
  return names[r.index()];
}

struct RequestResult {
  bool ok = true;
  int status = 202;
  Json body = Json::object();
};

class Executive {
 public:
  Executive(sim::EnvironmentSpec env, sim::VehicleState start, SafetyEnvelope safety, ExecutiveConfig cfg = {})
      : env_(std::move(env)), vehicle_(start), safety_(std::move(safety)), cfg_(cfg) {
    safety_.validate();
    env_.bathymetry.validate();
    bind(Symbol("safe_depth"), Scalar{safety_.max_depth_m - cfg_.safe_depth_margin_m, Unit::meters});
    assert_fact(Atom(Symbol("depth_limit"), {Symbol("max_depth")}), true);
    if (safety_.min_altitude_m) assert_fact(Atom(Symbol("depth_limit"), {Symbol("min_altitude")}), true);
    for (const auto& z : safety_.keep_out) {
      bind(z.name, z.polygon);
      assert_fact(Atom(Symbol("keep_out_zone"), {z.name}), true);
    }
  }

  Executive(const Executive&) = delete;
  Executive& operator=(const Executive&) = delete;

  // Setup and direct control. Call these from the executive's own thread;
  // other threads go through submit().

  void load_module(const std::string& name) {
    for (const auto& spec : behavior_module(name)) register_behavior(spec);
  }

  std::uint64_t register_behavior(const BehaviorSpec& spec) {
    emit("behavior_registered", Json{{"spec", to_json(spec)}});
    return world_.kb.behaviors.at(spec.name).id;
  }

  std::uint64_t bind(const Symbol& symbol, const ConcreteValue& value) {
    validate(value);
    emit("binding_changed", Json{{"symbol", symbol.name()}, {"value", to_json(value)}});
    const auto version = world_.kb.numerics.resolve(symbol)->version;
    if (std::holds_alternative<Polygon>(value)) {
      const auto* survey = world_.kb.behaviors.find(Symbol(survey_name(symbol)));
      if (survey && survey->spec.origin == Origin::synthesized) resynthesize(symbol);
    }
    return version;
  }

  void assert_fact(const Atom& atom, bool truth, Provenance prov = Provenance::inferred) {
    emit("fact_asserted", Json{{"atom", atom.str()}, {"truth", truth}, {"provenance", provenance_name(prov)}});
  }

  void set_coverage(const Symbol& zone, CoverageSetting s) { coverage_.insert_or_assign(zone, s); }

  std::uint64_t inject_goal(const Conjunction& condition, Priority priority,
                            GoalSource source = GoalSource::operator_) {
    if (condition.empty()) throw MalformedGoal("goal condition is empty");
    const auto id = world_.exec.next_goal_id;
    emit("goal_injected", Json{{"id", id},
                               {"condition", condition.str()},
                               {"priority", priority_name(priority)},
                               {"source", source_name(source)}});
    for (const auto& lit : condition.literals()) {
      const auto& a = lit.atom;
      if (!lit.positive || a.predicate.name() != "did_survey" || a.args.size() != 1) continue;
      if (world_.kb.numerics.resolve_as<Polygon>(a.args[0]) && !world_.kb.behaviors.find(Symbol(survey_name(a.args[0]))))
        resynthesize(a.args[0]);
    }
    return id;
  }

  // Operator authority: a failing verdict is reported, not enforced.
  PlanVerdict override_plan(std::uint64_t goal_id, const std::vector<PlanStep>& steps) {
    const auto& x = world_.exec;
    auto it = x.goals.find(goal_id);
    if (it == x.goals.end() || !it->second.open()) throw UnknownGoal("no open goal " + std::to_string(goal_id));
    Plan plan;
    plan.goal_id = goal_id;
    plan.created_at = now();
    plan.provenance = PlanProvenance::operator_override;
    for (auto s : steps) {
      world_.kb.behaviors.at(s.behavior);
      s.status = StepStatus::pending;
      plan.cost_s += world_.kb.assessments.estimate_cost(s.behavior).duration_s;
      plan.steps.push_back(std::move(s));
    }
    const PlanVerdict verdict = validate_plan(plan, state(), it->second.condition, world_.kb.behaviors);
    const bool active = x.active_goal == goal_id;
    if (active && x.running) halt("plan overridden");
    emit("plan_overridden", Json{{"goal_id", goal_id}, {"active", active}, {"plan", to_json(plan)},
                                 {"verdict", to_json(verdict)}});
    return verdict;
  }

  PlanVerdict override_plan(std::uint64_t goal_id, const std::vector<std::string>& steps) {
    std::vector<PlanStep> parsed;
    for (const auto& s : steps) parsed.push_back(parse_step(s, world_.kb.behaviors));
    return override_plan(goal_id, parsed);
  }

  std::uint64_t replace_implementation(const Symbol& name, const Implementation& impl,
                                       Origin origin = Origin::operator_) {
    const auto& entry = world_.kb.behaviors.at(name);
    emit("behavior_replaced", Json{{"name", name.name()}, {"implementation", to_json(impl)},
                                   {"origin", origin_name(origin)}, {"version", entry.version + 1}});
    return world_.kb.behaviors.at(name).version;
  }

  // Abandons every open non-safety goal and asks for recovery.
  std::uint64_t abort_to_recovery(GoalSource source = GoalSource::operator_) {
    std::vector<std::uint64_t> ids;
    for (const auto& [id, g] : world_.exec.goals)
      if (g.open() && g.priority != Priority::safety) ids.push_back(id);
    for (auto id : ids) abandon(id, "aborted to recovery");
    return inject_goal(Conjunction{parse_literal("ready_for_recovery()")}, Priority::operator_, source);
  }

  void set_channel(acoustic::ChannelModel model) { link_.emplace(model); }

  // Stored plans that an override_plan_ref frame can point at.
  void set_stored_plans(std::vector<std::vector<std::string>> plans) { stored_plans_ = std::move(plans); }

  // Sends through the channel now; copies reach the executive at their
  // arrival times.
  acoustic::TransmitResult send_acoustic(const acoustic::Command& cmd) {
    if (!link_) throw InvalidCommand("no acoustic channel configured");
    auto r = link_->transmit(cmd, now());
    for (double at : r.arrivals) inbound_.emplace(at, r.bytes);
    emit("acoustic_sent", Json{{"seq", r.seq},
                               {"kind", acoustic::kind_name(acoustic::kind_of(cmd))},
                               {"bytes", r.bytes.size()}});
    return r;
  }

  // Thread-safe.
  std::future<RequestResult> submit(Request r) {
    std::promise<RequestResult> p;
    auto f = p.get_future();
    std::lock_guard lk(queue_mu_);
    queue_.push_back(Pending{std::move(r), std::move(p)});
    return f;
  }

  // Tick ------------------------------------------------------------------------

  std::vector<Event> tick(double dt = 1.0) {
    const std::size_t first = events_.size();
    vehicle_ = sim::step(vehicle_, env_, std::nullopt, dt);
    ingest();
    observe();
    check_envelope();
    report_mismatches();
    select_and_plan();
    advance();
    settle_active_goal();
    update_mode();
    const auto& x = world_.exec;
    const auto& p = vehicle_.position;
    emit("tick", Json{{"tick", x.tick_count + 1},
                      {"mode", mode_name(x.mode)},
                      {"goal", x.active_goal ? Json(*x.active_goal) : Json(nullptr)},
                      {"step", x.running ? Json(x.running->index) : Json(nullptr)},
                      {"x", p.x},
                      {"y", p.y},
                      {"depth", p.depth},
                      {"battery", vehicle_.battery_wh}});
    if (on_tick_) on_tick_(*this);
    return {events_.begin() + static_cast<std::ptrdiff_t>(first), events_.end()};
  }

  bool quiescent() const {
    const auto& x = world_.exec;
    for (const auto& [id, g] : x.goals)
      if (g.open()) return false;
    std::lock_guard lk(queue_mu_);
    return inbound_.empty() && queue_.empty() && !x.running;
  }

  // Ticks until nothing is left to do; returns the number of ticks run.
  std::size_t run(std::size_t max_ticks, double dt = 1.0) {
    std::size_t n = 0;
    while (n < max_ticks && !quiescent()) {
      tick(dt);
      ++n;
    }
    return n;
  }

  // The plan the next tick would adopt for the top goal, without running
  // anything. Throws Unsolvable like the planner.
  std::optional<Plan> preview_plan() const {
    const auto top = top_goal();
    if (!top) return std::nullopt;
    const auto& x = world_.exec;
    if (x.active_goal == top && x.active_plan) return x.active_plan;
    if (auto it = x.overrides.find(*top); it != x.overrides.end()) return it->second;
    Plan p = make_plan(goal(*top).condition, state(), world_.kb, cfg_.planner);
    p.goal_id = *top;
    p.created_at = now();
    return p;
  }

  // Accessors ----------------------------------------------------------------------

  const World& world() const { return world_; }
  const sim::VehicleState& vehicle() const { return vehicle_; }
  const sim::EnvironmentSpec& environment() const { return env_; }
  const SafetyEnvelope& safety() const { return safety_; }
  const std::vector<Event>& events() const { return events_; }
  double now() const { return vehicle_.t; }
  std::string digest() const { return world_digest(world_); }
  // Sequence numbers of acoustic frames applied, in order.
  const std::vector<std::uint8_t>& acoustic_applied() const { return acoustic_applied_; }

  // Thread-safe copy of the log lines with seq > `since`.
  std::vector<std::string> lines_since(std::uint64_t since) const {
    std::lock_guard lk(lines_mu_);
    if (since >= lines_.size()) return {};
    return {lines_.begin() + static_cast<std::ptrdiff_t>(since), lines_.end()};
  }

  void set_log(std::ostream* out) { log_ = out; }
  void on_tick(std::function<void(const Executive&)> cb) { on_tick_ = std::move(cb); }

 private:
  struct Pending {
    Request request;
    std::promise<RequestResult> reply;
  };

  // Termination of the child currently running, with references resolved.
  struct ChildRuntime {
    TerminationCond cond;
    std::optional<geo::Vec2> goto_target;
    double target = 0.0;  // depth target or altitude threshold
    double timeout_s = 0.0;
  };

  enum class Progress { running, done, timed_out };

  // Event plumbing -------------------------------------------------------------------

  void emit(const std::string& kind, Json data) {
    const Event e{world_.exec.last_seq + 1, now(), kind, std::move(data)};
    std::string line = event_line(e);
    Event parsed = parse_event_line(line);
    apply_event(world_, parsed);
    if (log_) *log_ << line << '\n';
    {
      std::lock_guard lk(lines_mu_);
      lines_.push_back(std::move(line));
    }
    events_.push_back(std::move(parsed));
  }

  AtomSet state() const { return world_.kb.beliefs.state(); }

  const Goal& goal(std::uint64_t id) const { return world_.exec.goals.at(id); }

  // Ingest -----------------------------------------------------------------------------

  void ingest() {
    std::deque<Pending> batch;
    {
      std::lock_guard lk(queue_mu_);
      batch.swap(queue_);
    }
    for (auto& p : batch) p.reply.set_value(handle(p.request));
    while (!inbound_.empty() && inbound_.begin()->first <= now() + 1e-9) {
      const auto bytes = inbound_.begin()->second;
      inbound_.erase(inbound_.begin());
      deliver_frame(bytes);
    }
  }

  RequestResult handle(const Request& req) {
    try {
      if (const auto* g = std::get_if<GoalRequest>(&req))
        return {true, 202, Json{{"goal_id", inject_goal(g->condition, g->priority, g->source)}}};
      if (const auto* o = std::get_if<OverrideRequest>(&req)) {
        const auto v = override_plan(o->goal_id, o->steps);
        return {true, 202, Json{{"goal_id", o->goal_id}, {"verdict", to_json(v)}}};
      }
      if (const auto* b = std::get_if<BindingRequest>(&req))
        return {true, 202, Json{{"symbol", b->symbol.name()}, {"version", bind(b->symbol, b->value)}}};
      if (const auto* a = std::get_if<AbortRequest>(&req))
        return {true, 202, Json{{"goal_id", abort_to_recovery(a->source)}}};
      const auto r = send_acoustic(std::get<AcousticRequest>(req).command);
      Json arrivals = Json::array();
      for (double t : r.arrivals) arrivals.push_back(t);
      return {true, 202, Json{{"seq", r.seq}, {"status", acoustic::status_name(r.status)}, {"attempts", r.attempts},
                              {"retries", r.retries}, {"arrivals", arrivals}}};
    } catch (const UnknownGoal& e) {
      reject(request_name(req), e.what());
      return {false, 404, Json{{"error", e.what()}}};
    } catch (const Error& e) {
      reject(request_name(req), e.what());
      return {false, 400, Json{{"error", e.what()}}};
    }
  }

  void reject(const std::string& command, const std::string& reason) {
    emit("command_rejected", Json{{"command", command}, {"reason", reason}});
  }

  void deliver_frame(const std::vector<std::uint8_t>& bytes) {
    std::optional<acoustic::Frame> frame;
    try {
      frame = acoustic::decode_frame(bytes);
    } catch (const DecodeError& e) {
      emit("warning", Json{{"code", "acoustic_decode"}, {"message", e.what()}});
      return;
    }
    if (!receiver_.accept(frame->seq)) {
      emit("warning", Json{{"code", "acoustic_duplicate"}, {"message", "duplicate frame ignored"}, {"seq", frame->seq}});
      return;
    }
    acoustic_applied_.push_back(frame->seq);
    try {
      const auto& c = frame->command;
      if (const auto* g = std::get_if<acoustic::InjectGoal>(&c)) {
        inject_goal(g->condition, g->priority, GoalSource::acoustic);
      } else if (const auto* o = std::get_if<acoustic::OverridePlanRef>(&c)) {
        if (o->plan_index >= stored_plans_.size())
          throw InvalidCommand("no stored plan " + std::to_string(o->plan_index));
        override_plan(o->goal_id, stored_plans_[o->plan_index]);
      } else if (std::holds_alternative<acoustic::AbortToRecovery>(c)) {
        abort_to_recovery(GoalSource::acoustic);
      } else if (const auto* b = std::get_if<acoustic::SetBinding>(&c)) {
        bind(b->symbol, b->point);
      }
    } catch (const Error& e) {
      reject(acoustic::kind_name(acoustic::kind_of(frame->command)), e.what());
    }
  }

  // Observation and monitoring --------------------------------------------------------

  // at(p) for every Point binding, asserted on change only.
  void observe() {
    const geo::Vec2 here = vehicle_.position.xy();
    std::vector<std::pair<Symbol, bool>> updates;
    for (const auto& [sym, hist] : world_.kb.numerics.history()) {
      const auto* p = std::get_if<Point>(&hist.back().value);
      if (!p) continue;
      const bool truth = geo::norm(p->xy() - here) <= cfg_.observe_radius_m;
      const auto* e = world_.kb.beliefs.find(Atom(Symbol("at"), {sym}));
      const bool changed = (e && e->observed) ? e->observed->truth != truth : (truth || e != nullptr);
      if (changed) updates.emplace_back(sym, truth);
    }
    for (const auto& [sym, truth] : updates) assert_fact(Atom(Symbol("at"), {sym}), truth, Provenance::observed);
  }

  void check_envelope() {
    const auto found = check_safety(vehicle_, safety_);
    std::set<std::string> current;
    for (const auto& v : found) {
      current.insert(v.symbol.name());
      if (!world_.exec.violations.count(v.symbol.name())) respond(v);
    }
    std::vector<std::string> cleared;
    for (const auto& s : world_.exec.violations)
      if (!current.count(s)) cleared.push_back(s);
    for (const auto& s : cleared) {
      emit("safety_cleared", Json{{"symbol", s}});
      assert_fact(Atom(Symbol("violated"), {Symbol(s)}), false, Provenance::observed);
    }
  }

  void respond(const Violation& v) {
    const auto& x = world_.exec;
    const bool safety_running = x.active_goal && goal(*x.active_goal).priority == Priority::safety;
    if (x.running && !safety_running) halt("safety: " + v.str());
    const auto& p = vehicle_.position;
    emit("safety_violation", Json{{"symbol", v.symbol.name()}, {"kind", violation_kind_name(v.kind)},
                                  {"margin", v.margin}, {"description", v.str()}, {"x", p.x}, {"y", p.y},
                                  {"depth", p.depth}});
    assert_fact(Atom(Symbol("violated"), {v.symbol}), true, Provenance::observed);

    Conjunction want;
    switch (v.kind) {
      case ViolationKind::keep_out: {
        for (const auto& z : safety_.keep_out)
          if (z.name == v.symbol) bind(Symbol("retreat_point"), retreat_point(z.polygon));
        want.add(Literal{Atom(Symbol("violated"), {v.symbol}), false});
        break;
      }
      case ViolationKind::depth_exceeded:
        bind(Symbol("safe_depth"), Scalar{safety_.max_depth_m - cfg_.safe_depth_margin_m, Unit::meters});
        want.add(Literal{Atom(Symbol("violated"), {v.symbol}), false});
        break;
      case ViolationKind::altitude_low:
        bind(Symbol("safe_depth"), Scalar{std::max(0.0, p.depth - v.margin - cfg_.safe_depth_margin_m), Unit::meters});
        want.add(Literal{Atom(Symbol("violated"), {v.symbol}), false});
        break;
      case ViolationKind::battery_low: {
        std::vector<std::uint64_t> ids;
        for (const auto& [id, g] : x.goals)
          if (g.open() && g.priority != Priority::safety) ids.push_back(id);
        for (auto id : ids) abandon(id, "battery below floor");
        want.add(parse_literal("ready_for_recovery()"));
        break;
      }
    }
    for (const auto& [id, g] : x.goals)
      if (g.open() && g.priority == Priority::safety && g.condition == want) return;
    inject_goal(want, Priority::safety, GoalSource::internal);
  }

  Point retreat_point(const Polygon& zone) const {
    const geo::Vec2 here = vehicle_.position.xy();
    const geo::Vec2 edge = geo::closest_boundary_point(zone.vertices, here);
    geo::Vec2 dir = edge - here;
    if (geo::norm(dir) < 1e-9) dir = edge - geo::centroid(zone.vertices);
    const double n = geo::norm(dir);
    const geo::Vec2 out = n < 1e-9 ? edge : edge + dir * (cfg_.retreat_margin_m / n);
    return Point{out.x, out.y, vehicle_.position.depth};
  }

  // Whether the rest of the active plan is valid from `from`. A running step
  // counts as finishing with its declared effects.
  bool remaining_valid(const AtomSet& from) const {
    const auto& x = world_.exec;
    if (!x.active_plan || !x.active_goal) return true;
    AtomSet s = from;
    Plan rest;
    for (const auto& st : x.active_plan->steps) {
      if (st.status == StepStatus::running) {
        if (const auto* e = world_.kb.behaviors.find(st.behavior))
          apply_effects(s, e->spec, st.substitution, x.running ? x.running->deps_held : true);
      } else if (st.status == StepStatus::pending) {
        rest.steps.push_back(st);
      }
    }
    try {
      return validate_plan(rest, s, goal(*x.active_goal).condition, world_.kb.behaviors).ok;
    } catch (const Error&) {
      return false;
    }
  }

  void report_mismatches() {
    const auto found = world_.kb.beliefs.detect_mismatches();
    std::optional<bool> relevant;
    for (const auto& m : found) {
      if (world_.exec.mismatches.count(m.atom.str())) continue;
      if (!relevant) relevant = remaining_valid(world_.kb.beliefs.inferred_state()) && !remaining_valid(state());
      emit("mismatch_detected", Json{{"atom", m.atom.str()}, {"inferred", m.inferred.truth},
                                     {"observed", m.observed.truth}, {"relevant", *relevant}});
    }
  }

  // Goal selection and planning -------------------------------------------------------

  // Lowest priority number wins; among equals the latest injection.
  std::optional<std::uint64_t> top_goal() const {
    std::optional<std::uint64_t> best;
    for (const auto& [id, g] : world_.exec.goals) {
      if (!g.open()) continue;
      if (!best || static_cast<int>(g.priority) <= static_cast<int>(goal(*best).priority)) best = id;
    }
    return best;
  }

  // Empty when the active plan can keep running.
  std::string plan_problem() const {
    const auto& x = world_.exec;
    if (x.plan_stale) return "stale after a mismatch or replacement";
    Plan rest;
    std::size_t first = 0;
    bool found = false;
    for (std::size_t i = 0; i < x.active_plan->steps.size(); ++i) {
      if (x.active_plan->steps[i].status != StepStatus::pending) continue;
      if (!found) first = i;
      found = true;
      rest.steps.push_back(x.active_plan->steps[i]);
    }
    if (!found) return "plan finished without achieving the goal";
    if (x.active_plan->provenance == PlanProvenance::planned) {
      try {
        const auto v = validate_plan(rest, state(), goal(*x.active_goal).condition, world_.kb.behaviors);
        if (!v.ok) {
          const auto at = *v.step < rest.steps.size() ? std::to_string(first + *v.step) : std::string("goal");
          return "step " + at + " no longer valid: " + v.literal.value_or("?");
        }
      } catch (const Error& e) {
        return e.what();
      }
    }
    return {};
  }

  void select_and_plan() {
    const auto& x = world_.exec;
    for (int guard = 0; guard < 64; ++guard) {
      const auto top = top_goal();
      if (!top) return;
      if (x.active_goal && *x.active_goal != *top) {
        const auto old = *x.active_goal;
        const std::string why = "preempted by goal " + std::to_string(*top);
        if (x.running) halt(why);
        if (x.active_plan) emit("plan_dropped", Json{{"goal_id", old}, {"reason", why}});
      }
      if (x.active_goal != *top || goal(*top).status == GoalStatus::pending)
        emit("goal_status", Json{{"id", *top}, {"status", "active"}, {"reason", ""}});
      const Goal& g = goal(*top);
      if (x.running) return;
      if (entails(state(), g.condition)) {
        emit("goal_status", Json{{"id", g.id}, {"status", "achieved"}, {"reason", ""}});
        continue;
      }
      bool repair = false;
      if (x.active_plan) {
        const std::string why = plan_problem();
        if (why.empty()) return;
        emit("plan_dropped", Json{{"goal_id", g.id}, {"reason", why}});
        repair = true;
      }
      if (x.mode == Mode::safety_hold && x.hold_version == world_.kb.version) return;
      if (auto it = x.overrides.find(g.id); it != x.overrides.end()) {
        Plan p = it->second;
        p.created_at = now();
        emit("plan_created", Json{{"goal_id", g.id}, {"plan", to_json(p)}, {"repair", repair}});
        return;
      }
      std::string reason;
      try {
        Plan p = make_plan(g.condition, state(), world_.kb, cfg_.planner);
        p.goal_id = g.id;
        p.created_at = now();
        emit("plan_created", Json{{"goal_id", g.id}, {"plan", to_json(p)}, {"repair", repair}});
        return;
      } catch (const Unsolvable& e) {
        reason = std::string("unsolvable: ") + e.what();
        for (const auto& l : e.literals()) reason += " " + l;
      } catch (const Error& e) {
        reason = std::string("planning failed: ") + e.what();
      }
      if (g.priority == Priority::safety) {
        enter_hold(g.id, reason);
        return;
      }
      emit("goal_status", Json{{"id", g.id}, {"status", "abandoned"}, {"reason", reason}});
    }
  }

  void enter_hold(std::uint64_t goal_id, const std::string& reason) {
    emit("warning", Json{{"code", "safety_goal_unsolvable"}, {"goal_id", goal_id}, {"message", reason}});
    emit("mode_changed", Json{{"mode", "safety_hold"}, {"version", world_.kb.version}});
    all_stop();
  }

  void update_mode() {
    const auto& x = world_.exec;
    Mode want = x.active_goal ? Mode::executing : Mode::idle;
    if (x.mode == Mode::safety_hold && !x.active_plan) {
      const auto top = top_goal();
      if (top && goal(*top).priority == Priority::safety) want = Mode::safety_hold;
    }
    if (want != x.mode) emit("mode_changed", Json{{"mode", mode_name(want)}, {"version", world_.kb.version}});
  }

  void settle_active_goal() {
    const auto& x = world_.exec;
    if (!x.active_goal || x.running) return;
    const Goal& g = goal(*x.active_goal);
    if (g.open() && entails(state(), g.condition))
      emit("goal_status", Json{{"id", g.id}, {"status", "achieved"}, {"reason", ""}});
  }

  void abandon(std::uint64_t id, const std::string& reason) {
    const auto& x = world_.exec;
    if (x.active_goal == id && x.running) halt(reason);
    emit("goal_status", Json{{"id", id}, {"status", "abandoned"}, {"reason", reason}});
  }

  // Execution ---------------------------------------------------------------------------

  void advance() {
    const auto& x = world_.exec;
    if (!x.active_plan || !x.active_goal) return;
    if (!x.running) {
      std::optional<std::size_t> next;
      for (std::size_t i = 0; i < x.active_plan->steps.size() && !next; ++i)
        if (x.active_plan->steps[i].status == StepStatus::pending) next = i;
      if (!next || !dispatch(*next)) return;
    }
    while (x.running && child_rt_) {
      const Progress p = progress();
      if (p == Progress::running) return;
      if (p == Progress::timed_out) {
        fail("child " + std::to_string(x.running->child) + " timed out");
        return;
      }
      const auto child = static_cast<std::size_t>(x.running->child);
      emit_outcome("behavior_done", child, std::nullopt);
      if (child + 1 < children_.size()) {
        if (!start_child(child + 1)) return;
        continue;
      }
      complete_step();
    }
  }

  bool dispatch(std::size_t index) {
    const auto& x = world_.exec;
    const PlanStep step = x.active_plan->steps[index];
    const auto& behaviors = world_.kb.behaviors;
    step_battery_ = vehicle_.battery_wh;
    const auto* entry = behaviors.find(step.behavior);
    if (!entry) {
      fail_unstarted(index, step, "behavior " + step.behavior.name() + " is not registered");
      return false;
    }
    const BehaviorSpec spec = entry->spec;
    const AtomSet s = state();
    std::vector<PlanStep> children;
    try {
      const Conjunction pre = ground(spec.preconditions, step.substitution);
      for (const auto& lit : pre.literals())
        if (s.count(lit.atom) != static_cast<std::size_t>(lit.positive)) {
          fail_unstarted(index, step, "precondition " + lit.str() + " does not hold");
          return false;
        }
      children = expand_composite(behaviors, step.behavior, step.substitution);
    } catch (const Error& e) {
      fail_unstarted(index, step, e.what());
      return false;
    }
    Json texts = Json::array();
    for (const auto& c : children) texts.push_back(step_text(c, behaviors));
    emit("behavior_started", Json{{"goal_id", *x.active_goal},
                                  {"step", index},
                                  {"child", -1},
                                  {"behavior", step_text(step, behaviors)},
                                  {"behavior_name", step.behavior.name()},
                                  {"children", texts},
                                  {"deps_held", dependencies_hold(s, spec, step.substitution)}});
    children_ = std::move(children);
    child_rt_.reset();
    if (children_.empty()) {
      complete_step();
      return false;
    }
    return start_child(0);
  }

  double resolve_number(const std::optional<Term>& ref, double fallback, const Substitution& sub) const {
    if (!ref) return fallback;
    const Symbol sym = resolve_term(*ref, sub);
    const auto* b = world_.kb.numerics.resolve(sym);
    if (!b) throw UnboundSymbol({sym.name()});
    if (const auto* sc = std::get_if<Scalar>(&b->value)) return sc->value;
    if (const auto* pt = std::get_if<Point>(&b->value)) return pt->depth;
    throw InvalidValue(sym.name() + " is not bound to a scalar or point");
  }

  std::pair<std::optional<sim::ActuationCmd>, Json> resolve_command(const BehaviorSpec& spec,
                                                                     const Substitution& sub) const {
    const auto& tmpl = std::get<Primitive>(spec.implementation).command;
    auto arg = [&]() {
      if (!tmpl.arg) throw InvalidCommand(spec.name.name() + ": command needs an argument");
      return resolve_term(*tmpl.arg, sub);
    };
    using K = ActuationKind;
    switch (tmpl.kind) {
      case K::none:
        return {std::nullopt, Json{{"type", "none"}}};
      case K::goto_point: {
        const Symbol target = arg();
        const auto* p = world_.kb.numerics.resolve_as<Point>(target);
        if (!p) throw UnboundSymbol({target.name()});
        return {sim::GotoCmd{p->xy(), tmpl.speed_mps},
                Json{{"type", "goto"}, {"target", target.name()}, {"x", p->x}, {"y", p->y}, {"speed", tmpl.speed_mps}}};
      }
      case K::set_fins: {
        const auto f = sim::parse_fins(arg().name());
        return {sim::SetFinsCmd{f}, Json{{"type", "set_fins"}, {"fins", sim::fins_name(f)}}};
      }
      case K::drop_weights: {
        const auto w = sim::parse_weights(arg().name());
        return {sim::DropWeightsCmd{w}, Json{{"type", "drop_weights"}, {"which", sim::weight_name(w)}}};
      }
      case K::set_thruster_mode: {
        const auto name = arg().name();
        const auto m = name == "on" ? sim::ThrusterMode::vertical : sim::parse_thruster(name);
        return {sim::SetThrusterCmd{m}, Json{{"type", "set_thruster_mode"}, {"mode", sim::thruster_name(m)}}};
      }
      case K::hold_station:
        return {sim::HoldStationCmd{}, Json{{"type", "hold_station"}}};
      case K::all_stop:
        return {sim::AllStopCmd{}, Json{{"type", "all_stop"}}};
    }
    throw InvalidCommand("unknown command kind");
  }

  // Live-only timeouts; they scale with the work the child has to do.
  ChildRuntime resolve_termination(const BehaviorSpec& spec, const Substitution& sub,
                                   const std::optional<sim::ActuationCmd>& cmd) const {
    ChildRuntime rt{spec.termination, std::nullopt, 0.0, 0.0};
    const auto* go = cmd ? std::get_if<sim::GotoCmd>(&*cmd) : nullptr;
    if (go) rt.goto_target = go->target;
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ReachedWaypoint>) {
            if (!go) throw InvalidBehavior(spec.name.name() + ": reached_waypoint without a goto command");
            const double dist = geo::norm(go->target - vehicle_.position.xy());
            rt.timeout_s = 3.0 * dist / go->speed_mps + 120.0;
          } else if constexpr (std::is_same_v<T, DepthWithin>) {
            rt.target = resolve_number(t.target_ref, t.target_m, sub);
            rt.timeout_s = 2.0 * std::abs(rt.target - vehicle_.position.depth) / 0.1 + 600.0;
          } else if constexpr (std::is_same_v<T, DvlAltitudeBelow>) {
            rt.target = resolve_number(t.threshold_ref, t.threshold_m, sub);
            rt.timeout_s = 3600.0;
          } else if constexpr (std::is_same_v<T, Elapsed>) {
            rt.timeout_s = t.seconds + 10.0;
          } else {
            rt.timeout_s = 0.0;
          }
        },
        spec.termination);
    return rt;
  }

  bool start_child(std::size_t i) {
    const auto& x = world_.exec;
    const PlanStep c = children_[i];
    const auto& behaviors = world_.kb.behaviors;
    std::optional<sim::ActuationCmd> cmd;
    Json cmd_json;
    ChildRuntime rt;
    try {
      const BehaviorSpec spec = behaviors.at(c.behavior).spec;
      std::tie(cmd, cmd_json) = resolve_command(spec, c.substitution);
      rt = resolve_termination(spec, c.substitution, cmd);
    } catch (const Error& e) {
      fail("cannot start " + step_text(c, behaviors) + ": " + e.what());
      return false;
    }
    emit("behavior_started", Json{{"goal_id", *x.active_goal},
                                  {"step", x.running->index},
                                  {"child", i},
                                  {"behavior", step_text(c, behaviors)},
                                  {"behavior_name", c.behavior.name()},
                                  {"command", cmd_json}});
    if (cmd) {
      try {
        const auto r = sim::apply_command(vehicle_, *cmd, env_.vehicle);
        vehicle_ = r.state;
        if (r.warning) emit("warning", Json{{"code", "actuation"}, {"message", *r.warning}});
      } catch (const InvalidCommand& e) {
        fail(e.what());
        return false;
      }
    }
    child_rt_ = rt;
    return true;
  }

  Progress progress() const {
    const auto& r = *world_.exec.running;
    const auto& rt = *child_rt_;
    const double elapsed = now() - r.child_started_at;
    const auto& v = vehicle_;
    const bool done = std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ReachedWaypoint>)
            return geo::norm(*rt.goto_target - v.position.xy()) <= t.capture_radius_m;
          else if constexpr (std::is_same_v<T, DepthWithin>)
            return std::abs(v.position.depth - rt.target) <= t.band_m + 1e-9;
          else if constexpr (std::is_same_v<T, DvlAltitudeBelow>)
            return v.dvl_altitude_m.has_value() && *v.dvl_altitude_m < rt.target;
          else if constexpr (std::is_same_v<T, Elapsed>)
            return elapsed >= t.seconds - 1e-9;
          else
            return true;
        },
        rt.cond);
    if (done) return Progress::done;
    return elapsed > rt.timeout_s ? Progress::timed_out : Progress::running;
  }

  // Inferred effects of the top-level step, then its outcome.
  void complete_step() {
    const auto& x = world_.exec;
    const RunningStep r = *x.running;
    const PlanStep step = x.active_plan->steps[r.index];
    const BehaviorSpec spec = world_.kb.behaviors.at(step.behavior).spec;
    for (const auto& d : spec.del) assert_fact(ground(d, step.substitution), false);
    for (const auto& a : spec.add) assert_fact(ground(a, step.substitution), true);
    if (r.deps_held)
      for (const auto& a : spec.conditional_add) assert_fact(ground(a, step.substitution), true);
    emit_outcome("behavior_done", std::nullopt, std::nullopt);
    child_rt_.reset();
  }

  // Outcome event for the running step; `child` empty means the step itself.
  void emit_outcome(const std::string& kind, std::optional<std::size_t> child, std::optional<std::string> reason) {
    const auto& x = world_.exec;
    const auto& r = *x.running;
    const PlanStep& step = x.active_plan->steps[r.index];
    const bool is_child = child.has_value();
    const PlanStep& subject = is_child ? children_[*child] : step;
    Json d{{"goal_id", *x.active_goal},
           {"step", r.index},
           {"child", is_child ? static_cast<int>(*child) : (kind == "behavior_done" ? -1 : r.child)},
           {"behavior", step_text(subject, world_.kb.behaviors)},
           {"behavior_name", step.behavior.name()},
           {"duration", now() - (is_child ? r.child_started_at : r.started_at)},
           {"energy", step_battery_ - vehicle_.battery_wh}};
    if (reason) d["reason"] = *reason;
    emit(kind, std::move(d));
  }

  void halt(const std::string& reason) {
    emit_outcome("behavior_halted", std::nullopt, reason);
    child_rt_.reset();
    all_stop();
  }

  void fail(const std::string& reason) {
    emit_outcome("behavior_failed", std::nullopt, reason);
    child_rt_.reset();
    all_stop();
  }

  void fail_unstarted(std::size_t index, const PlanStep& step, const std::string& reason) {
    const auto* e = world_.kb.behaviors.find(step.behavior);
    emit("behavior_failed", Json{{"goal_id", *world_.exec.active_goal},
                                 {"step", index},
                                 {"child", -1},
                                 {"behavior", e ? step_text(step, world_.kb.behaviors) : step.behavior.name()},
                                 {"behavior_name", step.behavior.name()},
                                 {"duration", 0.0},
                                 {"energy", 0.0},
                                 {"reason", reason}});
  }

  void all_stop() { vehicle_ = sim::apply_command(vehicle_, sim::AllStopCmd{}, env_.vehicle).state; }

  // Survey synthesis ---------------------------------------------------------------------

  void resynthesize(const Symbol& zone) {
    try {
      const auto* poly = world_.kb.numerics.resolve_as<Polygon>(zone);
      if (!poly) throw UnboundZone("zone " + zone.name() + " is not bound to a polygon");
      CoverageSetting setting;
      if (auto it = coverage_.find(zone); it != coverage_.end()) setting = it->second;
      const auto lines = generate_tracklines(CoverageRequest{*poly, setting.spacing_m, setting.heading_deg, std::nullopt});
      const auto syn = synthesize_survey_behavior(world_.kb.numerics, zone, lines);
      for (const auto& [sym, pt] : syn.waypoints) bind(sym, pt);
      if (world_.kb.behaviors.find(syn.spec.name))
        replace_implementation(syn.spec.name, syn.spec.implementation, Origin::synthesized);
      else
        register_behavior(syn.spec);
    } catch (const Error& e) {
      emit("warning", Json{{"code", "survey_synthesis"}, {"zone", zone.name()}, {"message", e.what()}});
    }
  }

  World world_;
  sim::EnvironmentSpec env_;
  sim::VehicleState vehicle_;
  SafetyEnvelope safety_;
  ExecutiveConfig cfg_;

  std::map<Symbol, CoverageSetting> coverage_;
  std::vector<std::vector<std::string>> stored_plans_;

  std::vector<PlanStep> children_;
  std::optional<ChildRuntime> child_rt_;
  double step_battery_ = 0.0;

  std::optional<acoustic::Link> link_;
  acoustic::Receiver receiver_;
  std::multimap<double, std::vector<std::uint8_t>> inbound_;
  std::vector<std::uint8_t> acoustic_applied_;

  mutable std::mutex queue_mu_;
  std::deque<Pending> queue_;

  std::vector<Event> events_;
  mutable std::mutex lines_mu_;
  std::vector<std::string> lines_;
  std::ostream* log_ = nullptr;
  std::function<void(const Executive&)> on_tick_;
};

}  // namespace tro
