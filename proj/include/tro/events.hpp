#pragma once

// Event log records and the pure reducer that folds them into the stores and
// the executive state. Live runs and replay go through the same reducer, so
// a replayed log reproduces the live state exactly. Nothing here depends on
// the vehicle simulator.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tro/error.hpp"
#include "tro/json_io.hpp"
#include "tro/planner.hpp"
#include "tro/stores.hpp"

namespace tro {

struct Event {
  std::uint64_t seq = 0;
  double t = 0.0;
  std::string kind;
  Json data = Json::object();
};

inline std::string event_line(const Event& e) {
  Json j;
  j["seq"] = e.seq;
  j["t"] = e.t;
  j["kind"] = e.kind;
  j["data"] = e.data;
  return to_canonical(j);
}

inline Event parse_event_line(const std::string& line) {
  const Json j = Json::parse(line);
  if (!j.is_object() || !j.contains("seq") || !j.contains("t") || !j.contains("kind") || !j.contains("data"))
    throw SchemaError("event", "missing seq/t/kind/data");
  if (!j["seq"].is_number_unsigned() || !j["t"].is_number() || !j["kind"].is_string() || !j["data"].is_object())
    throw SchemaError("event", "field of the wrong type");
  return Event{j["seq"].get<std::uint64_t>(), j["t"].get<double>(), j["kind"].get<std::string>(), j["data"]};
}

// Executive state -------------------------------------------------------------

enum class Mode { idle, executing, safety_hold };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::idle: return "idle";
    case Mode::executing: return "executing";
    case Mode::safety_hold: return "safety_hold";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "idle") return Mode::idle;
  if (s == "executing") return Mode::executing;
  if (s == "safety_hold") return Mode::safety_hold;
  throw InvalidValue("unknown mode '" + s + "'");
}

// The plan step currently executing and its expansion into primitives.
struct RunningStep {
  std::size_t index = 0;
  double started_at = 0.0;
  std::vector<std::string> children;
  int child = -1;
  double child_started_at = 0.0;
  bool deps_held = true;
};

struct Telemetry {
  double x = 0.0, y = 0.0, depth = 0.0, battery = 0.0;
};

struct ExecutiveState {
  Mode mode = Mode::idle;
  std::map<std::uint64_t, Goal> goals;
  std::uint64_t next_goal_id = 1;
  std::optional<std::uint64_t> active_goal;
  std::optional<Plan> active_plan;
  std::optional<RunningStep> running;
  std::map<std::uint64_t, Plan> overrides;  // for goals not yet active
  bool plan_stale = false;
  std::set<std::string> violations;  // constraint symbols currently violated
  std::set<std::string> mismatches;  // atoms with a reported mismatch
  std::optional<std::uint64_t> hold_version;
  double sim_clock = 0.0;
  std::uint64_t tick_count = 0;
  std::uint64_t last_seq = 0;
  Telemetry telemetry;

  std::optional<std::size_t> active_step() const {
    if (running) return running->index;
    return std::nullopt;
  }
};

struct World {
  KnowledgeBase kb;
  ExecutiveState exec;
};

// Reducer ------------------------------------------------------------------------

namespace detail {

inline AssessmentRecord outcome_record(const Event& e, Outcome o) {
  return AssessmentRecord{Symbol(e.data.at("behavior_name").get<std::string>()), o, e.data.at("duration").get<double>(),
                          e.data.at("energy").get<double>(), e.t};
}

inline void finish_step(ExecutiveState& x, const Event& e, StepStatus status) {
  const auto idx = e.data.at("step").get<std::size_t>();
  if (!x.active_plan || idx >= x.active_plan->steps.size()) throw InvalidValue("step index out of range");
  x.active_plan->steps[idx].status = status;
  x.running.reset();
}

}  // namespace detail

inline void apply_event(World& w, const Event& e) {
  auto& x = w.exec;
  auto& kb = w.kb;
  const auto& d = e.data;
  if (e.seq != x.last_seq + 1)
    throw InvalidValue("event seq " + std::to_string(e.seq) + " does not follow " + std::to_string(x.last_seq));
  const auto& k = e.kind;

  if (k == "tick") {
    x.tick_count = d.at("tick").get<std::uint64_t>();
    x.telemetry = Telemetry{d.at("x").get<double>(), d.at("y").get<double>(), d.at("depth").get<double>(),
                            d.at("battery").get<double>()};
  } else if (k == "behavior_registered") {
    kb.register_behavior(behavior_from_json(d.at("spec")));
  } else if (k == "behavior_replaced") {
    const Symbol name(d.at("name").get<std::string>());
    kb.replace_implementation(name, implementation_from_json(d.at("implementation")),
                              parse_origin(d.at("origin").get<std::string>()));
    if (x.active_plan)
      for (std::size_t i = 0; i < x.active_plan->steps.size(); ++i) {
        const auto& s = x.active_plan->steps[i];
        if (s.behavior == name && s.status == StepStatus::pending) x.plan_stale = true;
      }
  } else if (k == "fact_asserted") {
    const Atom atom = parse_atom(d.at("atom").get<std::string>());
    kb.assert_fact(atom, d.at("truth").get<bool>(), parse_provenance(d.at("provenance").get<std::string>()), e.t);
    if (x.mismatches.count(atom.str())) {
      const auto* entry = kb.beliefs.find(atom);
      if (!(entry->inferred && entry->observed && entry->inferred->truth != entry->observed->truth))
        x.mismatches.erase(atom.str());
    }
  } else if (k == "binding_changed") {
    kb.bind(Symbol(d.at("symbol").get<std::string>()), value_from_json(d.at("value")), e.t);
  } else if (k == "goal_injected") {
    Goal g;
    g.id = d.at("id").get<std::uint64_t>();
    g.condition = parse_conjunction(d.at("condition").get<std::string>());
    g.priority = parse_priority(d.at("priority").get<std::string>());
    g.source = parse_source(d.at("source").get<std::string>());
    g.injected_at = e.t;
    x.goals[g.id] = g;
    x.next_goal_id = std::max(x.next_goal_id, g.id + 1);
  } else if (k == "goal_status") {
    const auto id = d.at("id").get<std::uint64_t>();
    auto& g = x.goals.at(id);
    g.status = parse_goal_status(d.at("status").get<std::string>());
    g.reason = d.value("reason", std::string());
    if (g.status == GoalStatus::active && x.active_goal != id) {
      x.active_goal = id;
      x.active_plan.reset();
      x.running.reset();
      x.plan_stale = false;
    }
    if (!g.open()) {
      x.overrides.erase(id);
      if (x.active_goal == id) {
        x.active_goal.reset();
        x.active_plan.reset();
        x.running.reset();
        x.plan_stale = false;
      }
    }
  } else if (k == "plan_created") {
    x.active_goal = d.at("goal_id").get<std::uint64_t>();
    x.active_plan = plan_from_json(d.at("plan"));
    x.overrides.erase(*x.active_goal);
    x.running.reset();
    x.plan_stale = false;
  } else if (k == "plan_overridden") {
    const auto id = d.at("goal_id").get<std::uint64_t>();
    Plan p = plan_from_json(d.at("plan"));
    if (d.at("active").get<bool>()) {
      x.active_goal = id;
      x.active_plan = std::move(p);
      x.running.reset();
      x.plan_stale = false;
    } else {
      x.overrides[id] = std::move(p);
    }
  } else if (k == "plan_dropped") {
    x.active_plan.reset();
    x.running.reset();
    x.plan_stale = false;
  } else if (k == "behavior_started") {
    const auto idx = d.at("step").get<std::size_t>();
    const int child = d.at("child").get<int>();
    if (!x.active_plan || idx >= x.active_plan->steps.size()) throw InvalidValue("step index out of range");
    if (child < 0) {
      RunningStep r;
      r.index = idx;
      r.started_at = e.t;
      for (const auto& c : d.at("children")) r.children.push_back(c.get<std::string>());
      r.deps_held = d.at("deps_held").get<bool>();
      x.running = std::move(r);
      x.active_plan->steps[idx].status = StepStatus::running;
    } else {
      if (!x.running) throw InvalidValue("child started without a running step");
      x.running->child = child;
      x.running->child_started_at = e.t;
    }
  } else if (k == "behavior_done") {
    if (d.at("child").get<int>() < 0) {
      kb.record_outcome(detail::outcome_record(e, Outcome::success));
      detail::finish_step(x, e, StepStatus::done);
    }
  } else if (k == "behavior_failed") {
    kb.record_outcome(detail::outcome_record(e, Outcome::failure));
    detail::finish_step(x, e, StepStatus::failed);
    x.active_plan.reset();
    x.plan_stale = false;
  } else if (k == "behavior_halted") {
    kb.record_outcome(detail::outcome_record(e, Outcome::halted));
    detail::finish_step(x, e, StepStatus::pending);
  } else if (k == "mismatch_detected") {
    x.mismatches.insert(d.at("atom").get<std::string>());
    if (d.at("relevant").get<bool>()) x.plan_stale = true;
  } else if (k == "safety_violation") {
    x.violations.insert(d.at("symbol").get<std::string>());
  } else if (k == "safety_cleared") {
    x.violations.erase(d.at("symbol").get<std::string>());
  } else if (k == "mode_changed") {
    x.mode = parse_mode(d.at("mode").get<std::string>());
    if (x.mode == Mode::safety_hold) x.hold_version = d.at("version").get<std::uint64_t>();
    else x.hold_version.reset();
  } else if (k == "command_rejected" || k == "warning" || k == "acoustic_sent") {
    // Audit only.
  } else {
    throw InvalidValue("unknown event kind '" + k + "'");
  }
  x.last_seq = e.seq;
  x.sim_clock = e.t;
}

// Dumps ---------------------------------------------------------------------------

inline Json to_json(const ExecutiveState& x) {
  Json j;
  j["mode"] = mode_name(x.mode);
  j["goals"] = Json::array();
  for (const auto& [id, g] : x.goals) j["goals"].push_back(to_json(g));
  j["next_goal_id"] = x.next_goal_id;
  j["active_goal"] = x.active_goal ? Json(*x.active_goal) : Json(nullptr);
  j["active_plan"] = x.active_plan ? to_json(*x.active_plan) : Json(nullptr);
  j["active_step"] = x.running ? Json(x.running->index) : Json(nullptr);
  if (x.running) {
    Json r;
    r["index"] = x.running->index;
    r["started_at"] = x.running->started_at;
    r["children"] = x.running->children;
    r["child"] = x.running->child;
    r["child_started_at"] = x.running->child_started_at;
    r["deps_held"] = x.running->deps_held;
    j["running"] = r;
  } else {
    j["running"] = nullptr;
  }
  j["overrides"] = Json::array();
  for (const auto& [id, p] : x.overrides) j["overrides"].push_back(to_json(p));
  j["plan_stale"] = x.plan_stale;
  j["violations"] = x.violations;
  j["mismatches"] = x.mismatches;
  j["hold_version"] = x.hold_version ? Json(*x.hold_version) : Json(nullptr);
  j["sim_clock"] = x.sim_clock;
  j["tick_count"] = x.tick_count;
  j["last_seq"] = x.last_seq;
  j["telemetry"] = Json{{"x", x.telemetry.x}, {"y", x.telemetry.y}, {"depth", x.telemetry.depth},
                        {"battery", x.telemetry.battery}};
  return j;
}

inline Json world_dump(const World& w) {
  Json j = store_dump(w.kb);
  j["executive"] = to_json(w.exec);
  return j;
}

inline std::string world_digest(const World& w) { return sha256_hex(to_canonical(world_dump(w))); }

}  // namespace tro
