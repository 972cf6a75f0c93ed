#pragma once

// Scenario harnesses over the mission fixtures, shared by the integration
// tests and the acceptance binary.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tro/mission.hpp"
#include "tro/replay.hpp"

#ifndef TRO_MISSIONS_DIR
#error "TRO_MISSIONS_DIR must point at the missions/ directory"
#endif

namespace tro::scenario {

inline std::string mission_path(const std::string& file) { return std::string(TRO_MISSIONS_DIR) + "/" + file; }

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tro-tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Outcome {
  RunRecord record;
  std::vector<Event> events;
  sim::VehicleState vehicle;
};

// Runs a fixture to quiescence with its log written under the temp dir.
inline Outcome run(const std::string& mission_file, const std::string& log_name, RunHooks hooks = {},
                   std::optional<std::uint64_t> seed = std::nullopt) {
  const auto m = load_mission(mission_path(mission_file));
  RunOptions opt;
  opt.seed = seed;
  opt.log_path = temp_path(log_name);
  Outcome out;
  auto user_detach = hooks.detach;
  hooks.detach = [&](Executive& ex) {
    out.events = ex.events();
    out.vehicle = ex.vehicle();
    if (user_detach) user_detach(ex);
  };
  out.record = run_mission(m, opt, hooks);
  return out;
}

inline const Json* field_or_null(const Event& e, const char* key) {
  return e.data.contains(key) ? &e.data.at(key) : nullptr;
}

inline bool top_level(const Event& e) {
  const auto* c = field_or_null(e, "child");
  return c && c->get<int>() == -1;
}

// Empty when no non-Safety behavior starts while a Safety goal is open.
inline std::string priority_safety_violation(const std::vector<Event>& events) {
  std::map<std::uint64_t, std::string> priority;
  std::set<std::uint64_t> open_safety;
  for (const auto& e : events) {
    if (e.kind == "goal_injected") {
      const auto id = e.data.at("id").get<std::uint64_t>();
      priority[id] = e.data.at("priority").get<std::string>();
      if (priority[id] == "safety") open_safety.insert(id);
    } else if (e.kind == "goal_status") {
      const auto status = e.data.at("status").get<std::string>();
      if (status == "achieved" || status == "abandoned") open_safety.erase(e.data.at("id").get<std::uint64_t>());
    } else if (e.kind == "behavior_started" && !open_safety.empty()) {
      const auto id = e.data.at("goal_id").get<std::uint64_t>();
      if (priority[id] != "safety")
        return "seq " + std::to_string(e.seq) + ": " + e.data.at("behavior").get<std::string>() + " for goal " +
               std::to_string(id) + " while a safety goal is open";
    }
  }
  return {};
}

// Safety response: the first violation comes with a halt of the running
// behavior and a Safety goal, all in one tick.
struct PreemptionCheck {
  bool violation = false;
  bool halted_same_tick = false;
  bool safety_goal_same_tick = false;
  std::string priority_error;
};

inline PreemptionCheck check_preemption(const std::vector<Event>& events) {
  PreemptionCheck c;
  std::size_t v = 0;
  for (; v < events.size(); ++v)
    if (events[v].kind == "safety_violation") break;
  if (v == events.size()) return c;
  c.violation = true;
  const double t = events[v].t;
  for (const auto& e : events) {
    if (e.t != t) continue;
    if (e.kind == "behavior_halted" && e.seq < events[v].seq) c.halted_same_tick = true;
    if (e.kind == "goal_injected" && e.data.at("priority") == "safety") c.safety_goal_same_tick = true;
  }
  c.priority_error = priority_safety_violation(events);
  return c;
}

// Replacement ------------------------------------------------------------------------

inline std::vector<Symbol> prior_points(const MissionSpec& m) {
  std::vector<Symbol> out;
  for (const auto& b : m.bindings)
    if (b.symbol.name().rfind("prior_", 0) == 0) out.push_back(b.symbol);
  return out;
}

// Swaps the survey for a point-by-point replay of the prior track before
// the first tick, while the executive is idle.
inline RunHooks replacement_hooks(const std::vector<Symbol>& points) {
  RunHooks h;
  h.attach = [points](Executive& ex) {
    Composite c;
    for (const auto& p : points) c.children.push_back(Invocation{Symbol("goto_precise"), {Term{p}}});
    ex.replace_implementation(Symbol("survey_zone_a"), c, Origin::operator_);
  };
  return h;
}

// Vehicle position at the end of each completed goto_precise child, by
// target symbol, read from the tick event closing that tick.
inline std::vector<std::pair<std::string, geo::Vec2>> precise_arrivals(const std::vector<Event>& events) {
  std::vector<std::pair<std::string, geo::Vec2>> out;
  std::optional<std::string> pending;
  for (const auto& e : events) {
    if (e.kind == "behavior_done" && !top_level(e)) {
      const auto b = e.data.at("behavior").get<std::string>();
      if (b.rfind("goto_precise(", 0) == 0) pending = b.substr(13, b.size() - 14);
    } else if (e.kind == "tick" && pending) {
      out.emplace_back(*pending, geo::Vec2{e.data.at("x").get<double>(), e.data.at("y").get<double>()});
      pending.reset();
    }
  }
  return out;
}

// Acoustic abort ------------------------------------------------------------------------

// Anticipated end of the survey: when the survey step finishes in an
// undisturbed run.
inline double survey_end(const std::vector<Event>& events) {
  for (const auto& e : events)
    if (e.kind == "behavior_done" && top_level(e) && e.data.at("behavior_name") == "survey_zone_a") return e.t;
  return -1;
}

struct AbortRun {
  Outcome outcome;
  std::optional<acoustic::TransmitResult> sent;
};

inline AbortRun run_abort(const std::string& mission_file, double send_at, const std::string& log_name) {
  AbortRun r;
  RunHooks h;
  h.before_tick = [&](Executive& ex) {
    if (!r.sent && ex.now() >= send_at) r.sent = ex.send_acoustic(acoustic::AbortToRecovery{1});
  };
  r.outcome = run(mission_file, log_name, h);
  return r;
}

struct AbortCheck {
  bool delivered = false;
  double arrival = -1;
  double halted_at = -1;
  std::vector<std::string> recovery_children;
  bool reached_surface = false;
  bool weights_dropped = false;
};

inline AbortCheck check_abort(const AbortRun& r) {
  AbortCheck c;
  if (!r.sent || !r.sent->delivered()) return c;
  c.delivered = true;
  c.arrival = *r.sent->first_arrival();
  for (const auto& e : r.outcome.events) {
    if (e.kind == "behavior_halted" && e.t >= c.arrival && c.halted_at < 0 &&
        e.data.at("behavior_name") == "survey_zone_a")
      c.halted_at = e.t;
    if (e.kind == "behavior_started" && top_level(e) && e.t >= c.arrival &&
        e.data.at("behavior_name") == "ready_for_recovery_seq")
      for (const auto& ch : e.data.at("children")) c.recovery_children.push_back(ch.get<std::string>());
  }
  c.reached_surface = r.outcome.vehicle.position.depth <= 1.0;
  c.weights_dropped = r.outcome.vehicle.descent_weights_dropped && r.outcome.vehicle.ascent_weights_dropped;
  return c;
}

}  // namespace tro::scenario
