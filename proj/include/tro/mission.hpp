#pragma once

// Declarative missions: JSON schema, validation, executive setup and the
// headless run that produces a RunRecord.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tro/acoustic.hpp"
#include "tro/behaviors_library.hpp"
#include "tro/deliberator.hpp"
#include "tro/error.hpp"
#include "tro/json_io.hpp"
#include "tro/safety.hpp"
#include "tro/vehicle_sim.hpp"

namespace tro {

struct MissionGoal {
  Conjunction condition;
  Priority priority = Priority::operator_;
};

struct MissionBinding {
  Symbol symbol;
  ConcreteValue value;
};

// A hard-coded plan installed as an override for goals[goal].
struct ScriptedPlan {
  std::size_t goal = 0;
  std::vector<std::string> steps;
};

struct MissionSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<std::string> behavior_modules{"sentry_core"};
  std::vector<Atom> initial_state;
  std::vector<MissionGoal> goals;
  std::vector<MissionBinding> bindings;
  std::map<Symbol, CoverageSetting> coverage;
  SafetyEnvelope safety;
  std::vector<ScriptedPlan> scripted_plans;
  std::vector<std::vector<std::string>> stored_plans;  // targets of override_plan_ref frames
  sim::VehicleState vehicle;
  sim::EnvironmentSpec environment;
  std::optional<acoustic::ChannelModel> acoustic;
  std::string source;  // canonical form of the mission document
};

namespace detail {

template <typename F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
}

inline const Json& array_field(const Json& j, const char* key, const std::string& path) {
  const auto& a = field(j, key, path);
  if (!a.is_array()) throw SchemaError(path + "." + key, "expected an array");
  return a;
}

inline double num_or(const Json& j, const char* key, double fallback, const std::string& path) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return num(j[key], path + "." + key);
}

inline Polygon polygon_of(const Json& verts, const std::string& path) {
  if (!verts.is_array()) throw SchemaError(path, "expected an array of [x, y]");
  Polygon p;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const auto vp = path + "[" + std::to_string(i) + "]";
    if (!verts[i].is_array() || verts[i].size() != 2) throw SchemaError(vp, "expected [x, y]");
    p.vertices.push_back({num(verts[i][0], vp), num(verts[i][1], vp)});
  }
  at_path(path, [&] {
    validate_polygon(p);
    return 0;
  });
  return p;
}

inline Conjunction condition_of(const Json& c, const std::string& path) {
  return at_path(path, [&] {
    if (c.is_string()) return parse_conjunction(c.get<std::string>());
    if (!c.is_array()) throw SchemaError(path, "expected a string or an array of literals");
    Conjunction out;
    for (const auto& l : c) out.add(parse_literal(l.get<std::string>()));
    return out;
  });
}

// Constants that some loaded behavior can make true.
inline void effect_symbols(const std::vector<std::string>& modules, std::set<std::string>& out) {
  for (const auto& m : modules)
    for (const auto& spec : behavior_module(m))
      for (const auto* list : {&spec.add, &spec.conditional_add})
        for (const auto& a : *list)
          for (const auto& t : a.args)
            if (const auto* s = std::get_if<Symbol>(&t)) out.insert(s->name());
}

}  // namespace detail

// `base_dir` resolves relative file references such as the bathymetry grid.
inline MissionSpec parse_mission(const Json& j, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  MissionSpec m;
  m.source = to_canonical(j);
  m.name = str(field(j, "name", "$"), "name");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("seed", "expected a non-negative integer");
    m.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("behavior_modules")) {
    m.behavior_modules.clear();
    const auto& mods = array_field(j, "behavior_modules", "$");
    for (std::size_t i = 0; i < mods.size(); ++i) {
      const auto p = "behavior_modules[" + std::to_string(i) + "]";
      const auto name = str(mods[i], p);
      at_path(p, [&] { return behavior_module(name).size(); });
      m.behavior_modules.push_back(name);
    }
  }

  // Safety first: refuse a mission without an envelope.
  const auto& s = field(j, "safety", "$");
  m.safety.max_depth_m = num(field(s, "max_depth", "safety"), "safety.max_depth");
  m.safety.min_battery_wh = num_or(s, "min_battery", m.safety.min_battery_wh, "safety");
  if (s.contains("min_altitude") && !s["min_altitude"].is_null())
    m.safety.min_altitude_m = num(s["min_altitude"], "safety.min_altitude");
  if (s.contains("keep_out")) {
    const auto& zones = array_field(s, "keep_out", "safety");
    for (std::size_t i = 0; i < zones.size(); ++i) {
      const auto p = "safety.keep_out[" + std::to_string(i) + "]";
      const auto name = str(field(zones[i], "name", p), p + ".name");
      m.safety.keep_out.push_back(KeepOutZone{at_path(p + ".name", [&] { return Symbol(name); }),
                                              polygon_of(field(zones[i], "vertices", p), p + ".vertices")});
    }
  }
  at_path("safety", [&] {
    m.safety.validate();
    return 0;
  });

  if (j.contains("initial_state")) {
    const auto& init = array_field(j, "initial_state", "$");
    for (std::size_t i = 0; i < init.size(); ++i) {
      const auto p = "initial_state[" + std::to_string(i) + "]";
      m.initial_state.push_back(at_path(p, [&] { return parse_atom(str(init[i], p)); }));
    }
  }

  if (j.contains("bindings")) {
    const auto& bs = array_field(j, "bindings", "$");
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const auto p = "bindings[" + std::to_string(i) + "]";
      const auto sym = str(field(bs[i], "symbol", p), p + ".symbol");
      ConcreteValue v = value_from_json(field(bs[i], "value", p), p + ".value");
      at_path(p + ".value", [&] {
        validate(v);
        return 0;
      });
      m.bindings.push_back(MissionBinding{at_path(p + ".symbol", [&] { return Symbol(sym); }), std::move(v)});
    }
  }

  if (j.contains("coverage")) {
    const auto& cs = array_field(j, "coverage", "$");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto p = "coverage[" + std::to_string(i) + "]";
      const auto zone = str(field(cs[i], "zone", p), p + ".zone");
      CoverageSetting c{num_or(cs[i], "spacing", kDefaultSurveySpacing, p), num_or(cs[i], "heading", 0.0, p)};
      if (!(c.spacing_m > 0)) throw SchemaError(p + ".spacing", "must be > 0");
      m.coverage.insert_or_assign(at_path(p + ".zone", [&] { return Symbol(zone); }), c);
    }
  }

  const auto& goals = array_field(j, "goals", "$");
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const auto p = "goals[" + std::to_string(i) + "]";
    MissionGoal g;
    g.condition = condition_of(field(goals[i], "condition", p), p + ".condition");
    if (g.condition.empty()) throw SchemaError(p + ".condition", "empty goal");
    if (goals[i].contains("priority"))
      g.priority = at_path(p + ".priority", [&] { return parse_priority(str(goals[i]["priority"], p + ".priority")); });
    m.goals.push_back(std::move(g));
  }

  if (j.contains("scripted_plans")) {
    const auto& sp = array_field(j, "scripted_plans", "$");
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const auto p = "scripted_plans[" + std::to_string(i) + "]";
      ScriptedPlan plan;
      const auto& g = field(sp[i], "goal", p);
      if (!g.is_number_unsigned() || g.get<std::size_t>() >= m.goals.size())
        throw SchemaError(p + ".goal", "expected an index into goals");
      plan.goal = g.get<std::size_t>();
      for (const auto& step : array_field(sp[i], "steps", p)) plan.steps.push_back(str(step, p + ".steps"));
      m.scripted_plans.push_back(std::move(plan));
    }
  }

  if (j.contains("stored_plans")) {
    const auto& sp = array_field(j, "stored_plans", "$");
    for (std::size_t i = 0; i < sp.size(); ++i) {
      const auto p = "stored_plans[" + std::to_string(i) + "]";
      if (!sp[i].is_array()) throw SchemaError(p, "expected an array of steps");
      std::vector<std::string> steps;
      for (const auto& step : sp[i]) steps.push_back(str(step, p));
      m.stored_plans.push_back(std::move(steps));
    }
  }

  if (j.contains("vehicle")) {
    const auto& v = j["vehicle"];
    m.vehicle.position = Point{num_or(v, "x", 0.0, "vehicle"), num_or(v, "y", 0.0, "vehicle"),
                               num_or(v, "depth", 0.0, "vehicle")};
    m.vehicle.heading_deg = num_or(v, "heading", 0.0, "vehicle");
    m.vehicle.battery_wh = num_or(v, "battery", m.vehicle.battery_wh, "vehicle");
    if (m.vehicle.position.depth < 0 || m.vehicle.battery_wh < 0)
      throw SchemaError("vehicle", "depth and battery must be >= 0");
  }

  if (j.contains("environment")) {
    const auto& e = j["environment"];
    auto& env = m.environment;
    if (e.contains("bathymetry") && !e["bathymetry"].is_null()) {
      const auto file = base_dir / str(e["bathymetry"], "environment.bathymetry");
      env.bathymetry = at_path("environment.bathymetry", [&] { return sim::load_bathymetry(file.string()); });
    } else if (e.contains("flat_depth")) {
      const double d = num(e["flat_depth"], "environment.flat_depth");
      env.bathymetry = sim::Bathymetry::flat(d, -20000.0, -20000.0, 20000.0, 20000.0);
    }
    at_path("environment.bathymetry", [&] {
      env.bathymetry.validate();
      return 0;
    });
    if (e.contains("current")) {
      const auto& c = e["current"];
      if (!c.is_array() || c.size() != 2) throw SchemaError("environment.current", "expected [east, north]");
      env.current_east_mps = num(c[0], "environment.current[0]");
      env.current_north_mps = num(c[1], "environment.current[1]");
    }
    env.noise_amplitude_mps = num_or(e, "noise", 0.0, "environment");
    if (e.contains("disturbances")) {
      const auto& ds = array_field(e, "disturbances", "environment");
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto p = "environment.disturbances[" + std::to_string(i) + "]";
        sim::Disturbance d;
        d.t0 = num(field(ds[i], "t0", p), p + ".t0");
        d.t1 = num(field(ds[i], "t1", p), p + ".t1");
        d.east_mps = num_or(ds[i], "east", 0.0, p);
        d.north_mps = num_or(ds[i], "north", 0.0, p);
        d.down_mps = num_or(ds[i], "down", 0.0, p);
        env.disturbances.push_back(d);
      }
    }
  }

  if (j.contains("acoustic")) {
    const auto& a = j["acoustic"];
    acoustic::ChannelModel c;
    c.drop_probability = num_or(a, "drop_probability", 0.0, "acoustic");
    c.one_way_latency_s = num_or(a, "latency", c.one_way_latency_s, "acoustic");
    c.seed = a.contains("seed") ? a["seed"].get<std::uint64_t>() : m.seed;
    if (c.drop_probability < 0 || c.drop_probability > 1) throw SchemaError("acoustic.drop_probability", "must be in [0, 1]");
    m.acoustic = c;
  }

  // Every goal symbol must be bound or producible.
  std::set<std::string> known{"max_depth", "min_altitude", "battery"};
  for (const auto& b : m.bindings) known.insert(b.symbol.name());
  for (const auto& z : m.safety.keep_out) known.insert(z.name.name());
  for (const auto& a : m.initial_state)
    for (const auto& s : a.args) known.insert(s.name());
  effect_symbols(m.behavior_modules, known);
  std::vector<std::string> unbound;
  for (const auto& g : m.goals)
    for (const auto& l : g.condition.literals())
      for (const auto& s : l.atom.args)
        if (!known.count(s.name()) &&
            std::find(unbound.begin(), unbound.end(), s.name()) == unbound.end())
          unbound.push_back(s.name());
  if (!unbound.empty()) throw UnboundSymbol(unbound);
  return m;
}

inline MissionSpec load_mission(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("$", "cannot open mission file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw SchemaError("$", e.what());
  }
  return parse_mission(j, std::filesystem::path(path).parent_path());
}

// Setup order: behaviors, bindings, initial facts, goals, then scripted
// overrides. The safety responses ride along with the core set.
inline std::unique_ptr<Executive> build_executive(const MissionSpec& m, std::uint64_t seed,
                                                  ExecutiveConfig cfg = {}) {
  auto env = m.environment;
  env.seed = seed;
  auto ex = std::make_unique<Executive>(env, m.vehicle, m.safety, cfg);
  auto mods = m.behavior_modules;
  const auto has = [&](const char* n) { return std::find(mods.begin(), mods.end(), n) != mods.end(); };
  if (has("sentry_core") && !has("safety")) mods.insert(std::find(mods.begin(), mods.end(), "sentry_core") + 1, "safety");
  for (const auto& name : mods) ex->load_module(name);
  for (const auto& [zone, c] : m.coverage) ex->set_coverage(zone, c);
  for (const auto& b : m.bindings) ex->bind(b.symbol, b.value);
  for (const auto& a : m.initial_state) ex->assert_fact(a, true);
  if (m.acoustic) ex->set_channel(*m.acoustic);
  ex->set_stored_plans(m.stored_plans);
  std::vector<std::uint64_t> ids;
  for (const auto& g : m.goals) ids.push_back(ex->inject_goal(g.condition, g.priority, GoalSource::operator_));
  for (const auto& sp : m.scripted_plans) ex->override_plan(ids.at(sp.goal), sp.steps);
  return ex;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  double speed = 0.0;  // sim seconds per wall second; 0 runs flat out
  std::string log_path;
  std::size_t max_ticks = 200000;
};

struct RunRecord {
  std::string mission;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string log_path;
  std::string digest;
  std::size_t ticks = 0;
  bool all_achieved = false;
};

inline Json to_json(const RunRecord& r) {
  return Json{{"mission", r.mission}, {"seed", r.seed},         {"config_digest", r.config_digest},
              {"log", r.log_path},    {"digest", r.digest},     {"ticks", r.ticks},
              {"all_achieved", r.all_achieved}};
}

inline std::string config_digest(const MissionSpec& m, std::uint64_t seed) {
  return sha256_hex(m.source + "\nseed=" + std::to_string(seed));
}

inline bool all_goals_achieved(const World& w) {
  for (const auto& [id, g] : w.exec.goals)
    if (g.status != GoalStatus::achieved) return false;
  return !w.exec.goals.empty();
}

struct RunHooks {
  std::function<void(Executive&)> attach;       // after setup, before the first tick
  std::function<void(Executive&)> before_tick;  // scenario harnesses send commands here
  std::function<bool()> keep_running;           // keeps ticking past quiescence while true
  std::function<bool()> stop_requested;         // ends the run early, e.g. on a signal
  std::function<void(Executive&)> detach;       // after the last tick
};

inline RunRecord run_mission(const MissionSpec& m, const RunOptions& opt, const RunHooks& hooks) {
  RunRecord rec;
  rec.mission = m.name;
  rec.seed = opt.seed.value_or(m.seed);
  rec.config_digest = config_digest(m, rec.seed);
  rec.log_path = opt.log_path;
  std::ofstream log;
  if (!opt.log_path.empty()) {
    log.open(opt.log_path, std::ios::trunc);
    if (!log) throw Error("cannot write log " + opt.log_path);
  }
  // Setup events are already in the executive; write them before attaching.
  auto ex = build_executive(m, rec.seed);
  if (log.is_open()) {
    for (const auto& line : ex->lines_since(0)) log << line << '\n';
    ex->set_log(&log);
  }
  if (hooks.attach) hooks.attach(*ex);

  const auto start = std::chrono::steady_clock::now();
  while (rec.ticks < opt.max_ticks) {
    if (hooks.stop_requested && hooks.stop_requested()) break;
    if (hooks.before_tick) hooks.before_tick(*ex);
    if (ex->quiescent() && !(hooks.keep_running && hooks.keep_running())) break;
    ex->tick();
    ++rec.ticks;
    if (opt.speed > 0)
      std::this_thread::sleep_until(start + std::chrono::duration<double>(ex->now() / opt.speed));
  }
  if (hooks.detach) hooks.detach(*ex);
  rec.digest = ex->digest();
  rec.all_achieved = all_goals_achieved(ex->world());
  return rec;
}

inline RunRecord run_mission(const MissionSpec& m, const RunOptions& opt = {},
                             const std::function<void(Executive&)>& before_tick = {}) {
  RunHooks hooks;
  hooks.before_tick = before_tick;
  return run_mission(m, opt, hooks);
}

}  // namespace tro
