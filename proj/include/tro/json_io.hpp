#pragma once

// JSON forms of the domain types, the fixed-format writer used for logs and
// dumps, and SHA-256 content digests.

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tro/behavior.hpp"
#include "tro/error.hpp"
#include "tro/planner.hpp"
#include "tro/stores.hpp"
#include "tro/symbolic.hpp"
#include "tro/values.hpp"

namespace tro {

using Json = nlohmann::ordered_json;

// Writer -------------------------------------------------------------------------

namespace detail {

inline void write_float(std::string& out, double v) {
  if (!std::isfinite(v)) throw InvalidValue("cannot serialize a non-finite number");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::string_view(buf) == "-0.000000") {
    out += "0.000000";
    return;
  }
  out += buf;
}

inline void write_json(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump();
        out += ':';
        write_json(out, it.value());
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        write_json(out, v);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      write_float(out, j.get<double>());
      break;
    default:
      out += j.dump(-1, ' ', false, Json::error_handler_t::strict);
  }
}

}  // namespace detail

// Compact, field order preserved, every float with exactly 6 decimals.
inline std::string to_canonical(const Json& j) {
  std::string out;
  detail::write_json(out, j);
  return out;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// Reading helpers ----------------------------------------------------------------

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "missing required field");
  return *it;
}

inline double num(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

inline std::string str(const Json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

}  // namespace detail

// Values -------------------------------------------------------------------------

inline Json to_json(const ConcreteValue& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        Json j;
        if constexpr (std::is_same_v<T, Scalar>) {
          j["type"] = "scalar";
          j["value"] = x.value;
          j["unit"] = unit_name(x.unit);
        } else if constexpr (std::is_same_v<T, Point>) {
          j["type"] = "point";
          j["x"] = x.x;
          j["y"] = x.y;
          j["depth"] = x.depth;
        } else if constexpr (std::is_same_v<T, Polygon>) {
          j["type"] = "polygon";
          j["vertices"] = Json::array();
          for (const auto& p : x.vertices) j["vertices"].push_back(Json::array({p.x, p.y}));
        } else if constexpr (std::is_same_v<T, Path>) {
          j["type"] = "path";
          j["points"] = Json::array();
          for (const auto& p : x.points) j["points"].push_back(Json::array({p.x, p.y, p.depth}));
        } else {
          j["type"] = "label";
          j["text"] = x.text;
        }
        return j;
      },
      v);
}

// Integers are accepted wherever a float is expected.
inline ConcreteValue value_from_json(const Json& j, const std::string& path = "value") {
  using namespace detail;
  const auto type = str(field(j, "type", path), path + ".type");
  if (type == "scalar") {
    Unit unit = Unit::meters;
    if (j.contains("unit")) {
      try {
        unit = parse_unit(str(j["unit"], path + ".unit"));
      } catch (const InvalidValue& e) {
        throw SchemaError(path + ".unit", e.what());
      }
    }
    return Scalar{num(field(j, "value", path), path + ".value"), unit};
  }
  if (type == "point") {
    return Point{num(field(j, "x", path), path + ".x"), num(field(j, "y", path), path + ".y"),
                 j.contains("depth") ? num(j["depth"], path + ".depth") : 0.0};
  }
  if (type == "polygon") {
    Polygon poly;
    const auto& vs = field(j, "vertices", path);
    if (!vs.is_array()) throw SchemaError(path + ".vertices", "expected an array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const auto p = path + ".vertices[" + std::to_string(i) + "]";
      if (!vs[i].is_array() || vs[i].size() != 2) throw SchemaError(p, "expected [x, y]");
      poly.vertices.push_back({num(vs[i][0], p), num(vs[i][1], p)});
    }
    return poly;
  }
  if (type == "path") {
    Path out;
    const auto& ps = field(j, "points", path);
    if (!ps.is_array()) throw SchemaError(path + ".points", "expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto p = path + ".points[" + std::to_string(i) + "]";
      if (!ps[i].is_array() || ps[i].size() < 2 || ps[i].size() > 3) throw SchemaError(p, "expected [x, y, depth?]");
      out.points.push_back(Point{num(ps[i][0], p), num(ps[i][1], p), ps[i].size() == 3 ? num(ps[i][2], p) : 0.0});
    }
    return out;
  }
  if (type == "label") return Label{str(field(j, "text", path), path + ".text")};
  throw SchemaError(path + ".type", "unknown value type '" + type + "'");
}

// Behaviors ----------------------------------------------------------------------

inline Json term_json(const std::optional<Term>& t) {
  return t ? Json(term_str(*t)) : Json(nullptr);
}

inline std::optional<Term> term_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return BehaviorBuilder::parse_term(j.get<std::string>());
}

inline Json to_json(const TerminationCond& t) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        Json j;
        if constexpr (std::is_same_v<T, Immediate>) {
          j["kind"] = "immediate";
        } else if constexpr (std::is_same_v<T, ReachedWaypoint>) {
          j["kind"] = "reached_waypoint";
          j["capture_radius"] = x.capture_radius_m;
        } else if constexpr (std::is_same_v<T, DepthWithin>) {
          j["kind"] = "depth_within";
          j["target"] = x.target_m;
          j["band"] = x.band_m;
          j["target_ref"] = term_json(x.target_ref);
        } else if constexpr (std::is_same_v<T, DvlAltitudeBelow>) {
          j["kind"] = "dvl_altitude_below";
          j["threshold"] = x.threshold_m;
          j["threshold_ref"] = term_json(x.threshold_ref);
        } else {
          j["kind"] = "elapsed";
          j["seconds"] = x.seconds;
        }
        return j;
      },
      t);
}

inline TerminationCond termination_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "immediate") return Immediate{};
  if (kind == "reached_waypoint") return ReachedWaypoint{j.at("capture_radius").get<double>()};
  if (kind == "depth_within")
    return DepthWithin{j.value("target", 0.0), j.at("band").get<double>(), term_from_json(j.value("target_ref", Json()))};
  if (kind == "dvl_altitude_below")
    return DvlAltitudeBelow{j.value("threshold", 0.0), term_from_json(j.value("threshold_ref", Json()))};
  if (kind == "elapsed") return Elapsed{j.at("seconds").get<double>()};
  throw InvalidBehavior("unknown termination kind '" + kind + "'");
}

inline Json to_json(const Implementation& impl) {
  Json j;
  if (const auto* p = std::get_if<Primitive>(&impl)) {
    j["type"] = "primitive";
    j["command"] = actuation_name(p->command.kind);
    j["arg"] = term_json(p->command.arg);
    j["speed"] = p->command.speed_mps;
  } else {
    j["type"] = "composite";
    j["children"] = Json::array();
    for (const auto& c : std::get<Composite>(impl).children) j["children"].push_back(c.str());
  }
  return j;
}

inline Implementation implementation_from_json(const Json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "primitive")
    return Primitive{ActuationTemplate{parse_actuation(j.at("command").get<std::string>()),
                                       term_from_json(j.value("arg", Json())), j.value("speed", 1.0)}};
  if (type == "composite") {
    Composite c;
    for (const auto& child : j.at("children")) c.children.push_back(parse_invocation(child.get<std::string>()));
    return c;
  }
  throw InvalidBehavior("unknown implementation type '" + type + "'");
}

template <typename T>
Json str_array(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(x.str());
  return a;
}

inline Json to_json(const BehaviorSpec& s) {
  Json j;
  j["name"] = s.name.name();
  j["params"] = Json::array();
  for (const auto& p : s.params) j["params"].push_back("?" + p);
  j["preconditions"] = str_array(s.preconditions);
  j["dependencies"] = str_array(s.dependencies);
  j["add"] = str_array(s.add);
  j["del"] = str_array(s.del);
  j["conditional_add"] = str_array(s.conditional_add);
  j["termination"] = to_json(s.termination);
  j["implementation"] = to_json(s.implementation);
  j["origin"] = origin_name(s.origin);
  return j;
}

inline BehaviorSpec behavior_from_json(const Json& j) {
  std::string sig = j.at("name").get<std::string>();
  const auto& params = j.value("params", Json::array());
  if (!params.empty()) {
    sig += "(";
    for (std::size_t i = 0; i < params.size(); ++i) sig += (i ? "," : "") + params[i].get<std::string>();
    sig += ")";
  }
  BehaviorBuilder b(sig);
  for (const auto& l : j.value("preconditions", Json::array())) b.pre(l.get<std::string>());
  for (const auto& l : j.value("dependencies", Json::array())) b.depends_on(l.get<std::string>());
  for (const auto& a : j.value("add", Json::array())) b.adds(a.get<std::string>());
  for (const auto& a : j.value("del", Json::array())) b.deletes(a.get<std::string>());
  for (const auto& a : j.value("conditional_add", Json::array())) b.adds_if_dependencies(a.get<std::string>());
  if (j.contains("termination")) b.until(termination_from_json(j["termination"]));
  if (j.contains("origin")) b.origin(parse_origin(j["origin"].get<std::string>()));
  BehaviorSpec spec = b.build();
  if (j.contains("implementation")) spec.implementation = implementation_from_json(j["implementation"]);
  validate_spec(spec);
  return spec;
}

// Plans and goals -----------------------------------------------------------------

inline Json to_json(const Substitution& sub) {
  Json j = Json::object();
  for (const auto& [k, v] : sub) j["?" + k] = v.name();
  return j;
}

inline Substitution substitution_from_json(const Json& j) {
  Substitution sub;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = it.key();
    if (!key.empty() && key.front() == '?') key.erase(0, 1);
    sub.emplace(key, Symbol(it.value().get<std::string>()));
  }
  return sub;
}

inline Json to_json(const PlanStep& s) {
  Json j;
  j["behavior"] = s.behavior.name();
  j["substitution"] = to_json(s.substitution);
  j["status"] = step_status_name(s.status);
  return j;
}

inline PlanStep step_from_json(const Json& j) {
  return PlanStep{Symbol(j.at("behavior").get<std::string>()), substitution_from_json(j.at("substitution")),
                  parse_step_status(j.value("status", std::string("pending")))};
}

inline Json to_json(const Plan& p) {
  Json j;
  j["goal_id"] = p.goal_id;
  j["created_at"] = p.created_at;
  j["provenance"] = plan_provenance_name(p.provenance);
  j["cost"] = p.cost_s;
  j["steps"] = Json::array();
  for (const auto& s : p.steps) j["steps"].push_back(to_json(s));
  return j;
}

inline Plan plan_from_json(const Json& j) {
  Plan p;
  p.goal_id = j.at("goal_id").get<std::uint64_t>();
  p.created_at = j.at("created_at").get<double>();
  p.provenance = parse_plan_provenance(j.at("provenance").get<std::string>());
  p.cost_s = j.value("cost", 0.0);
  for (const auto& s : j.at("steps")) p.steps.push_back(step_from_json(s));
  return p;
}

inline Json to_json(const Goal& g) {
  Json j;
  j["id"] = g.id;
  j["condition"] = g.condition.str();
  j["priority"] = priority_name(g.priority);
  j["source"] = source_name(g.source);
  j["injected_at"] = g.injected_at;
  j["status"] = goal_status_name(g.status);
  j["reason"] = g.reason;
  return j;
}

inline Json to_json(const PlanVerdict& v) {
  Json j;
  j["ok"] = v.ok;
  j["step"] = v.step ? Json(*v.step) : Json(nullptr);
  j["literal"] = v.literal ? Json(*v.literal) : Json(nullptr);
  j["warnings"] = v.warnings;
  return j;
}

// Human-facing plan report: steps with per-step estimates.
inline Json plan_report(const Plan& plan, const KnowledgeBase& kb) {
  Json j;
  j["goal_id"] = plan.goal_id;
  j["provenance"] = plan_provenance_name(plan.provenance);
  j["created_at"] = plan.created_at;
  j["steps"] = Json::array();
  double total_s = 0.0, total_wh = 0.0;
  for (const auto& s : plan.steps) {
    const auto est = kb.assessments.estimate_cost(s.behavior);
    Json step;
    step["step"] = kb.behaviors.find(s.behavior) ? step_text(s, kb.behaviors) : s.behavior.name();
    step["status"] = step_status_name(s.status);
    step["expected_duration_s"] = est.duration_s;
    step["expected_energy_wh"] = est.energy_wh;
    step["success_rate"] = est.success_rate;
    step["no_history"] = est.no_history;
    total_s += est.duration_s;
    total_wh += est.energy_wh;
    j["steps"].push_back(step);
  }
  j["total_cost_s"] = total_s;
  j["total_energy_wh"] = total_wh;
  return j;
}

// Store dump ----------------------------------------------------------------------

inline Json behaviors_json(const KnowledgeBase& kb) {
  Json a = Json::array();
  for (const auto& [name, e] : kb.behaviors.entries()) {
    Json j = to_json(e.spec);
    j["id"] = e.id;
    j["version"] = e.version;
    a.push_back(j);
  }
  return a;
}

inline Json beliefs_json(const KnowledgeBase& kb) {
  Json a = Json::array();
  for (const auto& [atom, e] : kb.beliefs.entries()) {
    for (const auto* f : {&e.inferred, &e.observed}) {
      if (!*f) continue;
      Json j;
      j["atom"] = atom.str();
      j["truth"] = (*f)->truth;
      j["provenance"] = provenance_name((*f)->provenance);
      j["t"] = (*f)->timestamp;
      a.push_back(j);
    }
  }
  return a;
}

inline Json bindings_json(const KnowledgeBase& kb) {
  Json a = Json::array();
  for (const auto& [sym, hist] : kb.numerics.history()) {
    const auto& b = hist.back();
    Json j;
    j["symbol"] = sym.name();
    j["version"] = b.version;
    j["t"] = b.timestamp;
    j["value"] = to_json(b.value);
    a.push_back(j);
  }
  return a;
}

inline Json assessments_json(const KnowledgeBase& kb) {
  Json a = Json::array();
  for (const auto& r : kb.assessments.records()) {
    Json j;
    j["behavior"] = r.behavior.name();
    j["outcome"] = outcome_name(r.outcome);
    j["duration"] = r.duration_s;
    j["energy"] = r.energy_wh;
    j["t"] = r.timestamp;
    a.push_back(j);
  }
  return a;
}

inline Json store_dump(const KnowledgeBase& kb) {
  Json j;
  j["behaviors"] = behaviors_json(kb);
  j["beliefs"] = beliefs_json(kb);
  j["bindings"] = bindings_json(kb);
  j["assessments"] = assessments_json(kb);
  return j;
}

}  // namespace tro
