#pragma once

// Behavior specifications: what a behavior needs, what it changes, when it
// is finished and how it is carried out.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tro/error.hpp"
#include "tro/symbolic.hpp"

namespace tro {

// Terminations -------------------------------------------------------------

struct Immediate {
  friend bool operator==(const Immediate&, const Immediate&) = default;
};

// Observed within capture radius of the goto target.
struct ReachedWaypoint {
  double capture_radius_m = 5.0;
  friend bool operator==(const ReachedWaypoint&, const ReachedWaypoint&) = default;
};

// |depth - target| <= band. The target may come from a Scalar binding.
struct DepthWithin {
  double target_m = 0.0;
  double band_m = 1.0;
  std::optional<Term> target_ref;
  friend bool operator==(const DepthWithin&, const DepthWithin&) = default;
};

// Valid DVL altitude strictly below the threshold.
struct DvlAltitudeBelow {
  double threshold_m = 50.0;
  std::optional<Term> threshold_ref;
  friend bool operator==(const DvlAltitudeBelow&, const DvlAltitudeBelow&) = default;
};

struct Elapsed {
  double seconds = 1.0;
  friend bool operator==(const Elapsed&, const Elapsed&) = default;
};

using TerminationCond = std::variant<Immediate, ReachedWaypoint, DepthWithin, DvlAltitudeBelow, Elapsed>;

// Implementations ----------------------------------------------------------

enum class ActuationKind { none, goto_point, set_fins, drop_weights, set_thruster_mode, hold_station, all_stop };

inline const char* actuation_name(ActuationKind k) {
  switch (k) {
    case ActuationKind::none: return "none";
    case ActuationKind::goto_point: return "goto";
    case ActuationKind::set_fins: return "set_fins";
    case ActuationKind::drop_weights: return "drop_weights";
    case ActuationKind::set_thruster_mode: return "set_thruster_mode";
    case ActuationKind::hold_station: return "hold_station";
    case ActuationKind::all_stop: return "all_stop";
  }
  return "?";
}

inline ActuationKind parse_actuation(const std::string& s) {
  for (auto k : {ActuationKind::none, ActuationKind::goto_point, ActuationKind::set_fins,
                 ActuationKind::drop_weights, ActuationKind::set_thruster_mode,
                 ActuationKind::hold_station, ActuationKind::all_stop})
    if (s == actuation_name(k)) return k;
  throw InvalidBehavior("unknown actuation kind '" + s + "'");
}

// Actuation-command template; `arg` names the goto target, fin config,
// weight set or thruster mode and may be a behavior parameter.
struct ActuationTemplate {
  ActuationKind kind = ActuationKind::none;
  std::optional<Term> arg;
  double speed_mps = 1.0;
  friend bool operator==(const ActuationTemplate&, const ActuationTemplate&) = default;
};

struct Invocation {
  Symbol behavior;
  std::vector<Term> args;

  std::string str() const {
    if (args.empty()) return behavior.name();
    std::string out = behavior.name() + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ',';
      out += term_str(args[i]);
    }
    return out + ")";
  }
  friend bool operator==(const Invocation&, const Invocation&) = default;
};

struct Primitive {
  ActuationTemplate command;
  friend bool operator==(const Primitive&, const Primitive&) = default;
};

struct Composite {
  std::vector<Invocation> children;
  friend bool operator==(const Composite&, const Composite&) = default;
};

using Implementation = std::variant<Primitive, Composite>;

enum class Origin { builtin, synthesized, operator_ };

inline const char* origin_name(Origin o) {
  switch (o) {
    case Origin::builtin: return "builtin";
    case Origin::synthesized: return "synthesized";
    case Origin::operator_: return "operator";
  }
  return "?";
}

inline Origin parse_origin(const std::string& s) {
  if (s == "builtin") return Origin::builtin;
  if (s == "synthesized") return Origin::synthesized;
  if (s == "operator") return Origin::operator_;
  throw InvalidBehavior("unknown origin '" + s + "'");
}

// Spec ---------------------------------------------------------------------

struct BehaviorSpec {
  Symbol name;
  std::vector<std::string> params;
  std::vector<ParamLiteral> preconditions;
  // Soft preconditions: the planner establishes them, plan validation only
  // warns when they are missing. `conditional_add` takes effect only when
  // they held as the behavior started.
  std::vector<ParamLiteral> dependencies;
  std::vector<ParamAtom> add;
  std::vector<ParamAtom> del;
  std::vector<ParamAtom> conditional_add;
  TerminationCond termination = Immediate{};
  Implementation implementation = Primitive{};
  Origin origin = Origin::builtin;

  bool composite() const { return std::holds_alternative<Composite>(implementation); }

  friend bool operator==(const BehaviorSpec&, const BehaviorSpec&) = default;
};

// `name` or `name(a,b)` with arguments in parameter order.
inline std::string step_text(const Symbol& name, const std::vector<std::string>& params,
                             const Substitution& sub) {
  if (params.empty()) return name.name();
  std::string out = name.name() + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ',';
    auto it = sub.find(params[i]);
    out += it == sub.end() ? "?" + params[i] : it->second.name();
  }
  return out + ")";
}

namespace detail {

inline void collect_vars(const std::vector<Term>& terms, std::set<std::string>& out) {
  for (const auto& t : terms)
    if (const auto* v = std::get_if<Variable>(&t)) out.insert(v->name);
}

inline void collect_vars(const std::optional<Term>& t, std::set<std::string>& out) {
  if (t) collect_vars(std::vector<Term>{*t}, out);
}

}  // namespace detail

// Checks the invariants that do not need the rest of the behavior store.
inline void validate_spec(const BehaviorSpec& spec) {
  const std::string who = "behavior " + spec.name.name() + ": ";
  std::set<std::string> params;
  for (const auto& p : spec.params) {
    if (!is_identifier(p)) throw InvalidBehavior(who + "invalid parameter ?" + p);
    if (!params.insert(p).second) throw InvalidBehavior(who + "duplicate parameter ?" + p);
  }
  std::set<std::string> used;
  for (const auto& l : spec.preconditions) detail::collect_vars(l.atom.args, used);
  for (const auto& l : spec.dependencies) detail::collect_vars(l.atom.args, used);
  for (const auto* list : {&spec.add, &spec.del, &spec.conditional_add})
    for (const auto& a : *list) detail::collect_vars(a.args, used);
  if (const auto* prim = std::get_if<Primitive>(&spec.implementation)) {
    detail::collect_vars(prim->command.arg, used);
    if (prim->command.kind == ActuationKind::goto_point &&
        (prim->command.speed_mps <= 0.0 || prim->command.speed_mps > 2.5))
      throw InvalidBehavior(who + "goto speed must be in (0, 2.5] m/s");
  } else {
    for (const auto& c : std::get<Composite>(spec.implementation).children) detail::collect_vars(c.args, used);
  }
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ReachedWaypoint>) {
          if (!(t.capture_radius_m > 0)) throw InvalidBehavior(who + "capture radius must be > 0");
        } else if constexpr (std::is_same_v<T, DepthWithin>) {
          if (!(t.band_m > 0)) throw InvalidBehavior(who + "depth band must be > 0");
          if (!t.target_ref && t.target_m < 0) throw InvalidBehavior(who + "target depth must be >= 0");
          detail::collect_vars(t.target_ref, used);
        } else if constexpr (std::is_same_v<T, DvlAltitudeBelow>) {
          if (!t.threshold_ref && !(t.threshold_m > 0))
            throw InvalidBehavior(who + "altitude threshold must be > 0");
          detail::collect_vars(t.threshold_ref, used);
        } else if constexpr (std::is_same_v<T, Elapsed>) {
          if (!(t.seconds > 0)) throw InvalidBehavior(who + "elapsed time must be > 0");
        }
      },
      spec.termination);
  for (const auto& v : used)
    if (!params.count(v)) throw InvalidBehavior(who + "variable ?" + v + " is not a parameter");
  for (const auto& a : spec.add)
    for (const auto& d : spec.del)
      if (a == d) throw InvalidBehavior(who + a.str() + " is both added and deleted");
  for (const auto& a : spec.conditional_add)
    for (const auto& d : spec.del)
      if (a == d) throw InvalidBehavior(who + a.str() + " is both added and deleted");
}

// `name` or `name(t1,...)`.
inline Invocation parse_invocation(std::string_view text) {
  if (text.find('(') == std::string_view::npos) {
    std::string name(text);
    std::erase_if(name, [](char c) { return c == ' ' || c == '\t'; });
    return Invocation{Symbol(name), {}};
  }
  auto atom = parse_param_atom(text);
  return Invocation{atom.predicate, atom.args};
}

// Fluent construction for code-defined behaviors:
//   BehaviorBuilder("goto(?wp)").adds("at(?wp)").command(ActuationKind::goto_point, "?wp")
class BehaviorBuilder {
 public:
  explicit BehaviorBuilder(std::string_view signature)
      : spec_{parse_invocation(signature).behavior, {}, {}, {}, {}, {}, {}, Immediate{}, Primitive{}, Origin::builtin} {
    for (const auto& t : parse_invocation(signature).args) {
      const auto* v = std::get_if<Variable>(&t);
      if (!v) throw InvalidBehavior("signature arguments must be variables: " + std::string(signature));
      spec_.params.push_back(v->name);
    }
  }

  BehaviorBuilder& pre(std::string_view lit) {
    spec_.preconditions.push_back(parse_param_literal(lit));
    return *this;
  }
  BehaviorBuilder& depends_on(std::string_view lit) {
    spec_.dependencies.push_back(parse_param_literal(lit));
    return *this;
  }
  BehaviorBuilder& adds(std::string_view atom) {
    spec_.add.push_back(parse_param_atom(atom));
    return *this;
  }
  BehaviorBuilder& deletes(std::string_view atom) {
    spec_.del.push_back(parse_param_atom(atom));
    return *this;
  }
  BehaviorBuilder& adds_if_dependencies(std::string_view atom) {
    spec_.conditional_add.push_back(parse_param_atom(atom));
    return *this;
  }
  BehaviorBuilder& until(TerminationCond t) {
    spec_.termination = std::move(t);
    return *this;
  }
  BehaviorBuilder& command(ActuationKind kind, std::optional<std::string_view> arg = std::nullopt,
                           double speed = 1.0) {
    ActuationTemplate cmd{kind, std::nullopt, speed};
    if (arg) cmd.arg = parse_term(*arg);
    spec_.implementation = Primitive{cmd};
    return *this;
  }
  BehaviorBuilder& children(std::initializer_list<std::string_view> calls) {
    Composite c;
    for (auto call : calls) c.children.push_back(parse_invocation(call));
    spec_.implementation = std::move(c);
    return *this;
  }
  BehaviorBuilder& origin(Origin o) {
    spec_.origin = o;
    return *this;
  }

  BehaviorSpec build() const {
    validate_spec(spec_);
    return spec_;
  }

  static Term parse_term(std::string_view s) {
    if (!s.empty() && s.front() == '?') return Variable{std::string(s.substr(1))};
    return Symbol(s);
  }

 private:
  BehaviorSpec spec_;
};

}  // namespace tro
