#pragma once

// Forward state-space planning over grounded behaviors with add/delete
// effects, plus plan validation, composite expansion and repair.
//
// Search is A* with integer costs (expected duration in microseconds) and
// a consistent heuristic, so the first goal popped is cost-optimal. Among
// equal-cost plans the lexicographically least sequence of grounded step
// names wins, which makes the result a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tro/behavior.hpp"
#include "tro/error.hpp"
#include "tro/stores.hpp"
#include "tro/symbolic.hpp"

namespace tro {

// Goals -------------------------------------------------------------------

// Lower number preempts.
enum class Priority : int { safety = 0, operator_ = 1, self_directed = 2 };

inline const char* priority_name(Priority p) {
  switch (p) {
    case Priority::safety: return "safety";
    case Priority::operator_: return "operator";
    case Priority::self_directed: return "self_directed";
  }
  return "?";
}

inline Priority parse_priority(const std::string& s) {
  if (s == "safety") return Priority::safety;
  if (s == "operator") return Priority::operator_;
  if (s == "self_directed") return Priority::self_directed;
  throw MalformedGoal("unknown priority '" + s + "'");
}

enum class GoalSource { operator_, acoustic, internal };

inline const char* source_name(GoalSource s) {
  switch (s) {
    case GoalSource::operator_: return "operator";
    case GoalSource::acoustic: return "acoustic";
    case GoalSource::internal: return "internal";
  }
  return "?";
}

inline GoalSource parse_source(const std::string& s) {
  if (s == "operator") return GoalSource::operator_;
  if (s == "acoustic") return GoalSource::acoustic;
  if (s == "internal") return GoalSource::internal;
  throw MalformedGoal("unknown goal source '" + s + "'");
}

enum class GoalStatus { pending, active, achieved, abandoned };

inline const char* goal_status_name(GoalStatus s) {
  switch (s) {
    case GoalStatus::pending: return "pending";
    case GoalStatus::active: return "active";
    case GoalStatus::achieved: return "achieved";
    case GoalStatus::abandoned: return "abandoned";
  }
  return "?";
}

inline GoalStatus parse_goal_status(const std::string& s) {
  if (s == "pending") return GoalStatus::pending;
  if (s == "active") return GoalStatus::active;
  if (s == "achieved") return GoalStatus::achieved;
  if (s == "abandoned") return GoalStatus::abandoned;
  throw MalformedGoal("unknown goal status '" + s + "'");
}

struct Goal {
  std::uint64_t id = 0;
  Conjunction condition;
  Priority priority = Priority::operator_;
  GoalSource source = GoalSource::operator_;
  double injected_at = 0.0;
  GoalStatus status = GoalStatus::pending;
  std::string reason;

  bool open() const { return status == GoalStatus::pending || status == GoalStatus::active; }
};

// Plans -------------------------------------------------------------------

enum class StepStatus { pending, running, done, failed };

inline const char* step_status_name(StepStatus s) {
  switch (s) {
    case StepStatus::pending: return "pending";
    case StepStatus::running: return "running";
    case StepStatus::done: return "done";
    case StepStatus::failed: return "failed";
  }
  return "?";
}

inline StepStatus parse_step_status(const std::string& s) {
  if (s == "pending") return StepStatus::pending;
  if (s == "running") return StepStatus::running;
  if (s == "done") return StepStatus::done;
  if (s == "failed") return StepStatus::failed;
  throw InvalidValue("unknown step status '" + s + "'");
}

struct PlanStep {
  Symbol behavior;
  Substitution substitution;
  StepStatus status = StepStatus::pending;
  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

enum class PlanProvenance { planned, operator_override };

inline const char* plan_provenance_name(PlanProvenance p) {
  return p == PlanProvenance::planned ? "planned" : "operator_override";
}

inline PlanProvenance parse_plan_provenance(const std::string& s) {
  if (s == "planned") return PlanProvenance::planned;
  if (s == "operator_override") return PlanProvenance::operator_override;
  throw InvalidValue("unknown plan provenance '" + s + "'");
}

struct Plan {
  std::uint64_t goal_id = 0;
  std::vector<PlanStep> steps;
  double created_at = 0.0;
  PlanProvenance provenance = PlanProvenance::planned;
  double cost_s = 0.0;  // sum of expected step durations
  friend bool operator==(const Plan&, const Plan&) = default;
};

inline std::string step_text(const PlanStep& step, const BehaviorStore& behaviors) {
  return step_text(step.behavior, behaviors.at(step.behavior).spec.params, step.substitution);
}

// Builds a step from text such as `goto(wp_1)` or `descend`.
inline PlanStep parse_step(std::string_view text, const BehaviorStore& behaviors) {
  const Invocation inv = parse_invocation(text);
  const auto& spec = behaviors.at(inv.behavior).spec;
  if (spec.params.size() != inv.args.size())
    throw InvalidBehavior("step " + std::string(text) + ": " + spec.name.name() + " takes " +
                          std::to_string(spec.params.size()) + " arguments");
  PlanStep step{inv.behavior, {}, StepStatus::pending};
  for (std::size_t i = 0; i < inv.args.size(); ++i) {
    const auto* s = std::get_if<Symbol>(&inv.args[i]);
    if (!s) throw UnboundVariable(std::get<Variable>(inv.args[i]).name);
    step.substitution.emplace(spec.params[i], *s);
  }
  return step;
}

// Effects -----------------------------------------------------------------

inline bool dependencies_hold(const AtomSet& state, const BehaviorSpec& spec, const Substitution& sub) {
  return entails(state, ground(spec.dependencies, sub));
}

// Deletes first, then adds; conditional adds only when `deps_held`.
inline void apply_effects(AtomSet& state, const BehaviorSpec& spec, const Substitution& sub, bool deps_held) {
  for (const auto& d : spec.del) state.erase(ground(d, sub));
  for (const auto& a : spec.add) state.insert(ground(a, sub));
  if (deps_held)
    for (const auto& a : spec.conditional_add) state.insert(ground(a, sub));
}

// Validation --------------------------------------------------------------

struct PlanVerdict {
  bool ok = true;
  // Index of the offending step; equals steps.size() when the goal itself
  // is not entailed after the last step.
  std::optional<std::size_t> step;
  std::optional<std::string> literal;
  std::vector<std::string> warnings;  // unmet soft dependencies
};

// Pure simulation of the add/delete lists from `state`.
inline PlanVerdict validate_plan(const Plan& plan, const AtomSet& state, const Conjunction& goal,
                                 const BehaviorStore& behaviors) {
  PlanVerdict v;
  AtomSet s = state;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& step = plan.steps[i];
    const auto* entry = behaviors.find(step.behavior);
    if (!entry) {
      v.ok = false;
      v.step = i;
      v.literal = "unknown behavior " + step.behavior.name();
      return v;
    }
    const auto& spec = entry->spec;
    for (const auto& pre : spec.preconditions) {
      const Literal lit = ground(pre, step.substitution);
      if (s.count(lit.atom) != static_cast<std::size_t>(lit.positive)) {
        v.ok = false;
        v.step = i;
        v.literal = lit.str();
        return v;
      }
    }
    bool deps = true;
    for (const auto& dep : spec.dependencies) {
      const Literal lit = ground(dep, step.substitution);
      if (s.count(lit.atom) != static_cast<std::size_t>(lit.positive)) {
        deps = false;
        v.warnings.push_back("step " + std::to_string(i) + " (" + step_text(step, behaviors) +
                             "): dependency " + lit.str() + " not established");
      }
    }
    apply_effects(s, spec, step.substitution, deps);
  }
  for (const auto& lit : goal.literals()) {
    if (s.count(lit.atom) != static_cast<std::size_t>(lit.positive)) {
      v.ok = false;
      v.step = plan.steps.size();
      v.literal = lit.str();
      return v;
    }
  }
  return v;
}

// Composite expansion -------------------------------------------------------

inline constexpr std::size_t kMaxExpansionDepth = 16;

namespace detail {
inline void expand_into(const BehaviorStore& behaviors, const Symbol& behavior, const Substitution& sub,
                        std::size_t depth, std::vector<PlanStep>& out) {
  if (depth > kMaxExpansionDepth)
    throw DepthExceeded("composite nesting deeper than " + std::to_string(kMaxExpansionDepth) + " at " +
                        behavior.name());
  const auto& spec = behaviors.at(behavior).spec;
  for (const auto& p : spec.params)
    if (!sub.count(p)) throw UnboundVariable(p);
  const auto* comp = std::get_if<Composite>(&spec.implementation);
  if (!comp) {
    out.push_back(PlanStep{behavior, sub, StepStatus::pending});
    return;
  }
  for (const auto& child : comp->children) {
    const auto& child_spec = behaviors.at(child.behavior).spec;
    Substitution child_sub;
    for (std::size_t i = 0; i < child.args.size(); ++i)
      child_sub.emplace(child_spec.params[i], resolve_term(child.args[i], sub));
    expand_into(behaviors, child.behavior, child_sub, depth + 1, out);
  }
}
}  // namespace detail

// Ordered primitive steps of `behavior`; a primitive expands to itself.
inline std::vector<PlanStep> expand_composite(const BehaviorStore& behaviors, const Symbol& behavior,
                                              const Substitution& sub) {
  std::vector<PlanStep> out;
  detail::expand_into(behaviors, behavior, sub, 0, out);
  return out;
}

// Search ----------------------------------------------------------------------

struct PlannerOptions {
  std::size_t max_grounded_actions = 100000;
  std::size_t max_expansions = 200000;
};

namespace detail {

struct GroundAction {
  PlanStep step;
  std::string name;
  std::vector<std::uint32_t> pre_pos, pre_neg, add, del;
  std::int64_t cost_us = 1;
  double cost_s = 0.0;
};

class AtomIndex {
 public:
  std::uint32_t id(const Atom& a) {
    auto [it, inserted] = ids_.emplace(a, static_cast<std::uint32_t>(atoms_.size()));
    if (inserted) atoms_.push_back(a);
    return it->second;
  }
  std::optional<std::uint32_t> find(const Atom& a) const {
    auto it = ids_.find(a);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const Atom& atom(std::uint32_t id) const { return atoms_[id]; }
  std::size_t size() const { return atoms_.size(); }

 private:
  std::map<Atom, std::uint32_t> ids_;
  std::vector<Atom> atoms_;
};

using Bits = std::vector<std::uint64_t>;

inline bool test(const Bits& b, std::uint32_t i) { return (b[i >> 6] >> (i & 63)) & 1u; }
inline void set(Bits& b, std::uint32_t i) { b[i >> 6] |= std::uint64_t{1} << (i & 63); }
inline void reset(Bits& b, std::uint32_t i) { b[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

struct BitsHash {
  std::size_t operator()(const Bits& b) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto w : b) {
      h ^= w;
      h *= 0x100000001b3ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

inline void collect_symbols(const Atom& a, std::set<Symbol>& out) {
  for (const auto& s : a.args) out.insert(s);
}

// All substitutions of `params` over `universe`, in lexicographic order.
inline void enumerate(const std::vector<std::string>& params, const std::vector<Symbol>& universe,
                      std::size_t i, Substitution& cur, const std::function<void(const Substitution&)>& f) {
  if (i == params.size()) {
    f(cur);
    return;
  }
  for (const auto& s : universe) {
    cur.insert_or_assign(params[i], s);
    enumerate(params, universe, i + 1, cur, f);
  }
  cur.erase(params[i]);
}

}  // namespace detail

inline std::vector<Symbol> planning_universe(const Conjunction& goal, const AtomSet& state,
                                             const KnowledgeBase& kb) {
  std::set<Symbol> u;
  for (const auto& a : state) detail::collect_symbols(a, u);
  for (const auto& l : goal.literals()) detail::collect_symbols(l.atom, u);
  for (const auto& s : kb.numerics.symbols()) u.insert(s);
  return {u.begin(), u.end()};
}

inline Plan make_plan(const Conjunction& goal, const AtomSet& state, const KnowledgeBase& kb,
                      const PlannerOptions& opt = {}) {
  using namespace detail;
  Plan plan;
  if (entails(state, goal)) return plan;

  const auto universe = planning_universe(goal, state, kb);

  // Grounding -------------------------------------------------------------
  std::size_t total = 0;
  for (const auto& [name, entry] : kb.behaviors.entries()) {
    double n = std::pow(static_cast<double>(universe.size()), static_cast<double>(entry.spec.params.size()));
    total += n > 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(n);
    if (total > opt.max_grounded_actions)
      throw GroundingExplosion("more than " + std::to_string(opt.max_grounded_actions) + " grounded actions");
  }

  AtomIndex index;
  for (const auto& a : state) index.id(a);
  for (const auto& l : goal.literals()) index.id(l.atom);

  std::vector<GroundAction> actions;
  for (const auto& [name, entry] : kb.behaviors.entries()) {
    const auto& spec = entry.spec;
    const auto est = kb.assessments.estimate_cost(spec.name);
    const std::int64_t cost_us = std::max<std::int64_t>(1, std::llround(est.duration_s * 1e6));
    Substitution cur;
    enumerate(spec.params, universe, 0, cur, [&](const Substitution& sub) {
      GroundAction act{PlanStep{spec.name, sub, StepStatus::pending}, step_text(spec.name, spec.params, sub),
                       {}, {}, {}, {}, cost_us, est.duration_s};
      Conjunction pre;
      try {
        pre = ground(spec.preconditions, sub);
        for (const auto& d : spec.dependencies) pre.add(ground(d, sub));
      } catch (const ContradictoryConjunction&) {
        return;  // never applicable
      }
      for (const auto& l : pre.literals()) (l.positive ? act.pre_pos : act.pre_neg).push_back(index.id(l.atom));
      std::set<std::uint32_t> del, add;
      for (const auto& d : spec.del) del.insert(index.id(ground(d, sub)));
      for (const auto& a : spec.add) add.insert(index.id(ground(a, sub)));
      // Dependencies are planned as hard preconditions, so conditional
      // effects always fire in the search.
      for (const auto& a : spec.conditional_add) add.insert(index.id(ground(a, sub)));
      for (auto a : add) del.erase(a);
      act.add.assign(add.begin(), add.end());
      act.del.assign(del.begin(), del.end());
      actions.push_back(std::move(act));
    });
  }
  std::sort(actions.begin(), actions.end(),
            [](const GroundAction& a, const GroundAction& b) { return a.name < b.name; });

  const std::size_t words = (index.size() + 63) / 64 + 1;
  Bits init(words, 0);
  for (const auto& a : state) set(init, *index.find(a));

  std::vector<std::uint32_t> goal_pos, goal_neg;
  for (const auto& l : goal.literals()) (l.positive ? goal_pos : goal_neg).push_back(*index.find(l.atom));

  // Delete-relaxed reachability: prunes dead actions and explains failures.
  Bits reach = init;
  std::vector<bool> live(actions.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (live[i]) continue;
      const auto& act = actions[i];
      if (!std::all_of(act.pre_pos.begin(), act.pre_pos.end(), [&](auto p) { return test(reach, p); })) continue;
      live[i] = true;
      changed = true;
      for (auto a : act.add) set(reach, a);
    }
  }
  std::vector<std::string> unreachable;
  for (auto g : goal_pos)
    if (!test(reach, g)) unreachable.push_back(index.atom(g).str());
  auto unsat_literals = [&] {
    std::vector<std::string> out;
    for (const auto& l : goal.literals())
      if (state.count(l.atom) != static_cast<std::size_t>(l.positive)) out.push_back(l.str());
    return out;
  };
  if (!unreachable.empty()) throw Unsolvable("goal literals unreachable from current beliefs", unreachable);

  std::vector<std::uint32_t> live_idx;
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (live[i]) live_idx.push_back(static_cast<std::uint32_t>(i));
  if (live_idx.empty()) throw Unsolvable("no applicable behaviors", unsat_literals());

  // Heuristic: ceil(unsatisfied goal literals / max literals one action can
  // fix) * cheapest action. Admissible and consistent.
  std::int64_t min_cost = INT64_MAX;
  std::size_t per_action = 1;
  {
    std::set<std::uint32_t> gp(goal_pos.begin(), goal_pos.end()), gn(goal_neg.begin(), goal_neg.end());
    for (auto i : live_idx) {
      const auto& act = actions[i];
      min_cost = std::min(min_cost, act.cost_us);
      std::size_t fix = 0;
      for (auto a : act.add) fix += gp.count(a);
      for (auto d : act.del) fix += gn.count(d);
      per_action = std::max(per_action, fix);
    }
  }
  // Second bound: the dearest unsatisfied literal costs at least the
  // cheapest action that fixes it. Keeps the search focused once zero-length
  // primitives have pulled min_cost down to nothing.
  std::unordered_map<std::uint32_t, std::int64_t> fix_pos, fix_neg;
  for (auto i : live_idx) {
    const auto& act = actions[i];
    for (auto a : act.add)
      if (auto [it, fresh] = fix_pos.try_emplace(a, act.cost_us); !fresh) it->second = std::min(it->second, act.cost_us);
    for (auto d : act.del)
      if (auto [it, fresh] = fix_neg.try_emplace(d, act.cost_us); !fresh) it->second = std::min(it->second, act.cost_us);
  }
  auto heuristic = [&](const Bits& s) -> std::int64_t {
    std::size_t unsat = 0;
    std::int64_t dearest = 0;
    for (auto g : goal_pos)
      if (!test(s, g)) {
        ++unsat;
        if (auto it = fix_pos.find(g); it != fix_pos.end()) dearest = std::max(dearest, it->second);
      }
    for (auto g : goal_neg)
      if (test(s, g)) {
        ++unsat;
        if (auto it = fix_neg.find(g); it != fix_neg.end()) dearest = std::max(dearest, it->second);
      }
    return std::max(static_cast<std::int64_t>((unsat + per_action - 1) / per_action) * min_cost, dearest);
  };
  auto is_goal = [&](const Bits& s) {
    for (auto g : goal_pos)
      if (!test(s, g)) return false;
    for (auto g : goal_neg)
      if (test(s, g)) return false;
    return true;
  };

  struct Node {
    Bits state;
    std::int64_t g;
    std::int64_t f;
    std::vector<std::uint32_t> path;  // indices into `actions`, sorted by name
  };
  std::vector<Node> nodes;
  auto worse = [&nodes](std::size_t a, std::size_t b) {
    if (nodes[a].f != nodes[b].f) return nodes[a].f > nodes[b].f;
    return std::lexicographical_compare(nodes[b].path.begin(), nodes[b].path.end(), nodes[a].path.begin(),
                                        nodes[a].path.end());
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> open(worse);
  std::unordered_map<Bits, std::int64_t, BitsHash> best_g;
  std::unordered_map<Bits, bool, BitsHash> closed;

  nodes.push_back(Node{init, 0, heuristic(init), {}});
  best_g[init] = 0;
  open.push(0);
  std::size_t expansions = 0;

  while (!open.empty()) {
    const std::size_t cur = open.top();
    open.pop();
    if (closed.count(nodes[cur].state)) continue;
    if (is_goal(nodes[cur].state)) {
      for (auto ai : nodes[cur].path) {
        plan.steps.push_back(actions[ai].step);
        plan.cost_s += actions[ai].cost_s;
      }
      return plan;
    }
    closed.emplace(nodes[cur].state, true);
    if (++expansions > opt.max_expansions)
      throw Unsolvable("search limit of " + std::to_string(opt.max_expansions) + " expansions reached",
                       unsat_literals());
    for (auto ai : live_idx) {
      const auto& act = actions[ai];
      const Bits& s = nodes[cur].state;
      bool ok = true;
      for (auto p : act.pre_pos)
        if (!test(s, p)) { ok = false; break; }
      if (!ok) continue;
      for (auto p : act.pre_neg)
        if (test(s, p)) { ok = false; break; }
      if (!ok) continue;
      Bits next = s;
      for (auto d : act.del) reset(next, d);
      for (auto a : act.add) set(next, a);
      if (closed.count(next)) continue;
      const std::int64_t g = nodes[cur].g + act.cost_us;
      auto it = best_g.find(next);
      if (it != best_g.end() && it->second <= g) continue;
      best_g[next] = g;
      Node child{std::move(next), g, 0, nodes[cur].path};
      child.f = g + heuristic(child.state);
      child.path.push_back(ai);
      nodes.push_back(std::move(child));
      open.push(nodes.size() - 1);
    }
  }
  throw Unsolvable("no sequence of behaviors reaches the goal", unsat_literals());
}

// Re-plans from the current beliefs; completed steps are not assumed.
inline Plan repair_plan(const Plan& plan, std::size_t failed_index, const AtomSet& current_state,
                        const Conjunction& goal, const KnowledgeBase& kb, double now,
                        const PlannerOptions& opt = {}) {
  if (failed_index >= plan.steps.size() && !plan.steps.empty())
    throw InvalidValue("failed step index out of range");
  Plan repaired = make_plan(goal, current_state, kb, opt);
  repaired.goal_id = plan.goal_id;
  repaired.created_at = now;
  repaired.provenance = PlanProvenance::planned;
  return repaired;
}

}  // namespace tro
