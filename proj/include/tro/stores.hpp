#pragma once

// The four knowledge stores (behaviors, beliefs, numerics, self-assessment)
// and the KnowledgeBase that owns them.
//
// A KnowledgeBase has one writer. Readers on other threads take a
// KnowledgeSnapshot (an immutable copy tagged with the store version).

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tro/behavior.hpp"
#include "tro/error.hpp"
#include "tro/symbolic.hpp"
#include "tro/values.hpp"

namespace tro {

// Behaviors -----------------------------------------------------------------

struct BehaviorEntry {
  BehaviorSpec spec;
  std::uint64_t id = 0;
  std::uint64_t version = 1;
};

class BehaviorStore {
 public:
  std::uint64_t register_behavior(BehaviorSpec spec) {
    validate_spec(spec);
    if (entries_.count(spec.name))
      throw DuplicateName("behavior " + spec.name.name() + " already registered; use replace_implementation");
    check_children(spec.name, spec.implementation);
    const auto id = next_id_++;
    const Symbol name = spec.name;
    entries_.emplace(name, BehaviorEntry{std::move(spec), id, 1});
    return id;
  }

  // Preconditions and effects stay as registered.
  std::uint64_t replace_implementation(const Symbol& name, Implementation impl, Origin origin) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw UnknownBehavior("unknown behavior " + name.name());
    BehaviorSpec candidate = it->second.spec;
    candidate.implementation = std::move(impl);
    candidate.origin = origin;
    validate_spec(candidate);
    check_children(name, candidate.implementation);
    it->second.spec = std::move(candidate);
    return ++it->second.version;
  }

  const BehaviorEntry* find(const Symbol& name) const {
    auto it = entries_.find(name);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const BehaviorEntry& at(const Symbol& name) const {
    if (const auto* e = find(name)) return *e;
    throw UnknownBehavior("unknown behavior " + name.name());
  }

  const std::map<Symbol, BehaviorEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  void check_children(const Symbol& name, const Implementation& impl) const {
    const auto* comp = std::get_if<Composite>(&impl);
    if (!comp) return;
    for (const auto& child : comp->children) {
      if (child.behavior == name) throw CycleDetected({name.name(), name.name()});
      const auto* e = find(child.behavior);
      if (!e) throw UnknownChild("behavior " + name.name() + " references unknown child " + child.behavior.name());
      if (e->spec.params.size() != child.args.size())
        throw InvalidBehavior("child " + child.str() + " of " + name.name() + " expects " +
                              std::to_string(e->spec.params.size()) + " arguments");
    }
    // Depth-first search for a path from any child back to `name`.
    std::vector<std::string> trail{name.name()};
    std::set<Symbol> done;
    std::function<void(const Composite&)> visit = [&](const Composite& c) {
      for (const auto& child : c.children) {
        trail.push_back(child.behavior.name());
        if (child.behavior == name) throw CycleDetected(trail);
        if (!done.count(child.behavior)) {
          const auto& spec = at(child.behavior).spec;
          if (const auto* sub = std::get_if<Composite>(&spec.implementation)) visit(*sub);
          done.insert(child.behavior);
        }
        trail.pop_back();
      }
    };
    visit(*comp);
  }

  std::map<Symbol, BehaviorEntry> entries_;
  std::uint64_t next_id_ = 1;
};

// Beliefs -------------------------------------------------------------------

enum class Provenance { inferred, observed };

inline const char* provenance_name(Provenance p) { return p == Provenance::inferred ? "inferred" : "observed"; }

inline Provenance parse_provenance(const std::string& s) {
  if (s == "inferred") return Provenance::inferred;
  if (s == "observed") return Provenance::observed;
  throw InvalidValue("unknown provenance '" + s + "'");
}

struct Fact {
  Atom atom;
  bool truth = true;
  Provenance provenance = Provenance::inferred;
  double timestamp = 0.0;
  friend bool operator==(const Fact&, const Fact&) = default;
};

struct Mismatch {
  Atom atom;
  Fact inferred;
  Fact observed;
};

class BeliefStore {
 public:
  struct Entry {
    std::optional<Fact> inferred;
    std::optional<Fact> observed;
  };

  // Latest wins per (atom, provenance).
  void assert_fact(const Atom& atom, bool truth, Provenance prov, double t) {
    auto& e = entries_.try_emplace(atom).first->second;
    (prov == Provenance::inferred ? e.inferred : e.observed) = Fact{atom, truth, prov, t};
  }

  // Observed truth when present, otherwise inferred; nullopt if never asserted.
  std::optional<bool> query(const Atom& atom) const {
    auto it = entries_.find(atom);
    if (it == entries_.end()) return std::nullopt;
    if (it->second.observed) return it->second.observed->truth;
    if (it->second.inferred) return it->second.inferred->truth;
    return std::nullopt;
  }

  const Entry* find(const Atom& atom) const {
    auto it = entries_.find(atom);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::vector<Mismatch> detect_mismatches() const {
    std::vector<Mismatch> out;
    for (const auto& [atom, e] : entries_)
      if (e.inferred && e.observed && e.inferred->truth != e.observed->truth)
        out.push_back(Mismatch{atom, *e.inferred, *e.observed});
    return out;
  }

  // Closed-world state with observed facts preferred over inferred ones.
  AtomSet state() const {
    AtomSet out;
    for (const auto& [atom, e] : entries_)
      if (query(atom).value_or(false)) out.insert(atom);
    return out;
  }

  AtomSet inferred_state() const {
    AtomSet out;
    for (const auto& [atom, e] : entries_)
      if (e.inferred && e.inferred->truth) out.insert(atom);
    return out;
  }

  const std::map<Atom, Entry>& entries() const noexcept { return entries_; }
  std::size_t fact_count() const {
    std::size_t n = 0;
    for (const auto& [atom, e] : entries_) n += e.inferred.has_value() + e.observed.has_value();
    return n;
  }

 private:
  std::map<Atom, Entry> entries_;
};

// Numerics ------------------------------------------------------------------

struct Binding {
  Symbol symbol;
  ConcreteValue value;
  std::uint64_t version = 0;
  double timestamp = 0.0;
};

class NumericsStore {
 public:
  std::uint64_t bind(const Symbol& symbol, ConcreteValue value, double t) {
    validate(value);
    auto& hist = history_.try_emplace(symbol).first->second;
    const std::uint64_t version = hist.empty() ? 1 : hist.back().version + 1;
    hist.push_back(Binding{symbol, std::move(value), version, t});
    return version;
  }

  const Binding* resolve(const Symbol& symbol) const {
    auto it = history_.find(symbol);
    return it == history_.end() || it->second.empty() ? nullptr : &it->second.back();
  }

  template <typename T>
  const T* resolve_as(const Symbol& symbol) const {
    const auto* b = resolve(symbol);
    return b ? std::get_if<T>(&b->value) : nullptr;
  }

  std::vector<Symbol> symbols() const {
    std::vector<Symbol> out;
    for (const auto& [s, h] : history_) out.push_back(s);
    return out;
  }

  const std::map<Symbol, std::vector<Binding>>& history() const noexcept { return history_; }

 private:
  std::map<Symbol, std::vector<Binding>> history_;
};

// Self-assessment -----------------------------------------------------------

enum class Outcome { success, failure, halted };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::failure: return "failure";
    case Outcome::halted: return "halted";
  }
  return "?";
}

inline Outcome parse_outcome(const std::string& s) {
  if (s == "success") return Outcome::success;
  if (s == "failure") return Outcome::failure;
  if (s == "halted") return Outcome::halted;
  throw InvalidValue("unknown outcome '" + s + "'");
}

struct AssessmentRecord {
  Symbol behavior;
  Outcome outcome = Outcome::success;
  double duration_s = 0.0;
  double energy_wh = 0.0;
  double timestamp = 0.0;
};

struct CostEstimate {
  double duration_s = 60.0;
  double energy_wh = 10.0;
  double success_rate = 1.0;
  bool no_history = true;
};

inline constexpr CostEstimate kDefaultCost{60.0, 10.0, 1.0, true};

class AssessmentStore {
 public:
  void record_outcome(AssessmentRecord rec) {
    if (!(rec.duration_s >= 0.0) || !(rec.energy_wh >= 0.0))
      throw InvalidValue("assessment duration and energy must be >= 0");
    records_.push_back(std::move(rec));
  }

  // Unweighted mean over every recorded outcome.
  CostEstimate estimate_cost(const Symbol& behavior) const {
    double dur = 0.0, energy = 0.0;
    std::size_t n = 0, ok = 0;
    for (const auto& r : records_) {
      if (r.behavior != behavior) continue;
      ++n;
      dur += r.duration_s;
      energy += r.energy_wh;
      ok += r.outcome == Outcome::success;
    }
    if (n == 0) return kDefaultCost;
    return CostEstimate{dur / n, energy / n, static_cast<double>(ok) / n, false};
  }

  const std::vector<AssessmentRecord>& records() const noexcept { return records_; }

 private:
  std::vector<AssessmentRecord> records_;
};

// Aggregate -----------------------------------------------------------------

// Mutate through the member functions so the version stays current; the
// stores are public for reads.
struct KnowledgeBase {
  BehaviorStore behaviors;
  BeliefStore beliefs;
  NumericsStore numerics;
  AssessmentStore assessments;
  std::uint64_t version = 0;

  std::uint64_t register_behavior(BehaviorSpec spec) {
    const auto id = behaviors.register_behavior(std::move(spec));
    ++version;
    return id;
  }
  std::uint64_t replace_implementation(const Symbol& name, Implementation impl, Origin origin) {
    const auto v = behaviors.replace_implementation(name, std::move(impl), origin);
    ++version;
    return v;
  }
  void assert_fact(const Atom& atom, bool truth, Provenance prov, double t) {
    beliefs.assert_fact(atom, truth, prov, t);
    ++version;
  }
  std::uint64_t bind(const Symbol& symbol, ConcreteValue value, double t) {
    const auto v = numerics.bind(symbol, std::move(value), t);
    ++version;
    return v;
  }
  void record_outcome(AssessmentRecord rec) {
    assessments.record_outcome(std::move(rec));
    ++version;
  }
};

struct KnowledgeSnapshot {
  std::shared_ptr<const KnowledgeBase> kb;
  std::uint64_t version() const { return kb ? kb->version : 0; }
};

inline KnowledgeSnapshot snapshot(const KnowledgeBase& kb) {
  return KnowledgeSnapshot{std::make_shared<const KnowledgeBase>(kb)};
}

}  // namespace tro
