#include <gtest/gtest.h>

#include <random>

#include "tro/behaviors_library.hpp"
#include "tro/stores.hpp"

using namespace tro;

namespace {

BehaviorStore core_store() {
  BehaviorStore s;
  for (const auto& b : sentry_core_behaviors()) s.register_behavior(b);
  return s;
}

Polygon square(double x0, double y0, double side) {
  return Polygon{{{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}}};
}

}  // namespace

TEST(BehaviorStore, RegisterPrimitive) {
  BehaviorStore s;
  const auto id = s.register_behavior(
      BehaviorBuilder("goto(?wp)").adds("at(?wp)").until(ReachedWaypoint{5.0}).command(ActuationKind::goto_point, "?wp").build());
  EXPECT_EQ(id, 1u);
  EXPECT_EQ(s.size(), 1u);
}

TEST(BehaviorStore, RegisterDescendComposite) {
  const auto s = core_store();
  const auto& d = s.at(Symbol("descend")).spec;
  const auto& kids = std::get<Composite>(d.implementation).children;
  ASSERT_EQ(kids.size(), 5u);
  EXPECT_EQ(kids[0].str(), "set_fins(descent_cfg)");
  EXPECT_EQ(kids[3].str(), "vertical_thrust(on)");
  EXPECT_EQ(kids[4].str(), "drop_weights(descent)");
}

TEST(BehaviorStore, SelfReferenceIsACycle) {
  BehaviorStore s;
  EXPECT_THROW(s.register_behavior(BehaviorBuilder("loop").children({"loop"}).build()), CycleDetected);
}

TEST(BehaviorStore, IndirectCycleOnReplace) {
  BehaviorStore s;
  s.register_behavior(BehaviorBuilder("hold_station").until(Elapsed{1}).command(ActuationKind::hold_station).build());
  s.register_behavior(BehaviorBuilder("a").children({"hold_station"}).build());
  s.register_behavior(BehaviorBuilder("b").children({"a"}).build());
  EXPECT_THROW(s.replace_implementation(Symbol("a"), Composite{{Invocation{Symbol("b"), {}}}}, Origin::operator_),
               CycleDetected);
  // The failed replacement left `a` untouched.
  EXPECT_EQ(s.at(Symbol("a")).version, 1u);
}

TEST(BehaviorStore, UnknownChildAndDuplicate) {
  BehaviorStore s;
  EXPECT_THROW(s.register_behavior(BehaviorBuilder("x").children({"nope"}).build()), UnknownChild);
  s.register_behavior(BehaviorBuilder("x").build());
  EXPECT_THROW(s.register_behavior(BehaviorBuilder("x").build()), DuplicateName);
}

TEST(BehaviorStore, ReplaceKeepsInterfaceAndBumpsVersion) {
  auto s = core_store();
  const auto before = s.at(Symbol("ascend")).spec;
  const auto v = s.replace_implementation(Symbol("ascend"), before.implementation, Origin::operator_);
  EXPECT_EQ(v, 2u);
  const auto& after = s.at(Symbol("ascend")).spec;
  EXPECT_EQ(after.preconditions, before.preconditions);
  EXPECT_EQ(after.add, before.add);
  EXPECT_EQ(after.del, before.del);
  EXPECT_EQ(after.implementation, before.implementation);
}

TEST(BehaviorStore, ReplaceUnknown) {
  BehaviorStore s;
  EXPECT_THROW(s.replace_implementation(Symbol("survey_zone_q"), Primitive{}, Origin::operator_), UnknownBehavior);
}

TEST(BeliefStore, AssertAndQuery) {
  BeliefStore b;
  const Atom wp3 = parse_atom("at(wp_3)");
  b.assert_fact(wp3, true, Provenance::inferred, 100);
  EXPECT_EQ(b.query(wp3), true);
  b.assert_fact(wp3, false, Provenance::observed, 101);
  const auto m = b.detect_mismatches();
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].atom, wp3);
  EXPECT_TRUE(m[0].inferred.truth);
  EXPECT_FALSE(m[0].observed.truth);
  // Observed wins in the working state.
  EXPECT_EQ(b.query(wp3), false);
  EXPECT_FALSE(b.state().count(wp3));
  EXPECT_TRUE(b.inferred_state().count(wp3));
}

TEST(BeliefStore, LatestWins) {
  BeliefStore b;
  const Atom a = parse_atom("at_depth(surface)");
  b.assert_fact(a, true, Provenance::inferred, 1);
  b.assert_fact(a, true, Provenance::inferred, 7);
  EXPECT_EQ(b.fact_count(), 1u);
  EXPECT_EQ(b.find(a)->inferred->timestamp, 7);
}

TEST(BeliefStore, MismatchCases) {
  BeliefStore b;
  EXPECT_TRUE(b.detect_mismatches().empty());
  b.assert_fact(parse_atom("p(x)"), true, Provenance::inferred, 0);
  b.assert_fact(parse_atom("p(x)"), true, Provenance::observed, 0);
  EXPECT_TRUE(b.detect_mismatches().empty());
}

// Brute force: a mismatch is exactly an atom whose two provenances disagree.
TEST(BeliefStoreProperty, MismatchesMatchBruteForce) {
  std::mt19937_64 rng(21);
  const char* names[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int round = 0; round < 200; ++round) {
    BeliefStore b;
    std::map<std::pair<std::string, int>, bool> oracle;
    for (int i = 0; i < 50; ++i) {
      const std::string n = names[rng() % 8];
      const int prov = static_cast<int>(rng() % 2);
      const bool truth = rng() % 2;
      b.assert_fact(Atom(Symbol("p"), {Symbol(n)}), truth, prov ? Provenance::observed : Provenance::inferred, i);
      oracle[{n, prov}] = truth;
    }
    std::set<std::string> expect;
    for (const auto* n : names) {
      auto i = oracle.find({n, 0}), o = oracle.find({n, 1});
      if (i != oracle.end() && o != oracle.end() && i->second != o->second) expect.insert(n);
    }
    std::set<std::string> got;
    for (const auto& m : b.detect_mismatches()) got.insert(m.atom.args[0].name());
    EXPECT_EQ(got, expect);
    for (const auto& [atom, e] : b.entries()) EXPECT_LE(e.inferred.has_value() + e.observed.has_value(), 2);
  }
}

TEST(NumericsStore, BindVersions) {
  NumericsStore n;
  EXPECT_EQ(n.bind(Symbol("zone_a"), square(0, 0, 1000), 0), 1u);
  EXPECT_EQ(n.bind(Symbol("zone_a"), square(500, 0, 1000), 500), 2u);
  const auto* b = n.resolve(Symbol("zone_a"));
  EXPECT_EQ(b->version, 2u);
  EXPECT_EQ(std::get<Polygon>(b->value).vertices[0].x, 500);
}

TEST(NumericsStore, RejectsDegeneratePolygon) {
  NumericsStore n;
  EXPECT_THROW(n.bind(Symbol("zone_a"), Polygon{{{0, 0}, {1, 0}}}, 0), InvalidValue);
  EXPECT_THROW(n.bind(Symbol("bowtie"), Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}}, 0), InvalidValue);
}

TEST(NumericsStoreProperty, ResolveReturnsLastBinding) {
  std::mt19937_64 rng(22);
  NumericsStore n;
  std::map<std::string, double> oracle;
  for (int i = 0; i < 1000; ++i) {
    const std::string s = "s" + std::to_string(rng() % 10);
    const double v = static_cast<double>(rng() % 1000);
    n.bind(Symbol(s), Scalar{v, Unit::meters}, i);
    oracle[s] = v;
  }
  for (const auto& [s, v] : oracle) EXPECT_EQ(n.resolve_as<Scalar>(Symbol(s))->value, v);
}

TEST(AssessmentStore, Estimates) {
  AssessmentStore a;
  const auto none = a.estimate_cost(Symbol("goto"));
  EXPECT_EQ(none.duration_s, 60);
  EXPECT_EQ(none.energy_wh, 10);
  EXPECT_EQ(none.success_rate, 1.0);
  EXPECT_TRUE(none.no_history);

  a.record_outcome({Symbol("descend"), Outcome::success, 100, 4, 0});
  a.record_outcome({Symbol("descend"), Outcome::success, 200, 8, 0});
  const auto d = a.estimate_cost(Symbol("descend"));
  EXPECT_DOUBLE_EQ(d.duration_s, 150);
  EXPECT_DOUBLE_EQ(d.energy_wh, 6);
  EXPECT_DOUBLE_EQ(d.success_rate, 1.0);
  EXPECT_FALSE(d.no_history);

  for (int i = 0; i < 3; ++i) a.record_outcome({Symbol("goto"), Outcome::success, 10, 1, 0});
  a.record_outcome({Symbol("goto"), Outcome::failure, 10, 1, 0});
  EXPECT_DOUBLE_EQ(a.estimate_cost(Symbol("goto")).success_rate, 0.75);
}

TEST(KnowledgeBase, SnapshotIsIndependent) {
  KnowledgeBase kb;
  kb.assert_fact(parse_atom("p(x)"), true, Provenance::inferred, 0);
  const auto snap = snapshot(kb);
  kb.assert_fact(parse_atom("q(x)"), true, Provenance::inferred, 1);
  EXPECT_EQ(snap.version(), 1u);
  EXPECT_EQ(kb.version, 2u);
  EXPECT_FALSE(snap.kb->beliefs.query(parse_atom("q(x)")).has_value());
}
