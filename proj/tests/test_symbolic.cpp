#include <gtest/gtest.h>

#include <random>

#include "tro/symbolic.hpp"

using namespace tro;

TEST(Literal, ParsesPositiveAtom) {
  const Literal l = parse_literal("did_survey(zone_a)");
  EXPECT_TRUE(l.positive);
  EXPECT_EQ(l.atom.predicate.name(), "did_survey");
  ASSERT_EQ(l.atom.args.size(), 1u);
  EXPECT_EQ(l.atom.args[0].name(), "zone_a");
}

TEST(Literal, ParsesNegation) {
  const Literal l = parse_literal("!calibrated(magnetometer)");
  EXPECT_FALSE(l.positive);
  EXPECT_EQ(l.str(), "!calibrated(magnetometer)");
}

TEST(Literal, ArityFixedAtFirstUse) {
  Signature sig;
  parse_literal("at_depth(surface)", sig);
  EXPECT_THROW(parse_literal("at_depth()", sig), ArityError);
}

TEST(Literal, WhitespaceBetweenTokens) {
  EXPECT_EQ(parse_literal("  ! at ( wp_1 , wp_2 ) ").str(), "!at(wp_1,wp_2)");
}

TEST(Literal, RejectsMalformedText) {
  EXPECT_THROW(parse_literal("did_survey("), SyntaxError);
  EXPECT_THROW(parse_literal("Did(x)"), SyntaxError);
  EXPECT_THROW(parse_literal("a(b) c"), SyntaxError);
  EXPECT_THROW(parse_literal("p(a,b,c,d,e)"), ArityError);
}

TEST(Conjunction, RejectsBothPolarities) {
  EXPECT_THROW(parse_conjunction("p(a) & !p(a)"), ContradictoryConjunction);
}

TEST(Ground, SubstitutesVariables) {
  EXPECT_EQ(ground(parse_param_atom("at(?wp)"), {{"wp", Symbol("wp_1")}}).str(), "at(wp_1)");
  EXPECT_EQ(ground(parse_param_atom("did_survey(?z)"), {{"z", Symbol("zone_a")}}).str(), "did_survey(zone_a)");
}

TEST(Ground, UnboundVariable) {
  try {
    ground(parse_param_atom("at(?wp)"), {});
    FAIL();
  } catch (const UnboundVariable& e) {
    EXPECT_NE(std::string(e.what()).find("wp"), std::string::npos);
  }
}

TEST(Entails, Examples) {
  const AtomSet surface{parse_atom("at_depth(surface)")};
  EXPECT_TRUE(entails(surface, parse_conjunction("at_depth(surface)")));
  EXPECT_TRUE(entails({}, parse_conjunction("!weights_dropped(descent)")));
  const AtomSet cal{parse_atom("calibrated(magnetometer)")};
  EXPECT_FALSE(entails(cal, parse_conjunction("calibrated(magnetometer) & at_depth(operating)")));
}

// Hand truth table over two atoms for the conjunction {a, !b}.
TEST(Entails, TwoAtomTruthTable) {
  const Atom a = parse_atom("p(x)"), b = parse_atom("q(x)");
  const Conjunction c = parse_conjunction("p(x) & !q(x)");
  EXPECT_FALSE(entails({}, c));
  EXPECT_TRUE(entails({a}, c));
  EXPECT_FALSE(entails({b}, c));
  EXPECT_FALSE(entails({a, b}, c));
}

namespace {

const char* const kPreds[] = {"at", "did_survey", "calibrated", "p", "q_2"};
const char* const kSyms[] = {"zone_a", "wp_1", "surface", "x", "magnetometer"};

Literal random_literal(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 4), arity(0, 4), coin(0, 1);
  std::vector<Symbol> args;
  for (int i = arity(rng); i > 0; --i) args.emplace_back(kSyms[pick(rng)]);
  return Literal{Atom(Symbol(kPreds[pick(rng)]), args), coin(rng) == 1};
}

}  // namespace

TEST(LiteralProperty, PrintParseRoundTrip) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Literal l = random_literal(rng);
    EXPECT_EQ(parse_literal(l.str()), l);
  }
}

TEST(EntailsProperty, MonotoneInPositiveLiterals) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    Conjunction c;
    AtomSet state;
    for (int k = 0; k < 3; ++k) {
      Literal l = random_literal(rng);
      l.positive = true;
      c.add(l);
      if (rng() % 2) state.insert(l.atom);
    }
    if (!entails(state, c)) continue;
    AtomSet bigger = state;
    for (int k = 0; k < 4; ++k) bigger.insert(random_literal(rng).atom);
    EXPECT_TRUE(entails(bigger, c));
  }
}

TEST(GroundProperty, IdempotentOnGroundAtoms) {
  std::mt19937_64 rng(13);
  const Substitution sub{{"wp", Symbol("wp_9")}, {"z", Symbol("zone_b")}};
  for (int i = 0; i < 500; ++i) {
    const Atom a = random_literal(rng).atom;
    EXPECT_EQ(ground(lift(a), sub), a);
    EXPECT_EQ(ground(lift(a), {}), a);
  }
}
