#include <gtest/gtest.h>

#include "scenarios.hpp"

using namespace tro;
namespace sc = tro::scenario;

namespace {

Json fixture_json(const std::string& file) { return Json::parse(sc::slurp(sc::mission_path(file))); }

}  // namespace

TEST(LoadMission, Dive768) {
  const auto m = load_mission(sc::mission_path("dive768.json"));
  EXPECT_EQ(m.name, "dive-768");
  ASSERT_EQ(m.goals.size(), 1u);
  EXPECT_EQ(m.goals[0].condition.str(), "at_depth(surface) & did_survey(zone_a)");  // canonical order
  int zones = 0;
  for (const auto& b : m.bindings) zones += std::holds_alternative<Polygon>(b.value);
  EXPECT_EQ(zones, 1);
  EXPECT_EQ(m.safety.max_depth_m, 6000);
}

TEST(LoadMission, MissingSafetyIsSchemaError) {
  auto j = fixture_json("dive768.json");
  j.erase("safety");
  try {
    parse_mission(j, TRO_MISSIONS_DIR);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("safety"), std::string::npos);
  }
}

TEST(LoadMission, UnboundGoalSymbol) {
  auto j = fixture_json("dive768.json");
  j["goals"][0]["condition"] = "did_survey(zone_q)";
  try {
    parse_mission(j, TRO_MISSIONS_DIR);
    FAIL();
  } catch (const UnboundSymbol& e) {
    EXPECT_EQ(e.symbols(), std::vector<std::string>{"zone_q"});
  }
}

TEST(LoadMission, SchemaPaths) {
  auto j = fixture_json("dive768.json");
  j["bindings"][0]["value"]["vertices"][1] = "oops";
  try {
    parse_mission(j, TRO_MISSIONS_DIR);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("bindings[0].value.vertices[1]"), std::string::npos);
  }
  EXPECT_THROW(load_mission(sc::mission_path("no_such_mission.json")), SchemaError);
}

TEST(LoadMission, AllFixturesLoad) {
  for (const auto* f : {"dive768.json", "override.json", "safety_depth.json", "keep_out.json", "drift.json",
                        "replacement.json"})
    EXPECT_NO_THROW(load_mission(sc::mission_path(f))) << f;
}

TEST(RunMission, SameSeedSameLog) {
  const auto a = sc::run("drift.json", "same-a.jsonl");
  const auto b = sc::run("drift.json", "same-b.jsonl");
  EXPECT_EQ(a.record.digest, b.record.digest);
  EXPECT_EQ(a.record.config_digest, b.record.config_digest);
  const auto la = sc::slurp(a.record.log_path), lb = sc::slurp(b.record.log_path);
  EXPECT_FALSE(la.empty());
  EXPECT_EQ(la, lb);
}

TEST(RunMission, SeedChangesConfigDigest) {
  const auto m = load_mission(sc::mission_path("drift.json"));
  EXPECT_NE(config_digest(m, 1), config_digest(m, 2));
}

TEST(Replay, EmptyLogIsInitialState) {
  std::istringstream in("");
  const auto r = replay_stream(in);
  EXPECT_EQ(r.events, 0u);
  EXPECT_EQ(r.digest, world_digest(World{}));
}

TEST(Replay, TruncatedLineIsCorrupt) {
  const auto out = sc::run("drift.json", "truncated.jsonl");
  auto text = sc::slurp(out.record.log_path);
  text.resize(text.size() - 20);
  const auto lines = std::count(text.begin(), text.end(), '\n') + 1;
  std::istringstream in(text);
  try {
    replay_stream(in);
    FAIL();
  } catch (const CorruptLog& e) {
    EXPECT_EQ(e.line(), static_cast<std::size_t>(lines));
  }
}

TEST(Replay, MatchesLiveDigest) {
  for (const auto* f : {"drift.json", "safety_depth.json", "keep_out.json"}) {
    const auto out = sc::run(f, std::string("replay-") + f + ".jsonl");
    EXPECT_EQ(replay(out.record.log_path), out.record.digest) << f;
  }
}
