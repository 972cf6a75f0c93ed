// Replays a recorded run with no simulator in the build: this translation
// unit must not see the vehicle model at all.

#include <gtest/gtest.h>

#include <fstream>

#include "tro/replay.hpp"

#ifdef TRO_HAS_VEHICLE_SIM
#error "replay pulled in the vehicle simulator"
#endif

namespace {
std::string g_log, g_record;
}

TEST(ReplayWithoutSim, DigestMatchesRunRecord) {
  ASSERT_FALSE(g_log.empty());
  std::ifstream rec(g_record);
  ASSERT_TRUE(rec) << g_record;
  const auto record = tro::Json::parse(rec);
  const auto r = tro::replay_file(g_log);
  EXPECT_GT(r.events, 0u);
  EXPECT_EQ(r.digest, record.at("digest").get<std::string>());
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <log.jsonl> <record.json>\n", argv[0]);
    return 2;
  }
  g_log = argv[1];
  g_record = argv[2];
  return RUN_ALL_TESTS();
}
