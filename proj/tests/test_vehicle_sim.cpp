#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tro/vehicle_sim.hpp"

using namespace tro;
using namespace tro::sim;

namespace {

EnvironmentSpec flat_env(double depth = 4000) {
  EnvironmentSpec env;
  env.bathymetry = Bathymetry::flat(depth, -10000, -10000, 10000, 10000);
  return env;
}

VehicleState run(VehicleState s, const EnvironmentSpec& env, std::optional<ActuationCmd> cmd, int steps, double dt) {
  for (int i = 0; i < steps; ++i) {
    s = step(s, env, cmd, dt);
    cmd.reset();
  }
  return s;
}

}  // namespace

TEST(Step, DescentRate) {
  VehicleState s;
  const auto out = run(s, flat_env(), SetFinsCmd{Fins::descent_cfg}, 10, 10.0);
  EXPECT_NEAR(out.position.depth, 70.0, 1e-9);
  EXPECT_NEAR(out.t, 100.0, 1e-9);
}

TEST(Step, HoldStationEnergy) {
  VehicleState s;
  s.position = Point{10, 20, 500};
  const auto out = run(s, flat_env(), HoldStationCmd{}, 6, 10.0);
  EXPECT_EQ(out.position.x, 10);
  EXPECT_EQ(out.position.y, 20);
  EXPECT_NEAR(s.battery_wh - out.battery_wh, 1.0, 1e-9);
}

TEST(Step, GotoEast) {
  VehicleState s;
  s.heading_deg = 0;
  const auto out = run(s, flat_env(), GotoCmd{{100, 0}, 1.0}, 100, 1.0);
  EXPECT_LE(std::hypot(out.position.x - 100, out.position.y), 5.0);
}

TEST(Step, TurnRateLimited) {
  VehicleState s;
  s.heading_deg = 0;
  const auto out = step(s, flat_env(), GotoCmd{{0, 100}, 1.0}, 1.0);
  EXPECT_NEAR(out.heading_deg, 20.0, 1e-9);
}

TEST(Step, AscentAfterWeightsDrop) {
  VehicleState s;
  s.position.depth = 1000;
  s.descent_weights_dropped = true;
  const auto out = run(s, flat_env(), DropWeightsCmd{WeightSet::ascent}, 10, 10.0);
  EXPECT_NEAR(out.position.depth, 1000 - 80.0, 1e-9);
}

TEST(Step, RejectsBadDt) {
  EXPECT_THROW(step(VehicleState{}, flat_env(), std::nullopt, 0.0), InvalidCommand);
  EXPECT_THROW(step(VehicleState{}, flat_env(), std::nullopt, 60.0), InvalidCommand);
}

TEST(Step, RejectsBadSpeed) {
  EXPECT_THROW(step(VehicleState{}, flat_env(), GotoCmd{{1, 1}, 3.0}, 1.0), InvalidCommand);
}

TEST(Sense, DvlRange) {
  const auto env = flat_env(4000);
  VehicleState s;
  s.position.depth = 3900;
  EXPECT_EQ(sense(s, env).dvl_altitude_m, 100.0);
  s.position.depth = 100;
  EXPECT_FALSE(sense(s, env).dvl_altitude_m.has_value());
  s.position.depth = 0;
  EXPECT_EQ(sense(s, env).depth, 0.0);
}

TEST(Bathymetry, NodesAndInterpolation) {
  const Bathymetry b{0, 0, 100, 100, 2, 2, {4000, 4100, 4000, 4100}};
  EXPECT_EQ(b.at(0, 0), 4000);
  EXPECT_EQ(b.at(100, 100), 4100);
  EXPECT_DOUBLE_EQ(b.at(50, 50), 4050);
  EXPECT_THROW(b.at(-1, 0), OutOfExtent);
}

TEST(Bathymetry, ParsesCsv) {
  std::istringstream in("x0,y0,dx,dy,nx,ny\n0,0,10,20,3,2\n1,2,3\n4,5,6\n");
  const auto b = parse_bathymetry_csv(in);
  EXPECT_EQ(b.nx, 3u);
  EXPECT_EQ(b.ny, 2u);
  EXPECT_EQ(b.at(20, 0), 3);
  EXPECT_EQ(b.at(0, 20), 4);
  EXPECT_DOUBLE_EQ(b.at(5, 10), (1 + 2 + 4 + 5) / 4.0);
}

TEST(Bathymetry, RejectsShortGrid) {
  std::istringstream in("0,0,10,10,3,3\n1,2,3\n");
  EXPECT_THROW(parse_bathymetry_csv(in), InvalidValue);
}

namespace {

ActuationCmd random_cmd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-500, 500);
  switch (rng() % 6) {
    case 0: return GotoCmd{{u(rng), u(rng)}, 0.5 + (rng() % 4) * 0.5};
    case 1: return SetFinsCmd{static_cast<Fins>(rng() % 3)};
    case 2: return DropWeightsCmd{static_cast<WeightSet>(rng() % 2)};
    case 3: return SetThrusterCmd{static_cast<ThrusterMode>(rng() % 4)};
    case 4: return HoldStationCmd{};
    default: return AllStopCmd{};
  }
}

// Power for the declared mode, written out independently of the sim.
double declared_power(const VehicleState& s) {
  if (s.thruster == ThrusterMode::vertical || s.thruster == ThrusterMode::ascent) return 250;
  if (s.motion == Motion::goto_point) return 150;
  return 60;
}

}  // namespace

TEST(SimProperty, Deterministic) {
  EnvironmentSpec env = flat_env(300);
  env.noise_amplitude_mps = 0.2;
  env.current_east_mps = 0.05;
  env.seed = 99;
  std::mt19937_64 a(41), b(41);
  VehicleState sa, sb;
  for (int i = 0; i < 2000; ++i) {
    std::optional<ActuationCmd> ca, cb;
    if (a() % 10 == 0) ca = random_cmd(a);
    if (b() % 10 == 0) cb = random_cmd(b);
    sa = step(sa, env, ca, 1.0);
    sb = step(sb, env, cb, 1.0);
    ASSERT_EQ(sa, sb);
  }
}

TEST(SimProperty, WeightsNeverRevert) {
  const auto env = flat_env(300);
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    VehicleState s;
    bool d = false, a = false;
    for (int i = 0; i < 400; ++i) {
      std::optional<ActuationCmd> c;
      if (rng() % 3 == 0) c = random_cmd(rng);
      s = step(s, env, c, 1.0 + static_cast<double>(rng() % 9));
      EXPECT_TRUE(!d || s.descent_weights_dropped);
      EXPECT_TRUE(!a || s.ascent_weights_dropped);
      d = s.descent_weights_dropped;
      a = s.ascent_weights_dropped;
    }
  }
}

TEST(SimProperty, EnergyAccounting) {
  const auto env = flat_env(300);
  std::mt19937_64 rng(43);
  VehicleState s;
  s.battery_wh = 1e6;
  const double start = s.battery_wh;
  double integral = 0;
  for (int i = 0; i < 5000; ++i) {
    std::optional<ActuationCmd> c;
    if (rng() % 5 == 0) c = random_cmd(rng);
    const double dt = 0.5 + static_cast<double>(rng() % 19) * 0.5;
    const VehicleState commanded = c ? apply_command(s, *c).state : s;
    integral += declared_power(commanded) * dt / 3600.0;
    s = step(s, env, c, dt);
  }
  EXPECT_NEAR(start - s.battery_wh, integral, 1e-6);
}

TEST(SimProperty, NeverBelowSeafloor) {
  std::istringstream in("x0,y0,dx,dy,nx,ny\n-1000,-1000,500,500,5,5\n"
                        "200,220,240,260,280\n210,230,250,270,290\n220,240,260,280,300\n"
                        "230,250,270,290,310\n240,260,280,300,320\n");
  EnvironmentSpec env;
  env.bathymetry = parse_bathymetry_csv(in);
  env.disturbances.push_back({0, 1e9, 0, 0, 0.5});
  std::mt19937_64 rng(44);
  VehicleState s;
  for (int i = 0; i < 3000; ++i) {
    std::optional<ActuationCmd> c;
    if (rng() % 20 == 0) c = GotoCmd{{-900.0 + rng() % 1800, -900.0 + rng() % 1800}, 2.0};
    s = step(s, env, c, 1.0);
    ASSERT_LE(s.position.depth, env.bathymetry.clamped(s.position.x, s.position.y) + 1e-9);
  }
}
