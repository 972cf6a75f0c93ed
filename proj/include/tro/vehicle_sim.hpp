#pragma once

// Lets tests check that a translation unit never pulled the simulator in.
#define TRO_HAS_VEHICLE_SIM 1

// Kinematic AUV stand-in: pose, ballast-driven depth, DVL altitude over a
// gridded seafloor, battery drain and current disturbance. Deterministic for
// a given (state, environment, command, dt).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tro/error.hpp"
#include "tro/geometry.hpp"
#include "tro/values.hpp"

namespace tro::sim {

// Placeholder rates and power draws; every tunable of the model lives here.
struct VehicleConfig {
  double descent_rate_mps = 0.7;
  double ascent_rate_mps = 0.8;
  double thruster_vertical_adjust_mps = 0.2;
  double max_turn_rate_dps = 20.0;
  double cruise_power_w = 150.0;
  double hover_power_w = 60.0;
  double vertical_power_w = 250.0;
  double dvl_range_m = 100.0;
  double max_speed_mps = 2.5;
};

enum class Fins { level, descent_cfg, ascent_cfg };
enum class ThrusterMode { off, cruise, vertical, ascent };
enum class WeightSet { descent, ascent };
enum class Motion { none, goto_point, hold };

inline const char* fins_name(Fins f) {
  switch (f) {
    case Fins::level: return "level";
    case Fins::descent_cfg: return "descent_cfg";
    case Fins::ascent_cfg: return "ascent_cfg";
  }
  return "?";
}
inline const char* thruster_name(ThrusterMode m) {
  switch (m) {
    case ThrusterMode::off: return "off";
    case ThrusterMode::cruise: return "cruise";
    case ThrusterMode::vertical: return "vertical";
    case ThrusterMode::ascent: return "ascent";
  }
  return "?";
}
inline const char* weight_name(WeightSet w) { return w == WeightSet::descent ? "descent" : "ascent"; }
inline const char* motion_name(Motion m) {
  switch (m) {
    case Motion::none: return "none";
    case Motion::goto_point: return "goto";
    case Motion::hold: return "hold";
  }
  return "?";
}

inline Fins parse_fins(const std::string& s) {
  for (auto f : {Fins::level, Fins::descent_cfg, Fins::ascent_cfg})
    if (s == fins_name(f)) return f;
  throw InvalidCommand("unknown fin configuration '" + s + "'");
}
inline ThrusterMode parse_thruster(const std::string& s) {
  for (auto m : {ThrusterMode::off, ThrusterMode::cruise, ThrusterMode::vertical, ThrusterMode::ascent})
    if (s == thruster_name(m)) return m;
  throw InvalidCommand("unknown thruster mode '" + s + "'");
}
inline WeightSet parse_weights(const std::string& s) {
  if (s == "descent") return WeightSet::descent;
  if (s == "ascent") return WeightSet::ascent;
  throw InvalidCommand("unknown weight set '" + s + "'");
}
inline Motion parse_motion(const std::string& s) {
  for (auto m : {Motion::none, Motion::goto_point, Motion::hold})
    if (s == motion_name(m)) return m;
  throw InvalidCommand("unknown motion '" + s + "'");
}

struct VehicleState {
  Point position;
  double heading_deg = 0.0;  // counter-clockwise from east
  double speed_mps = 0.0;
  double vertical_rate_mps = 0.0;  // positive down
  double battery_wh = 2000.0;
  bool descent_weights_dropped = false;
  bool ascent_weights_dropped = false;
  Fins fins = Fins::level;
  ThrusterMode thruster = ThrusterMode::off;
  std::optional<double> dvl_altitude_m;
  double t = 0.0;
  Motion motion = Motion::none;
  geo::Vec2 goto_target;
  double goto_speed_mps = 0.0;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

// Commands -------------------------------------------------------------------

struct GotoCmd {
  geo::Vec2 target;
  double speed_mps = 1.0;
};
struct SetFinsCmd {
  Fins fins = Fins::level;
};
struct DropWeightsCmd {
  WeightSet which = WeightSet::descent;
};
struct SetThrusterCmd {
  ThrusterMode mode = ThrusterMode::off;
};
struct HoldStationCmd {};
struct AllStopCmd {};

using ActuationCmd = std::variant<GotoCmd, SetFinsCmd, DropWeightsCmd, SetThrusterCmd, HoldStationCmd, AllStopCmd>;

inline std::string describe(const ActuationCmd& cmd) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GotoCmd>) {
          std::ostringstream os;
          os << "goto(" << c.target.x << "," << c.target.y << " @ " << c.speed_mps << ")";
          return os.str();
        } else if constexpr (std::is_same_v<T, SetFinsCmd>) {
          return std::string("set_fins(") + fins_name(c.fins) + ")";
        } else if constexpr (std::is_same_v<T, DropWeightsCmd>) {
          return std::string("drop_weights(") + weight_name(c.which) + ")";
        } else if constexpr (std::is_same_v<T, SetThrusterCmd>) {
          return std::string("set_thruster_mode(") + thruster_name(c.mode) + ")";
        } else if constexpr (std::is_same_v<T, HoldStationCmd>) {
          return "hold_station";
        } else {
          return "all_stop";
        }
      },
      cmd);
}

// Environment ------------------------------------------------------------------

// Seafloor depth grid, row-major with x varying fastest.
struct Bathymetry {
  double x0 = 0.0, y0 = 0.0, dx = 1.0, dy = 1.0;
  std::size_t nx = 0, ny = 0;
  std::vector<double> depths;

  static Bathymetry flat(double depth, double x0, double y0, double x1, double y1) {
    return Bathymetry{x0, y0, x1 - x0, y1 - y0, 2, 2, {depth, depth, depth, depth}};
  }

  double x1() const { return x0 + dx * static_cast<double>(nx - 1); }
  double y1() const { return y0 + dy * static_cast<double>(ny - 1); }
  bool in_extent(double x, double y) const { return x >= x0 && x <= x1() && y >= y0 && y <= y1(); }

  double node(std::size_t i, std::size_t j) const { return depths[j * nx + i]; }

  double at(double x, double y) const {
    if (!in_extent(x, y))
      throw OutOfExtent("(" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the bathymetry grid");
    const double fx = (x - x0) / dx, fy = (y - y0) / dy;
    const auto i = std::min(static_cast<std::size_t>(fx), nx - 2);
    const auto j = std::min(static_cast<std::size_t>(fy), ny - 2);
    const double u = fx - static_cast<double>(i), v = fy - static_cast<double>(j);
    return (1 - u) * (1 - v) * node(i, j) + u * (1 - v) * node(i + 1, j) + (1 - u) * v * node(i, j + 1) +
           u * v * node(i + 1, j + 1);
  }

  // Nearest in-extent value; the simulator never leaves the map.
  double clamped(double x, double y) const {
    return at(std::clamp(x, x0, x1()), std::clamp(y, y0, y1()));
  }

  void validate() const {
    if (nx < 2 || ny < 2) throw InvalidValue("bathymetry grid needs at least 2x2 nodes");
    if (!(dx > 0) || !(dy > 0)) throw InvalidValue("bathymetry spacing must be > 0");
    if (depths.size() != nx * ny)
      throw InvalidValue("bathymetry has " + std::to_string(depths.size()) + " values, expected " +
                         std::to_string(nx * ny));
    for (double d : depths)
      if (!(d > 0) || !std::isfinite(d)) throw InvalidValue("seafloor depth must be > 0 everywhere");
  }
};

// CSV: optional `x0,y0,dx,dy,nx,ny` name line, the six header values, then
// nx*ny depths (any line breaking).
inline Bathymetry parse_bathymetry_csv(std::istream& in) {
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    if (line.find_first_of("abcdefghijklmnopqrstuvwxyz") != std::string::npos) {
      if (values.empty()) continue;
      throw InvalidValue("unexpected text in bathymetry data: " + line);
    }
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidValue("bad bathymetry value '" + cell + "'");
      }
    }
  }
  if (values.size() < 6) throw InvalidValue("bathymetry header needs x0,y0,dx,dy,nx,ny");
  Bathymetry b{values[0], values[1], values[2], values[3], static_cast<std::size_t>(values[4]),
               static_cast<std::size_t>(values[5]), {values.begin() + 6, values.end()}};
  b.validate();
  return b;
}

inline Bathymetry load_bathymetry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidValue("cannot open bathymetry file " + path);
  return parse_bathymetry_csv(in);
}

// Extra velocity applied during [t0, t1).
struct Disturbance {
  double t0 = 0.0, t1 = 0.0;
  double east_mps = 0.0, north_mps = 0.0, down_mps = 0.0;
};

struct EnvironmentSpec {
  Bathymetry bathymetry = Bathymetry::flat(4100.0, -20000.0, -20000.0, 20000.0, 20000.0);
  double current_east_mps = 0.0;
  double current_north_mps = 0.0;
  double noise_amplitude_mps = 0.0;
  std::uint64_t seed = 0;
  std::vector<Disturbance> disturbances;
  VehicleConfig vehicle;
};

// Step -------------------------------------------------------------------------

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double wrap180(double deg) {
  deg = std::fmod(deg + 180.0, 360.0);
  if (deg < 0) deg += 360.0;
  return deg - 180.0;
}
}  // namespace detail

struct CommandResult {
  VehicleState state;
  std::optional<std::string> warning;
};

// Immediate effect of a command. Re-dropping weights is a no-op with a
// warning; bad speeds are rejected.
inline CommandResult apply_command(VehicleState s, const ActuationCmd& cmd, const VehicleConfig& cfg = {}) {
  CommandResult r;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GotoCmd>) {
          if (!(c.speed_mps > 0.0) || c.speed_mps > cfg.max_speed_mps)
            throw InvalidCommand("goto speed must be in (0, " + std::to_string(cfg.max_speed_mps) + "] m/s");
          if (!std::isfinite(c.target.x) || !std::isfinite(c.target.y)) throw InvalidCommand("goto target not finite");
          s.motion = Motion::goto_point;
          s.goto_target = c.target;
          s.goto_speed_mps = c.speed_mps;
          s.thruster = ThrusterMode::cruise;
        } else if constexpr (std::is_same_v<T, SetFinsCmd>) {
          s.fins = c.fins;
        } else if constexpr (std::is_same_v<T, DropWeightsCmd>) {
          bool& flag = c.which == WeightSet::descent ? s.descent_weights_dropped : s.ascent_weights_dropped;
          if (flag) r.warning = std::string(weight_name(c.which)) + " weights already dropped";
          flag = true;
        } else if constexpr (std::is_same_v<T, SetThrusterCmd>) {
          s.thruster = c.mode;
        } else if constexpr (std::is_same_v<T, HoldStationCmd>) {
          s.motion = Motion::hold;
        } else {
          s.motion = Motion::none;
          s.thruster = ThrusterMode::off;
        }
      },
      cmd);
  r.state = s;
  return r;
}

inline double power_draw_w(const VehicleState& s, const VehicleConfig& cfg = {}) {
  if (s.thruster == ThrusterMode::vertical || s.thruster == ThrusterMode::ascent) return cfg.vertical_power_w;
  if (s.motion == Motion::goto_point) return cfg.cruise_power_w;
  return cfg.hover_power_w;
}

inline double base_vertical_rate(const VehicleState& s, const VehicleConfig& cfg = {}) {
  if (s.ascent_weights_dropped) return -cfg.ascent_rate_mps;
  if (!s.descent_weights_dropped && s.fins == Fins::descent_cfg) return cfg.descent_rate_mps;
  return 0.0;
}

inline double vertical_rate(const VehicleState& s, const VehicleConfig& cfg = {}) {
  const double base = base_vertical_rate(s, cfg);
  double rate = base;
  if (s.thruster == ThrusterMode::vertical) rate -= cfg.thruster_vertical_adjust_mps * ((base > 0) - (base < 0));
  if (s.thruster == ThrusterMode::ascent) rate -= cfg.thruster_vertical_adjust_mps;
  return rate;
}

inline std::optional<double> dvl_altitude(const Point& p, const EnvironmentSpec& env) {
  const double alt = env.bathymetry.clamped(p.x, p.y) - p.depth;
  if (alt <= env.vehicle.dvl_range_m) return alt;
  return std::nullopt;
}

inline VehicleState step(VehicleState s, const EnvironmentSpec& env, const std::optional<ActuationCmd>& cmd,
                         double dt) {
  if (!(dt > 0.0) || dt > 10.0) throw InvalidCommand("dt must be in (0, 10] s");
  const auto& cfg = env.vehicle;
  if (cmd) s = apply_command(s, *cmd, cfg).state;

  const double power = power_draw_w(s, cfg);

  // Horizontal.
  double vx = 0.0, vy = 0.0;
  s.speed_mps = 0.0;
  if (s.motion == Motion::goto_point) {
    const geo::Vec2 pos = s.position.xy();
    const geo::Vec2 to = s.goto_target - pos;
    const double dist = geo::norm(to);
    if (dist > 1e-9) {
      const double want = geo::rad2deg(std::atan2(to.y, to.x));
      const double err = detail::wrap180(want - s.heading_deg);
      const double turn = std::clamp(err, -cfg.max_turn_rate_dps * dt, cfg.max_turn_rate_dps * dt);
      s.heading_deg = detail::wrap180(s.heading_deg + turn);
      const double residual = geo::deg2rad(detail::wrap180(want - s.heading_deg));
      const double advance = s.goto_speed_mps * dt * std::max(0.0, std::cos(residual));
      if (advance >= dist) {
        s.position.x = s.goto_target.x;
        s.position.y = s.goto_target.y;
      } else {
        const double h = geo::deg2rad(s.heading_deg);
        s.position.x += advance * std::cos(h);
        s.position.y += advance * std::sin(h);
      }
      s.speed_mps = std::min(advance, dist) / dt;
    }
  }
  double down = 0.0;
  if (s.motion != Motion::hold) {
    vx += env.current_east_mps;
    vy += env.current_north_mps;
    if (env.noise_amplitude_mps > 0.0) {
      const auto tick = static_cast<std::uint64_t>(std::llround(s.t * 1000.0));
      std::mt19937_64 rng(detail::splitmix64(env.seed ^ detail::splitmix64(tick)));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      vx += env.noise_amplitude_mps * u(rng);
      vy += env.noise_amplitude_mps * u(rng);
    }
    for (const auto& d : env.disturbances) {
      if (s.t >= d.t0 && s.t < d.t1) {
        vx += d.east_mps;
        vy += d.north_mps;
        down += d.down_mps;
      }
    }
    s.position.x += vx * dt;
    s.position.y += vy * dt;
  }

  // Vertical.
  s.vertical_rate_mps = vertical_rate(s, cfg) + down;
  const double floor = env.bathymetry.clamped(s.position.x, s.position.y);
  s.position.depth = std::clamp(s.position.depth + s.vertical_rate_mps * dt, 0.0, floor);

  s.battery_wh = std::max(0.0, s.battery_wh - power * dt / 3600.0);
  s.t += dt;
  s.dvl_altitude_m = dvl_altitude(s.position, env);
  return s;
}

struct SensorFrame {
  Point position;
  double depth = 0.0;
  std::optional<double> dvl_altitude_m;
  double battery_wh = 0.0;
  double t = 0.0;
};

inline SensorFrame sense(const VehicleState& s, const EnvironmentSpec& env) {
  return SensorFrame{s.position, s.position.depth, dvl_altitude(s.position, env), s.battery_wh, s.t};
}

}  // namespace tro::sim
