#pragma once

// Global safety envelope and the pure check against a vehicle state.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tro/error.hpp"
#include "tro/geometry.hpp"
#include "tro/symbolic.hpp"
#include "tro/values.hpp"
#include "tro/vehicle_sim.hpp"

namespace tro {

struct KeepOutZone {
  Symbol name;
  Polygon polygon;
};

struct SafetyEnvelope {
  double max_depth_m = 6000.0;
  std::vector<KeepOutZone> keep_out;
  double min_battery_wh = 50.0;
  std::optional<double> min_altitude_m;

  void validate() const {
    if (!(max_depth_m > 0)) throw InvalidValue("max_depth must be > 0");
    if (!(min_battery_wh >= 0)) throw InvalidValue("min_battery must be >= 0");
    if (min_altitude_m && !(*min_altitude_m > 0)) throw InvalidValue("min_altitude must be > 0");
    for (const auto& z : keep_out) validate_polygon(z.polygon);
  }
};

enum class ViolationKind { depth_exceeded, keep_out, battery_low, altitude_low };

struct Violation {
  ViolationKind kind;
  Symbol symbol;  // the constraint: max_depth, battery, min_altitude or the zone
  double margin = 0.0;

  std::string str() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    switch (kind) {
      case ViolationKind::depth_exceeded: os << "depth_exceeded by " << margin << " m"; break;
      case ViolationKind::keep_out: os << "keep_out_violation(" << symbol.name() << ") " << margin << " m inside"; break;
      case ViolationKind::battery_low: os << "battery_low(margin " << margin << " Wh)"; break;
      case ViolationKind::altitude_low: os << "altitude_low by " << margin << " m"; break;
    }
    return os.str();
  }
};

inline const char* violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::depth_exceeded: return "depth_exceeded";
    case ViolationKind::keep_out: return "keep_out_violation";
    case ViolationKind::battery_low: return "battery_low";
    case ViolationKind::altitude_low: return "altitude_low";
  }
  return "?";
}

inline std::vector<Violation> check_safety(const sim::VehicleState& v, const SafetyEnvelope& env) {
  std::vector<Violation> out;
  if (v.position.depth > env.max_depth_m)
    out.push_back({ViolationKind::depth_exceeded, Symbol("max_depth"), v.position.depth - env.max_depth_m});
  for (const auto& z : env.keep_out) {
    const geo::Vec2 p = v.position.xy();
    if (geo::contains(z.polygon.vertices, p, 0.0) && !(geo::boundary_distance(z.polygon.vertices, p) == 0.0))
      out.push_back({ViolationKind::keep_out, z.name, geo::boundary_distance(z.polygon.vertices, p)});
  }
  if (v.battery_wh < env.min_battery_wh)
    out.push_back({ViolationKind::battery_low, Symbol("battery"), env.min_battery_wh - v.battery_wh});
  if (env.min_altitude_m && v.dvl_altitude_m && *v.dvl_altitude_m < *env.min_altitude_m)
    out.push_back({ViolationKind::altitude_low, Symbol("min_altitude"), *env.min_altitude_m - *v.dvl_altitude_m});
  return out;
}

}  // namespace tro
