#pragma once

// Built-in behavior sets a mission can load by name.

#include <string>
#include <vector>

#include "tro/behavior.hpp"
#include "tro/error.hpp"

namespace tro {

inline std::vector<BehaviorSpec> sentry_core_behaviors() {
  using K = ActuationKind;
  std::vector<BehaviorSpec> out;
  out.push_back(BehaviorBuilder("goto(?wp)").adds("at(?wp)").until(ReachedWaypoint{5.0}).command(K::goto_point, "?wp", 1.0).build());
  // Tight capture for replaying a recorded track point by point.
  out.push_back(BehaviorBuilder("goto_precise(?wp)")
                    .adds("at(?wp)")
                    .until(ReachedWaypoint{0.01})
                    .command(K::goto_point, "?wp", 1.0)
                    .build());
  out.push_back(BehaviorBuilder("set_fins(?cfg)").command(K::set_fins, "?cfg").build());
  out.push_back(BehaviorBuilder("wait_until_depth(?d)")
                    .until(DepthWithin{0.0, 1.0, Variable{"d"}})
                    .command(K::none)
                    .build());
  out.push_back(BehaviorBuilder("wait_until_dvl(?a)")
                    .until(DvlAltitudeBelow{0.0, Variable{"a"}})
                    .command(K::none)
                    .build());
  // `on` selects vertical thrust, `off` cuts it.
  out.push_back(BehaviorBuilder("vertical_thrust(?m)").command(K::set_thruster_mode, "?m").build());
  out.push_back(BehaviorBuilder("drop_weights(?which)").command(K::drop_weights, "?which").build());
  out.push_back(BehaviorBuilder("set_thruster_mode(?m)").command(K::set_thruster_mode, "?m").build());
  out.push_back(BehaviorBuilder("hold_station").until(Elapsed{60.0}).command(K::hold_station).build());

  out.push_back(BehaviorBuilder("descend")
                    .pre("at_depth(surface)")
                    .adds("at_depth(operating)")
                    .deletes("at_depth(surface)")
                    .children({"set_fins(descent_cfg)", "wait_until_depth(op_depth_band)",
                               "wait_until_dvl(alt_threshold)", "vertical_thrust(on)", "drop_weights(descent)"})
                    .build());
  out.push_back(BehaviorBuilder("calibrate_magnetometer")
                    .pre("at_depth(operating)")
                    .adds("calibrated(magnetometer)")
                    .until(Elapsed{120.0})
                    .command(K::hold_station)
                    .build());
  out.push_back(BehaviorBuilder("ascend")
                    .pre("at_depth(operating)")
                    .adds("at_depth(surface)")
                    .deletes("at_depth(operating)")
                    .children({"drop_weights(ascent)", "set_thruster_mode(ascent)", "wait_until_depth(surface_band)"})
                    .build());
  out.push_back(BehaviorBuilder("ready_for_recovery_seq")
                    .adds("ready_for_recovery()")
                    .adds("at_depth(surface)")
                    .deletes("at_depth(operating)")
                    .children({"drop_weights(ascent)", "set_thruster_mode(ascent)", "wait_until_depth(surface_band)",
                               "hold_station"})
                    .build());
  return out;
}

// Responses to envelope violations. Each is tied to its constraint kind by a
// precondition so the planner cannot use one for the other.
inline std::vector<BehaviorSpec> safety_behaviors() {
  std::vector<BehaviorSpec> out;
  out.push_back(BehaviorBuilder("climb_to_safe_depth(?limit)")
                    .pre("depth_limit(?limit)")
                    .deletes("violated(?limit)")
                    .children({"set_fins(level)", "drop_weights(descent)", "set_thruster_mode(ascent)",
                               "wait_until_depth(safe_depth)"})
                    .build());
  out.push_back(BehaviorBuilder("exit_keep_out(?z)")
                    .pre("keep_out_zone(?z)")
                    .deletes("violated(?z)")
                    .children({"goto(retreat_point)"})
                    .build());
  return out;
}

inline std::vector<BehaviorSpec> sampling_behaviors() {
  using K = ActuationKind;
  std::vector<BehaviorSpec> out;
  // Thrusters off while the sampler deploys, so the vehicle drifts.
  out.push_back(BehaviorBuilder("deploy_sampler(?w)")
                    .pre("at(?w)")
                    .adds("sampler_deployed(?w)")
                    .until(Elapsed{300.0})
                    .command(K::all_stop)
                    .build());
  out.push_back(BehaviorBuilder("take_sample(?w)")
                    .pre("at(?w)")
                    .pre("sampler_deployed(?w)")
                    .adds("sampled(?w)")
                    .until(Elapsed{60.0})
                    .command(K::hold_station)
                    .build());
  return out;
}

inline const std::vector<std::string>& behavior_module_names() {
  static const std::vector<std::string> names{"sentry_core", "safety", "sampling"};
  return names;
}

inline std::vector<BehaviorSpec> behavior_module(const std::string& name) {
  if (name == "sentry_core") return sentry_core_behaviors();
  if (name == "safety") return safety_behaviors();
  if (name == "sampling") return sampling_behaviors();
  throw UnknownBehavior("unknown behavior module '" + name + "'");
}

}  // namespace tro
