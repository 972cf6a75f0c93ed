// Scenario-level acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "scenarios.hpp"

#ifndef TRO_REPLAY_DIGEST
#error "TRO_REPLAY_DIGEST must name the sim-free replay binary"
#endif

using namespace tro;
namespace sc = tro::scenario;

namespace {

// Tolerances and budgets.
constexpr double kDiveBudgetS = 10.0;
constexpr double kCoverageBudgetS = 60.0;
constexpr double kCoverageFloor = 0.999;
constexpr double kSquareLengthTolM = 0.01;
constexpr double kReplacementTolM = 0.01;
constexpr double kCaptureRadiusM = 5.0;  // goto capture radius
constexpr double kDeliveryFloor = 0.99;
constexpr int kCoverageZones = 500;
constexpr int kPlannerDomains = 1200;
constexpr int kPlannerSolvableFloor = 500;  // cost comparisons, not just agreement on unsolvable
constexpr int kLinkTrials = 1000;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Report {
  int failed = 0;
  void line(int n, bool ok, const std::string& what, const std::string& detail) {
    std::printf("criterion %2d: %s  %s (%s)\n", n, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    failed += !ok;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sim_free_replay(const std::string& log) {
  const std::string cmd = std::string(TRO_REPLAY_DIGEST) + " '" + log + "'";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return "popen failed";
  char buf[128] = {0};
  std::string out;
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  ::pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out;
}

std::vector<std::string> step_names(const Plan& p, const BehaviorStore& b) {
  std::vector<std::string> out;
  for (const auto& s : p.steps) out.push_back(step_text(s, b));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

int main() {
  Report report;
  std::vector<std::pair<std::string, sc::Outcome>> logs;  // replayed under criterion 9

  // 1. Dive-768.
  std::vector<Event> baseline;
  {
    const auto m = load_mission(sc::mission_path("dive768.json"));
    auto ex = build_executive(m, m.seed);
    const auto plan = ex->preview_plan();
    const auto names = plan ? step_names(*plan, ex->world().kb.behaviors) : std::vector<std::string>{};
    const bool plan_ok = names == std::vector<std::string>{"descend", "calibrate_magnetometer", "survey_zone_a", "ascend"};
    auto t0 = std::chrono::steady_clock::now();
    auto a = sc::run("dive768.json", "acc-dive-a.jsonl");
    const double wall_a = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto b = sc::run("dive768.json", "acc-dive-b.jsonl");
    const double wall_b = seconds_since(t0);
    const bool identical = sc::slurp(a.record.log_path) == sc::slurp(b.record.log_path) && a.record.digest == b.record.digest;
    const bool ok = plan_ok && a.record.all_achieved && identical && wall_a < kDiveBudgetS && wall_b < kDiveBudgetS;
    report.line(1, ok, "dive-768 plan, completion, bit-identical logs",
                "plan [" + join(names) + "], achieved " + (a.record.all_achieved ? "yes" : "no") + ", identical " +
                    (identical ? "yes" : "no") + ", wall " + fmt("%.2f", wall_a) + "/" + fmt("%.2f", wall_b) + " s");
    baseline = a.events;
    logs.emplace_back("dive768", std::move(a));
  }

  // 2. Operator override.
  {
    auto out = sc::run("override.json", "acc-override.jsonl");
    bool verdict_ok = false, overridden = false, calibrated = false;
    for (const auto& e : out.events) {
      if (e.kind == "plan_overridden") {
        overridden = true;
        verdict_ok = e.data.at("verdict").at("ok").get<bool>();
      }
      if (e.kind == "behavior_started" && e.data.at("behavior_name") == "calibrate_magnetometer") calibrated = true;
    }
    const bool ok = overridden && verdict_ok && !calibrated && out.record.all_achieved;
    report.line(2, ok, "override without calibration validates and completes",
                std::string("verdict ") + (verdict_ok ? "ok" : "failed") + ", calibration run " +
                    (calibrated ? "yes" : "no") + ", achieved " + (out.record.all_achieved ? "yes" : "no"));
    logs.emplace_back("override", std::move(out));
  }

  // 3. Acoustic abort 30 minutes before the anticipated end of the survey.
  {
    const double t_end = sc::survey_end(baseline);
    auto r = sc::run_abort("dive768.json", t_end - 1800.0, "acc-abort.jsonl");
    const auto c = sc::check_abort(r);
    const std::vector<std::string> want{"drop_weights(ascent)", "set_thruster_mode(ascent)",
                                        "wait_until_depth(surface_band)", "hold_station"};
    const bool halted_in_time = c.halted_at >= 0 && c.halted_at - c.arrival <= 1.0;
    const bool ok = t_end > 0 && c.delivered && halted_in_time && c.recovery_children == want && c.reached_surface &&
                    c.weights_dropped;
    report.line(3, ok, "acoustic abort halts the survey and recovers",
                "sent t=" + fmt("%.0f", t_end - 1800) + ", attempts " + std::to_string(r.sent ? r.sent->attempts : 0) +
                    ", arrival t=" + fmt("%.0f", c.arrival) + ", halted t=" + fmt("%.0f", c.halted_at) +
                    ", recovery [" + join(c.recovery_children) + "], depth " +
                    fmt("%.2f", r.outcome.vehicle.position.depth) + " m");
    logs.emplace_back("abort", std::move(r.outcome));
  }

  // 4. Coverage.
  {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0, 1);
    int good = 0;
    double worst = 1.0;
    for (int i = 0; i < kCoverageZones; ++i) {
      const Polygon z = oracle::random_convex_zone(rng);
      const double s = 50 + (std::min(500.0, 0.9 * geo::diameter(z.vertices)) - 50) * u(rng);
      const auto t = generate_tracklines({z, s, 360 * u(rng), std::nullopt});
      const double f = coverage_fraction(z, t.path, s, s / 20);
      worst = std::min(worst, f);
      good += f >= kCoverageFloor;
    }
    const Polygon square{{{0, 0}, {1000, 0}, {1000, 1000}, {0, 1000}}};
    const auto sq = generate_tracklines({square, 200, 0, std::nullopt});
    const double wall = seconds_since(t0);
    const bool ok = good == kCoverageZones && sq.line_count == 5 &&
                    std::abs(sq.total_length_m - 5800.0) <= kSquareLengthTolM && wall < kCoverageBudgetS;
    report.line(4, ok, "coverage on random convex zones and the square fixture",
                std::to_string(good) + "/" + std::to_string(kCoverageZones) + " zones, worst " + fmt("%.5f", worst) +
                    ", square " + std::to_string(sq.line_count) + " lines " + fmt("%.3f", sq.total_length_m) +
                    " m, wall " + fmt("%.1f", wall) + " s");
  }

  // 5. Planner optimality against exhaustive search.
  {
    int agree = 0, solvable = 0, deterministic = 0;
    for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(kPlannerDomains); ++seed) {
      const auto d = oracle::random_domain(seed);
      const auto want = oracle::optimal_cost(d);
      const auto in = oracle::to_instance(d);
      try {
        const Plan p = make_plan(in.goal, in.init, in.kb);
        ++solvable;
        agree += want && std::abs(p.cost_s - *want) < 1e-9;
        deterministic += p == make_plan(in.goal, in.init, in.kb);
      } catch (const Unsolvable&) {
        agree += !want;
        ++deterministic;
      }
    }
    const bool ok = agree == kPlannerDomains && deterministic == kPlannerDomains && solvable >= kPlannerSolvableFloor;
    report.line(5, ok, "planner cost equals exhaustive search",
                std::to_string(agree) + "/" + std::to_string(kPlannerDomains) + " domains agree (" +
                    std::to_string(solvable) + " solvable), deterministic " + std::to_string(deterministic));
  }

  // 6. Safety preemption, depth and keep-out.
  {
    auto depth = sc::run("safety_depth.json", "acc-safety-depth.jsonl");
    auto keep = sc::run("keep_out.json", "acc-keep-out.jsonl");
    const auto cd = sc::check_preemption(depth.events), ck = sc::check_preemption(keep.events);
    auto good = [](const sc::PreemptionCheck& c) {
      return c.violation && c.halted_same_tick && c.safety_goal_same_tick && c.priority_error.empty();
    };
    const bool ok = good(cd) && good(ck) && depth.record.all_achieved && keep.record.all_achieved;
    auto describe = [](const sc::PreemptionCheck& c) {
      return std::string(c.violation ? "violation" : "no violation") + (c.halted_same_tick ? ", halted" : "") +
             (c.safety_goal_same_tick ? ", safety goal" : "") +
             (c.priority_error.empty() ? ", priority held" : ", " + c.priority_error);
    };
    report.line(6, ok, "safety preemption on depth and keep-out",
                "depth: " + describe(cd) + "; keep-out: " + describe(ck));
    logs.emplace_back("safety_depth", std::move(depth));
    logs.emplace_back("keep_out", std::move(keep));
  }

  // 7. Mismatch self-check under drift.
  {
    auto out = sc::run("drift.json", "acc-drift.jsonl");
    const geo::Vec2 site{200, 50};
    double farthest = 0;
    bool inferred_at = false, mismatch = false, repaired = false;
    for (const auto& e : out.events) {
      if (e.kind == "fact_asserted" && e.data.at("atom") == "at(site_a)" && e.data.at("provenance") == "inferred")
        inferred_at = e.data.at("truth").get<bool>();
      if (e.kind == "tick" && inferred_at)
        farthest = std::max(farthest, geo::distance(site, {e.data.at("x").get<double>(), e.data.at("y").get<double>()}));
      if (e.kind == "mismatch_detected" && e.data.at("atom") == "at(site_a)") mismatch = true;
      if (e.kind == "plan_created" && mismatch && e.data.at("repair") == true) repaired = true;
    }
    const bool ok = farthest >= 2 * kCaptureRadiusM && mismatch && repaired && out.record.all_achieved;
    report.line(7, ok, "drift mismatch detected and repaired",
                "drift " + fmt("%.1f", farthest) + " m from site_a, mismatch " + (mismatch ? "yes" : "no") +
                    ", repaired plan " + (repaired ? "yes" : "no") + ", achieved " +
                    (out.record.all_achieved ? "yes" : "no"));
    logs.emplace_back("drift", std::move(out));
  }

  // 8. Runtime replacement with a prior-dive track.
  {
    const auto m = load_mission(sc::mission_path("replacement.json"));
    const auto points = sc::prior_points(m);
    auto out = sc::run("replacement.json", "acc-replacement.jsonl", sc::replacement_hooks(points));
    std::map<std::string, geo::Vec2> where;
    for (const auto& b : m.bindings)
      if (const auto* p = std::get_if<Point>(&b.value)) where[b.symbol.name()] = p->xy();
    const auto arrivals = sc::precise_arrivals(out.events);
    bool in_order = arrivals.size() == points.size();
    double worst = 0;
    for (std::size_t i = 0; in_order && i < arrivals.size(); ++i) {
      in_order = arrivals[i].first == points[i].name();
      worst = std::max(worst, geo::distance(arrivals[i].second, where[arrivals[i].first]));
    }
    bool replaced_idle = false;
    for (const auto& e : out.events) {
      if (e.kind == "tick") break;
      if (e.kind == "behavior_replaced" && e.data.at("name") == "survey_zone_a" && e.data.at("origin") == "operator")
        replaced_idle = true;
    }
    const bool ok = replaced_idle && in_order && worst <= kReplacementTolM && out.record.all_achieved;
    report.line(8, ok, "replacement survey follows the prior track",
                std::to_string(arrivals.size()) + "/" + std::to_string(points.size()) + " waypoints in order, worst " +
                    fmt("%.4f", worst) + " m, replaced while idle " + (replaced_idle ? "yes" : "no"));
    logs.emplace_back("replacement", std::move(out));
  }

  // 9. Replay of every scenario above, through a binary built without the
  // simulator.
  {
    int match = 0;
    std::string mismatched;
    for (const auto& [name, out] : logs) {
      if (sim_free_replay(out.record.log_path) == out.record.digest)
        ++match;
      else
        mismatched += " " + name;
    }
    const bool ok = match == static_cast<int>(logs.size());
    report.line(9, ok, "sim-free replay digests equal live digests",
                std::to_string(match) + "/" + std::to_string(logs.size()) + " logs" +
                    (mismatched.empty() ? "" : ", mismatched:" + mismatched));
  }

  // 10. Acoustic link.
  {
    acoustic::Link lossy({0.3, 8.0, 1010});
    acoustic::Receiver rx;
    int delivered = 0, duplicates = 0;
    for (int i = 0; i < kLinkTrials; ++i) {
      const auto r = lossy.transmit(acoustic::AbortToRecovery{1}, i * 120.0);
      int applied = 0;
      for (std::size_t k = 0; k < r.arrivals.size(); ++k) applied += rx.accept(r.seq);
      delivered += applied > 0;
      duplicates += applied > 1;
    }
    acoustic::Link dead({1.0, 8.0, 1011});
    bool timed_out = false;
    try {
      dead.send(acoustic::AbortToRecovery{1}, 0);
    } catch (const LinkTimeout&) {
      timed_out = true;
    }
    const auto retries = acoustic::Link({1.0, 8.0, 1012}).transmit(acoustic::AbortToRecovery{1}, 0).retries;
    const double rate = static_cast<double>(delivered) / kLinkTrials;
    const bool ok = rate >= kDeliveryFloor && duplicates == 0 && timed_out && retries == 5;
    report.line(10, ok, "acoustic delivery, dedup and timeout",
                "delivered " + std::to_string(delivered) + "/" + std::to_string(kLinkTrials) + ", duplicates " +
                    std::to_string(duplicates) + ", p=1 " + (timed_out ? "LinkTimeout" : "no timeout") + " after " +
                    std::to_string(retries) + " retries");
  }

  std::printf("%d of 10 criteria failed\n", report.failed);
  return report.failed == 0 ? 0 : 1;
}
