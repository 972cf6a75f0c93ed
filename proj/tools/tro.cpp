// tro: run, plan, replay and inspect missions from the command line.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include "tro/coverage.hpp"
#include "tro/mission.hpp"
#include "tro/replay.hpp"
#include "tro/service.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

// A zone file holds a polygon value, a bare {"vertices": ...} object or just
// the vertex array.
tro::Polygon load_zone(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tro::SchemaError("$", "cannot open zone file " + path);
  tro::Json j = tro::Json::parse(in);
  if (j.is_array()) j = tro::Json{{"vertices", j}};
  if (j.is_object() && !j.contains("type")) j["type"] = "polygon";
  const auto v = tro::value_from_json(j, "zone");
  const auto* poly = std::get_if<tro::Polygon>(&v);
  if (!poly) throw tro::SchemaError("zone.type", "expected a polygon");
  return *poly;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_run(const std::string& mission_path, std::optional<std::uint64_t> seed, double speed,
            std::optional<unsigned short> serve, std::string log_path, const std::string& record_path) {
  const auto m = tro::load_mission(mission_path);
  tro::RunOptions opt;
  opt.seed = seed;
  opt.speed = speed;
  if (log_path.empty()) log_path = m.name + "-" + std::to_string(seed.value_or(m.seed)) + ".jsonl";
  opt.log_path = log_path;

  tro::RunHooks hooks;
  std::unique_ptr<tro::Service> service;
  if (serve) {
    // A served run stays up for the operator until interrupted, so it has
    // to be paced.
    if (opt.speed <= 0) opt.speed = 1.0;
    opt.max_ticks = std::numeric_limits<std::size_t>::max();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    hooks.attach = [&](tro::Executive& ex) {
      service = std::make_unique<tro::Service>(ex, *serve);
      std::cerr << "serving on 127.0.0.1:" << service->port() << "\n";
    };
    hooks.keep_running = [] { return true; };
    hooks.stop_requested = [] { return g_interrupted.load(); };
    hooks.detach = [&](tro::Executive&) { service.reset(); };
  }
  const auto rec = tro::run_mission(m, opt, hooks);
  std::cout << tro::to_json(rec).dump(2) << "\n";
  if (!record_path.empty()) {
    std::ofstream out(record_path);
    if (!(out << tro::to_json(rec).dump(2) << "\n")) throw tro::Error("cannot write " + record_path);
  }
  return rec.all_achieved ? 0 : 2;
}

int cmd_plan(const std::string& mission_path) {
  const auto m = tro::load_mission(mission_path);
  auto ex = tro::build_executive(m, m.seed);
  const auto plan = ex->preview_plan();
  tro::Json out;
  if (!plan) {
    out["goal"] = nullptr;
    out["plan"] = nullptr;
  } else {
    const auto& g = ex->world().exec.goals.at(plan->goal_id);
    out["goal"] = tro::to_json(g);
    out["plan"] = tro::plan_report(*plan, ex->world().kb);
    out["verdict"] = tro::to_json(
        tro::validate_plan(*plan, ex->world().kb.beliefs.state(), g.condition, ex->world().kb.behaviors));
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_plan_coverage(const std::string& zone_path, double spacing, double heading) {
  tro::CoverageRequest req;
  req.zone = load_zone(zone_path);
  req.spacing_m = spacing;
  req.heading_deg = heading;
  const auto t = tro::generate_tracklines(req);
  std::cout << "x_m,y_m\n";
  for (const auto& p : t.path.points) std::cout << fmt(p.x) << "," << fmt(p.y) << "\n";
  const double frac = tro::coverage_fraction(req.zone, t.path, spacing, spacing / 20.0);
  std::cout << "# lines " << t.line_count << "\n";
  std::cout << "# total_length_m " << fmt(t.total_length_m) << "\n";
  std::cout << "# coverage_fraction " << std::to_string(frac) << "\n";
  return 0;
}

int cmd_replay(const std::string& log_path) {
  const auto r = tro::replay_file(log_path);
  std::cout << tro::Json{{"log", log_path}, {"events", r.events}, {"digest", r.digest}}.dump(2) << "\n";
  return 0;
}

int cmd_dump(const std::string& log_path) {
  const auto r = tro::replay_file(log_path);
  std::cout << tro::world_dump(r.world).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teleoreactive mission executive for a simulated AUV"};
  app.require_subcommand(1);

  std::string mission, log, zone, record;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned short> serve;
  double speed = 0.0, spacing = tro::kDefaultSurveySpacing, heading = 0.0;

  auto* run = app.add_subcommand("run", "run a mission headless and print its run record");
  run->add_option("--mission", mission, "mission JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the mission seed");
  run->add_option("--speed", speed, "sim seconds per wall second, 0 for flat out")->check(CLI::NonNegativeNumber);
  run->add_option("--serve", serve, "serve HTTP and WebSocket on this port (0 picks one)");
  run->add_option("--log", log, "event log path (default <name>-<seed>.jsonl)");
  run->add_option("--record", record, "also write the run record to this file");

  auto* plan = app.add_subcommand("plan", "print the plan for the top goal without executing it");
  plan->add_option("--mission", mission, "mission JSON file")->required()->check(CLI::ExistingFile);

  auto* cov = app.add_subcommand("plan-coverage", "print survey waypoints as CSV and the coverage fraction");
  cov->add_option("--zone", zone, "zone polygon JSON file")->required()->check(CLI::ExistingFile);
  cov->add_option("--spacing", spacing, "line spacing in meters")->check(CLI::PositiveNumber);
  cov->add_option("--heading", heading, "trackline heading in degrees");

  auto* rep = app.add_subcommand("replay", "rebuild state from an event log and print its digest");
  rep->add_option("--log", log, "event log")->required()->check(CLI::ExistingFile);

  auto* dump = app.add_subcommand("dump", "print the store dump rebuilt from an event log");
  dump->add_option("--log", log, "event log")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(mission, seed, speed, serve, log, record);
    if (*plan) return cmd_plan(mission);
    if (*cov) return cmd_plan_coverage(zone, spacing, heading);
    if (*rep) return cmd_replay(log);
    if (*dump) return cmd_dump(log);
  } catch (const tro::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
