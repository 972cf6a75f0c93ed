#pragma once

// Boustrophedon tracklines for polygonal zones and the survey behaviors
// built from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tro/behavior.hpp"
#include "tro/error.hpp"
#include "tro/geometry.hpp"
#include "tro/stores.hpp"
#include "tro/values.hpp"

namespace tro {

inline constexpr double kDefaultSurveySpacing = 200.0;

struct CoverageRequest {
  Polygon zone;
  double spacing_m = kDefaultSurveySpacing;
  double heading_deg = 0.0;  // trackline direction, counter-clockwise from east
  std::optional<Point> entry_hint;
};

struct Tracklines {
  Path path;
  std::size_t line_count = 0;
  double total_length_m = 0.0;
};

inline double path_length(const Path& p) {
  double len = 0.0;
  for (std::size_t i = 1; i < p.points.size(); ++i) len += geo::distance(p.points[i - 1].xy(), p.points[i].xy());
  return len;
}

namespace detail {

// Sorted x coordinates where the horizontal line at y crosses the boundary.
inline std::vector<double> crossings(const std::vector<geo::Vec2>& poly, double y) {
  std::vector<double> xs;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const geo::Vec2 a = poly[i], b = poly[(i + 1) % n];
    if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) xs.push_back(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
  }
  std::sort(xs.begin(), xs.end());
  return xs;
}

// One sweep line in the rotated frame, left to right.
using Sweep = std::vector<geo::Vec2>;

}  // namespace detail

inline Tracklines generate_tracklines(const CoverageRequest& req) {
  const auto& verts = req.zone.vertices;
  if (verts.size() < 3 || std::abs(geo::signed_area(verts)) < 1e-9)
    throw DegenerateZone("zone has zero area");
  if (!(req.spacing_m > 0.0) || !std::isfinite(req.spacing_m)) throw InvalidValue("spacing must be > 0");
  if (!geo::is_simple(verts)) throw InvalidValue("zone polygon is not simple");
  const double s = req.spacing_m;
  if (s >= geo::diameter(verts))
    throw SpacingTooLarge("spacing " + std::to_string(s) + " m is not below the zone diameter");

  const Polygon zone = counterclockwise(verts);
  const double h = geo::deg2rad(req.heading_deg);
  const auto poly = geo::rotate(zone.vertices, -h);
  const bool convex = geo::is_convex(poly);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : poly) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  const double height = hi - lo;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(height / s - 1e-9)));
  const double first = lo + (height - static_cast<double>(n - 1) * s) / 2.0;

  std::vector<detail::Sweep> sweeps;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = first + static_cast<double>(k) * s;
    const auto xs = detail::crossings(poly, y);
    if (xs.size() < 2) continue;
    detail::Sweep line;
    if (convex) {
      const geo::Vec2 left{xs.front(), y}, right{xs.back(), y};
      // Extend to the extreme zone point inside this line's strip so the
      // corners between lines stay covered.
      auto strip = geo::clip_half_plane(poly, [&](geo::Vec2 p) { return p.y - (y - s / 2); });
      strip = geo::clip_half_plane(strip, [&](geo::Vec2 p) { return (y + s / 2) - p.y; });
      geo::Vec2 pl = left, pr = right;
      for (const auto& p : strip) {
        if (p.x < pl.x || (p.x == pl.x && std::abs(p.y - y) < std::abs(pl.y - y))) pl = p;
        if (p.x > pr.x || (p.x == pr.x && std::abs(p.y - y) < std::abs(pr.y - y))) pr = p;
      }
      if (pl.x < left.x - 1e-9) line.push_back(pl);
      line.push_back(left);
      line.push_back(right);
      if (pr.x > right.x + 1e-9) line.push_back(pr);
    } else {
      for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
        line.push_back({xs[i], y});
        line.push_back({xs[i + 1], y});
      }
    }
    sweeps.push_back(std::move(line));
  }

  // Entry: default is the zone vertex nearest the origin.
  geo::Vec2 entry;
  if (req.entry_hint) {
    entry = req.entry_hint->xy();
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& v : zone.vertices)
      if (const double d = geo::norm(v); d < best) {
        best = d;
        entry = v;
      }
  }
  const geo::Vec2 entry_r = geo::rotate(entry, -h);

  // Four candidate orderings: bottom-up or top-down, first line forward or
  // reversed. Pick the one starting nearest the entry; ties keep the first.
  std::vector<geo::Vec2> best_path;
  double best_d = std::numeric_limits<double>::infinity();
  for (int top_down = 0; top_down < 2; ++top_down) {
    for (int reversed = 0; reversed < 2; ++reversed) {
      std::vector<geo::Vec2> path;
      for (std::size_t i = 0; i < sweeps.size(); ++i) {
        const auto& line = sweeps[top_down ? sweeps.size() - 1 - i : i];
        const bool flip = (i % 2 == 1) != (reversed == 1);
        if (flip) path.insert(path.end(), line.rbegin(), line.rend());
        else path.insert(path.end(), line.begin(), line.end());
      }
      if (path.empty()) continue;
      const double d = geo::distance(path.front(), entry_r);
      if (d < best_d - 1e-9) {
        best_d = d;
        best_path = std::move(path);
      }
    }
  }

  Tracklines out;
  out.line_count = sweeps.size();
  for (const auto& p : best_path) {
    const geo::Vec2 q = geo::rotate(p, h);
    out.path.points.push_back(Point{q.x, q.y, 0.0});
  }
  out.total_length_m = path_length(out.path);
  return out;
}

// Fraction of grid samples inside the zone within spacing/2 of the path.
inline double coverage_fraction(const Polygon& zone, const Path& path, double spacing, double grid_step) {
  if (path.points.empty()) return 0.0;
  if (!(grid_step > 0.0)) throw InvalidValue("grid step must be > 0");
  const auto& poly = zone.vertices;
  const double r = spacing / 2.0;

  double minx = std::numeric_limits<double>::infinity(), miny = minx, maxx = -minx, maxy = -minx;
  for (const auto& p : poly) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }

  // Segments bucketed on a grid of cell size r so each sample checks only
  // its neighborhood.
  std::vector<std::pair<geo::Vec2, geo::Vec2>> segs;
  if (path.points.size() == 1) segs.emplace_back(path.points[0].xy(), path.points[0].xy());
  for (std::size_t i = 1; i < path.points.size(); ++i) segs.emplace_back(path.points[i - 1].xy(), path.points[i].xy());
  const double cell = std::max(r, grid_step);
  auto key = [&](long long cx, long long cy) { return (cx << 32) ^ (cy & 0xffffffffLL); };
  std::unordered_map<long long, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto [a, b] = segs[i];
    const auto x0 = static_cast<long long>(std::floor((std::min(a.x, b.x) - r - minx) / cell));
    const auto x1 = static_cast<long long>(std::floor((std::max(a.x, b.x) + r - minx) / cell));
    const auto y0 = static_cast<long long>(std::floor((std::min(a.y, b.y) - r - miny) / cell));
    const auto y1 = static_cast<long long>(std::floor((std::max(a.y, b.y) + r - miny) / cell));
    for (auto cx = x0; cx <= x1; ++cx)
      for (auto cy = y0; cy <= y1; ++cy) buckets[key(cx, cy)].push_back(i);
  }

  std::size_t inside = 0, covered = 0;
  for (double y = miny + grid_step / 2; y < maxy; y += grid_step) {
    for (double x = minx + grid_step / 2; x < maxx; x += grid_step) {
      const geo::Vec2 p{x, y};
      if (!geo::contains(poly, p, 0.0)) continue;
      ++inside;
      const auto cx = static_cast<long long>(std::floor((x - minx) / cell));
      const auto cy = static_cast<long long>(std::floor((y - miny) / cell));
      auto it = buckets.find(key(cx, cy));
      if (it == buckets.end()) continue;
      for (auto i : it->second) {
        if (geo::point_segment_distance(p, segs[i].first, segs[i].second) <= r + 1e-9) {
          ++covered;
          break;
        }
      }
    }
  }
  return inside == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(inside);
}

// Survey behaviors -----------------------------------------------------------

inline std::string survey_name(const Symbol& zone) { return "survey_" + zone.name(); }

inline Symbol survey_waypoint(const Symbol& zone, std::size_t i) {
  return Symbol("wp_" + zone.name() + "_" + std::to_string(i));
}

struct SurveySynthesis {
  BehaviorSpec spec;
  std::vector<std::pair<Symbol, Point>> waypoints;  // bindings to install first
};

// Composite goto sequence over the trackline waypoints. Nothing is written
// to the stores; see install_survey.
inline SurveySynthesis synthesize_survey_behavior(const NumericsStore& numerics, const Symbol& zone,
                                                  const Tracklines& lines) {
  if (!numerics.resolve_as<Polygon>(zone)) throw UnboundZone("zone " + zone.name() + " is not bound to a polygon");
  SurveySynthesis out{BehaviorBuilder(survey_name(zone))
                          .pre("at_depth(operating)")
                          .depends_on("calibrated(magnetometer)")
                          .adds("did_survey(" + zone.name() + ")")
                          .adds_if_dependencies("logged(magnetometer_data)")
                          .origin(Origin::synthesized)
                          .build(),
                      {}};
  Composite c;
  for (std::size_t i = 0; i < lines.path.points.size(); ++i) {
    const Symbol wp = survey_waypoint(zone, i + 1);
    out.waypoints.emplace_back(wp, lines.path.points[i]);
    c.children.push_back(Invocation{Symbol("goto"), {wp}});
  }
  out.spec.implementation = std::move(c);
  return out;
}

// Binds the waypoints and registers (or re-implements) the survey.
inline void install_survey(KnowledgeBase& kb, const SurveySynthesis& syn, double t) {
  for (const auto& [sym, pt] : syn.waypoints) kb.bind(sym, pt, t);
  if (kb.behaviors.find(syn.spec.name)) kb.replace_implementation(syn.spec.name, syn.spec.implementation, Origin::synthesized);
  else kb.register_behavior(syn.spec);
}

}  // namespace tro
