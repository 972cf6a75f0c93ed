#pragma once

// Independent reference implementations and random instance generators shared
// by the property tests and the acceptance binary. Nothing here calls into
// the code under test except to build its inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "tro/coverage.hpp"
#include "tro/planner.hpp"
#include "tro/stores.hpp"

namespace tro::oracle {

// Propositional planning domain over atoms p0()..p{n-1}(). Each action has
// bitmask preconditions and effects plus an integer duration.
struct Action {
  std::string name;
  std::uint32_t pre_pos = 0, pre_neg = 0, add = 0, del = 0;
  int duration_s = 1;
};

struct Domain {
  int atoms = 0;
  std::vector<Action> actions;
  std::uint32_t init = 0;
  std::uint32_t goal_pos = 0, goal_neg = 0;
};

inline Domain random_domain(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Domain d;
  d.atoms = uni(3, 8);
  const int n_actions = uni(2, 6);
  const auto bit = [&] { return std::uint32_t{1} << uni(0, d.atoms - 1); };
  for (int i = 0; i < n_actions; ++i) {
    Action a;
    a.name = "b" + std::to_string(i);
    for (int k = uni(0, 2); k > 0; --k) a.pre_pos |= bit();
    if (uni(0, 3) == 0) a.pre_neg |= bit() & ~a.pre_pos;
    for (int k = uni(1, 2); k > 0; --k) a.add |= bit();
    for (int k = uni(0, 2); k > 0; --k) a.del |= bit();
    a.del &= ~a.add;
    a.duration_s = uni(1, 9) * 10;
    d.actions.push_back(a);
  }
  for (int i = 0; i < d.atoms; ++i)
    if (uni(0, 2) == 0) d.init |= std::uint32_t{1} << i;
  for (int k = uni(1, 3); k > 0; --k) d.goal_pos |= bit();
  if (uni(0, 3) == 0) d.goal_neg |= bit() & ~d.goal_pos;
  return d;
}

// Exhaustive uniform-cost search over all 2^atoms states. With unit costs
// this is breadth-first search.
inline std::optional<int> optimal_cost(const Domain& d) {
  const std::uint32_t n_states = std::uint32_t{1} << d.atoms;
  std::vector<int> dist(n_states, std::numeric_limits<int>::max());
  using Item = std::pair<int, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[d.init] = 0;
  open.push({0, d.init});
  while (!open.empty()) {
    const auto [c, s] = open.top();
    open.pop();
    if (c != dist[s]) continue;
    if ((s & d.goal_pos) == d.goal_pos && (s & d.goal_neg) == 0) return c;
    for (const auto& a : d.actions) {
      if ((s & a.pre_pos) != a.pre_pos || (s & a.pre_neg) != 0) continue;
      const std::uint32_t t = (s & ~a.del) | a.add;
      if (c + a.duration_s < dist[t]) {
        dist[t] = c + a.duration_s;
        open.push({dist[t], t});
      }
    }
  }
  return std::nullopt;
}

inline std::string atom_name(int i) { return "p" + std::to_string(i) + "()"; }

// The same domain expressed as registered behaviors with one recorded
// outcome each, so expected durations equal the oracle's costs.
struct Instance {
  KnowledgeBase kb;
  AtomSet init;
  Conjunction goal;
};

inline Instance to_instance(const Domain& d) {
  Instance in;
  for (const auto& a : d.actions) {
    BehaviorBuilder b(a.name);
    for (int i = 0; i < d.atoms; ++i) {
      const std::uint32_t m = std::uint32_t{1} << i;
      if (a.pre_pos & m) b.pre(atom_name(i));
      if (a.pre_neg & m) b.pre("!" + atom_name(i));
      if (a.add & m) b.adds(atom_name(i));
      if (a.del & m) b.deletes(atom_name(i));
    }
    in.kb.register_behavior(b.build());
    in.kb.record_outcome({Symbol(a.name), Outcome::success, static_cast<double>(a.duration_s), 1.0, 0.0});
  }
  for (int i = 0; i < d.atoms; ++i) {
    const std::uint32_t m = std::uint32_t{1} << i;
    if (d.init & m) in.init.insert(parse_atom(atom_name(i)));
    if (d.goal_pos & m) in.goal.add(parse_literal(atom_name(i)));
    if (d.goal_neg & m) in.goal.add(parse_literal("!" + atom_name(i)));
  }
  return in;
}

// Random convex zone: hull of up to 12 points on a random ellipse, scaled to
// a diameter in [200, 5000] m.
inline Polygon random_convex_zone(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 3 + static_cast<int>(rng() % 10);
  const double aspect = 0.15 + 0.85 * u(rng);
  const double tilt = 2 * std::numbers::pi * u(rng);
  std::vector<geo::Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * u(rng);
    const geo::Vec2 p{std::cos(a), aspect * std::sin(a)};
    pts.push_back(geo::rotate(p, tilt));
  }
  // Monotone chain hull.
  std::sort(pts.begin(), pts.end(), [](auto a, auto b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<geo::Vec2> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = hull.size();
    for (const auto& p : pts) {
      while (hull.size() >= base + 2 && geo::cross(hull.back() - hull[hull.size() - 2], p - hull.back()) <= 0)
        hull.pop_back();
      hull.push_back(p);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  if (hull.size() < 3) return random_convex_zone(rng);
  const double target = 200.0 + 4800.0 * u(rng);
  const double scale = target / geo::diameter(hull);
  const geo::Vec2 shift{-3000 + 6000 * u(rng), -3000 + 6000 * u(rng)};
  for (auto& p : hull) p = p * scale + shift;
  return Polygon{hull};
}

// Independent coverage check: brute-force distance from grid samples to
// every path segment.
inline double brute_coverage(const Polygon& zone, const Path& path, double spacing, double grid_step) {
  const auto& poly = zone.vertices;
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (const auto& p : poly) {
    minx = std::min(minx, p.x), maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y), maxy = std::max(maxy, p.y);
  }
  auto inside = [&](double x, double y) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const auto &a = poly[i], &b = poly[j];
      if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
  };
  auto seg_dist = [](double px, double py, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
  };
  std::size_t n = 0, hit = 0;
  for (double y = miny + grid_step / 2; y < maxy; y += grid_step)
    for (double x = minx + grid_step / 2; x < maxx; x += grid_step) {
      if (!inside(x, y)) continue;
      ++n;
      for (std::size_t i = 1; i < path.points.size(); ++i)
        if (seg_dist(x, y, path.points[i - 1], path.points[i]) <= spacing / 2 + 1e-9) {
          ++hit;
          break;
        }
    }
  return n == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace tro::oracle
