#pragma once

// Concrete values the numerics store associates with symbols.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "tro/error.hpp"
#include "tro/geometry.hpp"

namespace tro {

enum class Unit { meters, meters_per_second, seconds, watt_hours, degrees };

inline const char* unit_name(Unit u) {
  switch (u) {
    case Unit::meters: return "m";
    case Unit::meters_per_second: return "m/s";
    case Unit::seconds: return "s";
    case Unit::watt_hours: return "Wh";
    case Unit::degrees: return "deg";
  }
  return "?";
}

inline Unit parse_unit(const std::string& s) {
  if (s == "m") return Unit::meters;
  if (s == "m/s") return Unit::meters_per_second;
  if (s == "s") return Unit::seconds;
  if (s == "Wh") return Unit::watt_hours;
  if (s == "deg") return Unit::degrees;
  throw InvalidValue("unknown unit '" + s + "'");
}

struct Scalar {
  double value = 0.0;
  Unit unit = Unit::meters;
  friend bool operator==(const Scalar&, const Scalar&) = default;
};

// x east, y north, depth positive down (meters).
struct Point {
  double x = 0.0;
  double y = 0.0;
  double depth = 0.0;
  geo::Vec2 xy() const { return {x, y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

struct Polygon {
  std::vector<geo::Vec2> vertices;  // counter-clockwise
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Path {
  std::vector<Point> points;
  friend bool operator==(const Path&, const Path&) = default;
};

struct Label {
  std::string text;
  friend bool operator==(const Label&, const Label&) = default;
};

using ConcreteValue = std::variant<Scalar, Point, Polygon, Path, Label>;

inline const char* value_kind(const ConcreteValue& v) {
  static constexpr const char* names[] = {"scalar", "point", "polygon", "path", "label"};
  return names[v.index()];
}

inline void validate_polygon(const Polygon& p) {
  if (p.vertices.size() < 3) throw InvalidValue("polygon needs at least 3 vertices");
  for (const auto& v : p.vertices)
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidValue("polygon vertex is not finite");
  if (!geo::is_simple(p.vertices)) throw InvalidValue("polygon is not simple");
  const double area = geo::signed_area(p.vertices);
  if (area == 0.0) throw InvalidValue("polygon has zero area");
  if (area < 0.0) throw InvalidValue("polygon vertices must be counterclockwise");
}

inline void validate(const ConcreteValue& value) {
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Scalar>) {
          if (!std::isfinite(v.value)) throw InvalidValue("scalar is not finite");
        } else if constexpr (std::is_same_v<T, Point>) {
          if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.depth))
            throw InvalidValue("point is not finite");
        } else if constexpr (std::is_same_v<T, Polygon>) {
          validate_polygon(v);
        } else if constexpr (std::is_same_v<T, Path>) {
          if (v.points.empty()) throw InvalidValue("path is empty");
        }
      },
      value);
}

// Counter-clockwise copy of a simple polygon given in either orientation.
inline Polygon counterclockwise(std::vector<geo::Vec2> verts) {
  if (geo::signed_area(verts) < 0) std::reverse(verts.begin(), verts.end());
  return Polygon{std::move(verts)};
}

}  // namespace tro
