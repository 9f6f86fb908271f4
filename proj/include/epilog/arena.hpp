#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epilog/core.hpp"

namespace epilog {

// Axis-aligned rectangle in meters, x0 <= x1 and y0 <= y1.
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double cx() const { return (x0 + x1) / 2.0; }
  double cy() const { return (y0 + y1) / 2.0; }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool intersects(const Rect& o) const {
    return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
  Rect inflated(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }

  bool operator==(const Rect&) const = default;
};

// Euclidean distance from a point to the rectangle (0 when inside).
double rect_distance(const Rect& rect, double x, double y);

struct RoomDef {
  std::string name;
  Rect rect;
};

struct FurnitureDef {
  std::string name;
  std::string room;
  Rect rect;
};

struct NamedAreaDef {
  std::string name;
  Rect rect;
};

struct ArenaMap {
  Rect bounds;
  std::vector<RoomDef> rooms;
  std::vector<FurnitureDef> furniture;
  std::vector<NamedAreaDef> named_areas;  // SLAM-style known areas, e.g. "bar"
  double furniture_inflation = 0.5;       // meters; pose-to-furniture attachment
  double near_threshold = 1.0;            // meters; the "near" predicate

  const Rect* find_rect(const std::string& name) const;  // furniture, areas, rooms
};

// Throws InvalidMap on duplicate room names, furniture outside its room,
// malformed rectangles or non-slug names.
void check_map(const ArenaMap& map);

ArenaMap load_map(const std::filesystem::path& path);
void save_map(const ArenaMap& map, const std::filesystem::path& path);

// Total: every point resolves. Outside bounds -> outside_arena; inside, the
// smallest containing room wins (named areas fill the room slot when no room
// contains the point); furniture attaches when the point falls within the
// inflated furniture rectangle, nearest first.
SemanticLocation resolve_pose(const ArenaMap& map, double x, double y);

RelPredicate relative_position(const ArenaMap& map, const Rect& subject,
                               const std::string& anchor);

// Deterministic SVG: room outlines with labels, the target room highlighted,
// a marker dot at the room (or furniture) centroid.
std::string render_map_marker_svg(const ArenaMap& map, const SemanticLocation& loc);
void render_map_marker(const ArenaMap& map, const SemanticLocation& loc,
                       const std::filesystem::path& out);

// The apartment fixture used by the harness when no map file is given.
ArenaMap default_arena();

}  // namespace epilog
