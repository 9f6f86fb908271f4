#include "epilog/arena.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace epilog {

using json = nlohmann::json;

double rect_distance(const Rect& rect, double x, double y) {
  const double dx = std::max({rect.x0 - x, 0.0, x - rect.x1});
  const double dy = std::max({rect.y0 - y, 0.0, y - rect.y1});
  return std::hypot(dx, dy);
}

const Rect* ArenaMap::find_rect(const std::string& name) const {
  for (const FurnitureDef& f : furniture) {
    if (f.name == name) return &f.rect;
  }
  for (const NamedAreaDef& a : named_areas) {
    if (a.name == name) return &a.rect;
  }
  for (const RoomDef& r : rooms) {
    if (r.name == name) return &r.rect;
  }
  return nullptr;
}

namespace {

bool is_slug(const std::string& name) {
  if (name.empty()) return false;
  if (!std::islower(static_cast<unsigned char>(name.front()))) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::islower(c) || std::isdigit(c) || c == '_';
  });
}

bool well_formed(const Rect& r) { return r.x0 < r.x1 && r.y0 < r.y1; }

}  // namespace

void check_map(const ArenaMap& map) {
  if (!well_formed(map.bounds)) throw Error(Errc::invalid_map, "degenerate bounds");

  std::set<std::string> room_names;
  for (const RoomDef& room : map.rooms) {
    if (!is_slug(room.name)) throw Error(Errc::invalid_map, "room name '" + room.name + "' is not a slug");
    if (!room_names.insert(room.name).second) {
      throw Error(Errc::invalid_map, "duplicate room name '" + room.name + "'");
    }
    if (!well_formed(room.rect)) throw Error(Errc::invalid_map, "degenerate room '" + room.name + "'");
  }
  for (const FurnitureDef& f : map.furniture) {
    if (!is_slug(f.name)) throw Error(Errc::invalid_map, "furniture name '" + f.name + "' is not a slug");
    if (!well_formed(f.rect)) throw Error(Errc::invalid_map, "degenerate furniture '" + f.name + "'");
    auto room = std::find_if(map.rooms.begin(), map.rooms.end(),
                             [&](const RoomDef& r) { return r.name == f.room; });
    if (room == map.rooms.end()) {
      throw Error(Errc::invalid_map, "furniture '" + f.name + "' references unknown room '" + f.room + "'");
    }
    if (!f.rect.intersects(room->rect)) {
      throw Error(Errc::invalid_map, "furniture '" + f.name + "' lies outside room '" + f.room + "'");
    }
  }
  for (const NamedAreaDef& area : map.named_areas) {
    if (!is_slug(area.name)) throw Error(Errc::invalid_map, "area name '" + area.name + "' is not a slug");
    if (!well_formed(area.rect)) throw Error(Errc::invalid_map, "degenerate area '" + area.name + "'");
  }
  if (map.furniture_inflation < 0 || map.near_threshold < 0) {
    throw Error(Errc::invalid_map, "negative distance constant");
  }
}

namespace {

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(Errc::invalid_map, "rect must be [x0,y0,x1,y1]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json rect_to_json(const Rect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

}  // namespace

ArenaMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_map, e.what());
  }

  ArenaMap map;
  try {
    map.bounds = rect_from_json(j.at("bounds"));
    for (const json& room : j.value("rooms", json::array())) {
      map.rooms.push_back({room.at("name").get<std::string>(), rect_from_json(room.at("rect"))});
    }
    for (const json& f : j.value("furniture", json::array())) {
      map.furniture.push_back({f.at("name").get<std::string>(), f.at("room").get<std::string>(),
                               rect_from_json(f.at("rect"))});
    }
    for (const json& area : j.value("named_areas", json::array())) {
      map.named_areas.push_back(
          {area.at("name").get<std::string>(), rect_from_json(area.at("rect"))});
    }
    map.furniture_inflation = j.value("furniture_inflation", 0.5);
    map.near_threshold = j.value("near_threshold", 1.0);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_map, e.what());
  }
  check_map(map);
  return map;
}

void save_map(const ArenaMap& map, const std::filesystem::path& path) {
  json j;
  j["bounds"] = rect_to_json(map.bounds);
  j["rooms"] = json::array();
  for (const RoomDef& room : map.rooms) {
    j["rooms"].push_back(json{{"name", room.name}, {"rect", rect_to_json(room.rect)}});
  }
  j["furniture"] = json::array();
  for (const FurnitureDef& f : map.furniture) {
    j["furniture"].push_back(
        json{{"name", f.name}, {"room", f.room}, {"rect", rect_to_json(f.rect)}});
  }
  j["named_areas"] = json::array();
  for (const NamedAreaDef& area : map.named_areas) {
    j["named_areas"].push_back(json{{"name", area.name}, {"rect", rect_to_json(area.rect)}});
  }
  j["furniture_inflation"] = map.furniture_inflation;
  j["near_threshold"] = map.near_threshold;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

SemanticLocation resolve_pose(const ArenaMap& map, double x, double y) {
  SemanticLocation loc;
  if (!map.bounds.contains(x, y)) {
    loc.scope = LocationScope::outside_arena;
    return loc;
  }

  // Rooms and SLAM-style named areas compete together; the smallest
  // containing region wins, so an area inside a room (the bar) is reachable.
  const std::string* best_name = nullptr;
  double best_area = 0.0;
  bool best_is_room = false;
  auto consider = [&](const std::string& name, const Rect& rect, bool is_room) {
    if (!rect.contains(x, y)) return;
    if (!best_name || rect.area() < best_area ||
        (rect.area() == best_area && name < *best_name)) {
      best_name = &name;
      best_area = rect.area();
      best_is_room = is_room;
    }
  };
  for (const RoomDef& room : map.rooms) consider(room.name, room.rect, true);
  for (const NamedAreaDef& area : map.named_areas) consider(area.name, area.rect, false);
  if (!best_name) return loc;

  loc.room = *best_name;
  if (best_is_room) {
    const FurnitureDef* best_f = nullptr;
    double best_d = 0.0;
    for (const FurnitureDef& f : map.furniture) {
      if (f.room != *best_name) continue;
      if (!f.rect.inflated(map.furniture_inflation).contains(x, y)) continue;
      const double d = rect_distance(f.rect, x, y);
      if (!best_f || d < best_d || (d == best_d && f.name < best_f->name)) {
        best_f = &f;
        best_d = d;
      }
    }
    if (best_f) loc.furniture = best_f->name;
  }
  return loc;
}

RelPredicate relative_position(const ArenaMap& map, const Rect& subject,
                               const std::string& anchor) {
  const Rect* anchor_rect = map.find_rect(anchor);
  if (!anchor_rect) throw Error(Errc::unknown_anchor, "'" + anchor + "'");

  const bool x_overlap = subject.x0 <= anchor_rect->x1 && anchor_rect->x0 <= subject.x1;
  if (x_overlap) {
    if (subject.y0 >= anchor_rect->y1) return RelPredicate::over;
    if (subject.y1 <= anchor_rect->y0) return RelPredicate::under;
    const double dist = std::hypot(subject.cx() - anchor_rect->cx(),
                                   subject.cy() - anchor_rect->cy());
    if (dist < map.near_threshold) return RelPredicate::near;
  }
  if (subject.cx() < anchor_rect->cx()) return RelPredicate::left_of;
  if (subject.cx() > anchor_rect->cx()) return RelPredicate::right_of;
  return RelPredicate::near;
}

namespace {

constexpr double kSvgScale = 60.0;  // px per meter
constexpr const char* kRoomFill = "#f2f2f2";
constexpr const char* kHighlightFill = "#ffd166";
constexpr const char* kStroke = "#333333";
constexpr const char* kMarkerFill = "#d62828";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

struct SvgFrame {
  const ArenaMap& map;
  double px(double x) const { return (x - map.bounds.x0) * kSvgScale; }
  // SVG y grows downward; the map frame grows upward.
  double py(double y) const { return (map.bounds.y1 - y) * kSvgScale; }
};

void append_rect(std::string& svg, const SvgFrame& f, const Rect& r, const char* fill) {
  svg += "  <rect x=\"" + fmt(f.px(r.x0)) + "\" y=\"" + fmt(f.py(r.y1)) + "\" width=\"" +
         fmt(r.width() * kSvgScale) + "\" height=\"" + fmt(r.height() * kSvgScale) +
         "\" fill=\"" + fill + "\" stroke=\"" + kStroke + "\" stroke-width=\"2\"/>\n";
}

void append_label(std::string& svg, const SvgFrame& f, const Rect& r, const std::string& name) {
  svg += "  <text x=\"" + fmt(f.px(r.cx())) + "\" y=\"" + fmt(f.py(r.cy())) +
         "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">" + name +
         "</text>\n";
}

}  // namespace

std::string render_map_marker_svg(const ArenaMap& map, const SemanticLocation& loc) {
  if (loc.scope == LocationScope::outside_arena) {
    throw Error(Errc::outside_arena, "cannot mark a location outside the arena");
  }

  const SvgFrame frame{map};
  const double width = map.bounds.width() * kSvgScale;
  const double height = map.bounds.height() * kSvgScale;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt(width) +
                    " " + fmt(height) + "\" width=\"" + fmt(width) + "\" height=\"" +
                    fmt(height) + "\">\n";
  append_rect(svg, frame, map.bounds, "#ffffff");

  for (const RoomDef& room : map.rooms) {
    const bool highlighted = loc.room && *loc.room == room.name;
    append_rect(svg, frame, room.rect, highlighted ? kHighlightFill : kRoomFill);
  }
  for (const NamedAreaDef& area : map.named_areas) {
    const bool highlighted = loc.room && *loc.room == area.name;
    if (highlighted) append_rect(svg, frame, area.rect, kHighlightFill);
  }
  for (const FurnitureDef& f : map.furniture) append_rect(svg, frame, f.rect, "#dddddd");
  for (const RoomDef& room : map.rooms) append_label(svg, frame, room.rect, room.name);

  // Marker: furniture centroid when present, else room centroid, else arena center.
  double mx = map.bounds.cx();
  double my = map.bounds.cy();
  if (loc.furniture) {
    if (const Rect* r = map.find_rect(*loc.furniture)) {
      mx = r->cx();
      my = r->cy();
    }
  } else if (loc.room) {
    if (const Rect* r = map.find_rect(*loc.room)) {
      mx = r->cx();
      my = r->cy();
    }
  }
  svg += "  <circle cx=\"" + fmt(frame.px(mx)) + "\" cy=\"" + fmt(frame.py(my)) + "\" r=\"8\" fill=\"" +
         kMarkerFill + "\"/>\n";
  svg += "</svg>\n";
  return svg;
}

void render_map_marker(const ArenaMap& map, const SemanticLocation& loc,
                       const std::filesystem::path& out) {
  const std::string svg = render_map_marker_svg(map, loc);
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::io_error, "cannot open '" + out.string() + "' for writing");
  file << svg;
}

ArenaMap default_arena() {
  ArenaMap map;
  map.bounds = {0.0, 0.0, 10.0, 8.0};
  map.rooms = {
      {"kitchen", {0.0, 0.0, 4.0, 4.0}},
      {"living_room", {4.0, 0.0, 10.0, 4.0}},
      {"bedroom", {0.0, 4.0, 4.0, 8.0}},
      {"bathroom", {4.0, 4.0, 7.0, 8.0}},
      {"hallway", {7.0, 4.0, 10.0, 8.0}},
  };
  map.furniture = {
      {"fridge", "kitchen", {0.2, 3.0, 1.2, 3.9}},
      {"kitchen_table", "kitchen", {2.0, 1.0, 3.5, 2.0}},
      {"bed", "bedroom", {0.3, 5.5, 2.3, 7.5}},
      {"desk", "bedroom", {3.0, 4.2, 3.9, 5.8}},
      {"couch", "living_room", {6.0, 0.4, 8.5, 1.4}},
      {"shelf", "living_room", {9.3, 2.0, 9.9, 3.8}},
  };
  map.named_areas = {
      {"bar", {4.2, 2.5, 5.8, 3.8}},
  };
  check_map(map);
  return map;
}

}  // namespace epilog
