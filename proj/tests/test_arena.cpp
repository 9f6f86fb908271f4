#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "epilog/arena.hpp"

using namespace epilog;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::string("epilog_arena_") + name);
}

// splitmix64, local to the tests
struct TestRng {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }
};

}  // namespace

TEST_CASE("default arena fixture is a valid map") {
  const ArenaMap map = default_arena();
  CHECK_NOTHROW(check_map(map));
  CHECK(map.rooms.size() >= 4);
  CHECK(map.find_rect("kitchen") != nullptr);
  CHECK(map.find_rect("fridge") != nullptr);
  CHECK(map.find_rect("bed") != nullptr);
  CHECK(map.find_rect("desk") != nullptr);
}

TEST_CASE("map load/save round trip and validation") {
  const fs::path path = temp_file("map.json");
  save_map(default_arena(), path);
  const ArenaMap map = load_map(path);
  CHECK(map.rooms.size() == default_arena().rooms.size());
  CHECK(map.furniture.size() == default_arena().furniture.size());

  SUBCASE("furniture outside its room is invalid") {
    ArenaMap bad = default_arena();
    bad.furniture[0].rect = {8.0, 6.0, 9.0, 7.0};  // fridge far from the kitchen
    CHECK_THROWS_AS(check_map(bad), Error);
    try {
      check_map(bad);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_map);
    }
  }

  SUBCASE("duplicate room name is invalid") {
    ArenaMap bad = default_arena();
    bad.rooms.push_back({"kitchen", {0.0, 0.0, 1.0, 1.0}});
    CHECK_THROWS_AS(check_map(bad), Error);
  }

  SUBCASE("empty rooms list is valid (arena-only resolution)") {
    ArenaMap empty;
    empty.bounds = {0.0, 0.0, 5.0, 5.0};
    CHECK_NOTHROW(check_map(empty));
    const SemanticLocation loc = resolve_pose(empty, 2.0, 2.0);
    CHECK(loc.scope == LocationScope::inside_arena);
    CHECK_FALSE(loc.room.has_value());
  }

  SUBCASE("missing file is an io error") {
    CHECK_THROWS_AS(load_map(temp_file("missing_nope.json")), Error);
  }
}

TEST_CASE("resolve_pose") {
  const ArenaMap map = default_arena();

  SUBCASE("room resolution") {
    const SemanticLocation loc = resolve_pose(map, 3.8, 0.2);  // kitchen, far from furniture
    CHECK(loc.scope == LocationScope::inside_arena);
    CHECK(loc.room == "kitchen");
    CHECK_FALSE(loc.furniture.has_value());
  }

  SUBCASE("outside the bounds") {
    CHECK(resolve_pose(map, -1.0, 2.0).scope == LocationScope::outside_arena);
    CHECK(resolve_pose(map, 11.0, 2.0).scope == LocationScope::outside_arena);
  }

  SUBCASE("furniture attaches within the inflation distance") {
    // 0.2 m below the fridge rectangle [0.2,3.0,1.2,3.9]
    const SemanticLocation loc = resolve_pose(map, 0.7, 2.8);
    CHECK(loc.room == "kitchen");
    CHECK(loc.furniture == "fridge");
    // 0.8 m away: beyond the 0.5 m inflation
    const SemanticLocation far = resolve_pose(map, 0.7, 2.2);
    CHECK(far.room == "kitchen");
    CHECK_FALSE(far.furniture.has_value());
  }

  SUBCASE("named area wins by smallest containing region") {
    const SemanticLocation loc = resolve_pose(map, 5.0, 3.0);  // inside the bar
    CHECK(loc.room == "bar");
    const SemanticLocation outside_bar = resolve_pose(map, 8.0, 3.0);
    CHECK(outside_bar.room == "living_room");
  }

  SUBCASE("total over a point grid") {
    for (double x = -2.0; x <= 12.0; x += 0.25) {
      for (double y = -2.0; y <= 10.0; y += 0.25) {
        const SemanticLocation loc = resolve_pose(map, x, y);
        if (loc.furniture) CHECK(loc.room.has_value());
      }
    }
  }
}

TEST_CASE("relative_position") {
  ArenaMap map;
  map.bounds = {0.0, 0.0, 20.0, 20.0};
  map.rooms = {{"hall", {0.0, 0.0, 20.0, 20.0}}};
  map.furniture = {
      {"anchor", "hall", {8.0, 8.0, 12.0, 12.0}},
  };
  check_map(map);

  SUBCASE("spec cases") {
    // subject centroid left of the anchor, no vertical stacking
    CHECK(relative_position(map, {2.0, 8.0, 4.0, 12.0}, "anchor") == RelPredicate::left_of);
    // subject atop the anchor with x overlap
    CHECK(relative_position(map, {9.0, 13.0, 11.0, 15.0}, "anchor") == RelPredicate::over);
    CHECK_THROWS_AS(relative_position(map, {0.0, 0.0, 1.0, 1.0}, "sofa2"), Error);
  }

  SUBCASE("under and right") {
    CHECK(relative_position(map, {9.0, 4.0, 11.0, 6.0}, "anchor") == RelPredicate::under);
    CHECK(relative_position(map, {15.0, 9.0, 17.0, 11.0}, "anchor") == RelPredicate::right_of);
  }

  SUBCASE("interpenetrating close rectangles are near") {
    CHECK(relative_position(map, {9.5, 9.5, 10.5, 10.5}, "anchor") == RelPredicate::near);
  }

  SUBCASE("mirror properties over random rectangle pairs") {
    TestRng rng{7};
    for (int i = 0; i < 500; ++i) {
      auto rect = [&]() -> Rect {
        const double x0 = rng.unit() * 16.0;
        const double y0 = rng.unit() * 16.0;
        return {x0, y0, x0 + 0.5 + rng.unit() * 3.0, y0 + 0.5 + rng.unit() * 3.0};
      };
      ArenaMap m;
      m.bounds = {-10.0, -10.0, 40.0, 40.0};
      m.rooms = {{"hall", {-10.0, -10.0, 40.0, 40.0}}};
      const Rect a = rect();
      const Rect b = rect();
      m.furniture = {{"fa", "hall", a}, {"fb", "hall", b}};

      const RelPredicate ab = relative_position(m, a, "fb");
      const RelPredicate ba = relative_position(m, b, "fa");
      switch (ab) {
        case RelPredicate::left_of: CHECK(ba == RelPredicate::right_of); break;
        case RelPredicate::right_of: CHECK(ba == RelPredicate::left_of); break;
        case RelPredicate::over: CHECK(ba == RelPredicate::under); break;
        case RelPredicate::under: CHECK(ba == RelPredicate::over); break;
        case RelPredicate::near: CHECK(ba == RelPredicate::near); break;
      }
    }
  }
}

TEST_CASE("map marker rendering") {
  const ArenaMap map = default_arena();
  SemanticLocation kitchen{LocationScope::inside_arena, "kitchen", std::nullopt, std::nullopt};

  const std::string svg = render_map_marker_svg(map, kitchen);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("kitchen") != std::string::npos);
  CHECK(svg.find("#ffd166") != std::string::npos);  // highlight fill present
  CHECK(svg.find("<circle") != std::string::npos);

  SUBCASE("byte determinism") {
    CHECK(render_map_marker_svg(map, kitchen) == svg);
  }

  SUBCASE("furniture marker differs from room marker") {
    SemanticLocation fridge{LocationScope::inside_arena, "kitchen", "fridge", std::nullopt};
    CHECK(render_map_marker_svg(map, fridge) != svg);
  }

  SUBCASE("outside the arena is an error") {
    SemanticLocation outside{LocationScope::outside_arena, std::nullopt, std::nullopt,
                             std::nullopt};
    CHECK_THROWS_AS(render_map_marker_svg(map, outside), Error);
  }

  SUBCASE("file output") {
    const fs::path out = temp_file("marker.svg");
    render_map_marker(map, kitchen, out);
    std::ifstream in(out);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == svg);
  }
}
