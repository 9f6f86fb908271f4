#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "epilog/core.hpp"

using namespace epilog;

namespace {

TimeInterval iv(std::int64_t start, std::int64_t end) {
  return {Timestamp{start}, Timestamp{end}};
}

}  // namespace

TEST_CASE("interval_overlaps half-open semantics") {
  CHECK(interval_overlaps(iv(0, 10), iv(5, 15)));
  CHECK_FALSE(interval_overlaps(iv(0, 5), iv(5, 10)));  // touching is not overlap
  CHECK(interval_overlaps(iv(3, 4), iv(0, 10)));        // containment implies overlap

  // absent end behaves as +infinity
  TimeInterval open{Timestamp{100}, std::nullopt};
  CHECK(interval_overlaps(open, iv(50, 200)));
  CHECK(interval_overlaps(iv(50, 200), open));
  CHECK_FALSE(interval_overlaps(open, iv(50, 100)));
}

TEST_CASE("interval_contains") {
  CHECK(interval_contains(iv(0, 10), iv(2, 3)));
  CHECK_FALSE(interval_contains(iv(0, 10), iv(5, 12)));
  CHECK(interval_contains(iv(0, 10), iv(0, 10)));  // identity

  TimeInterval open{Timestamp{0}, std::nullopt};
  CHECK(interval_contains(open, iv(5, 100)));
  CHECK_FALSE(interval_contains(iv(0, 10), open));  // open inner escapes any closed outer
}

TEST_CASE("interval algebra over an exhaustive small grid") {
  // point enumeration is the oracle for non-degenerate intervals
  std::vector<TimeInterval> all;
  for (int s = 0; s <= 6; ++s) {
    for (int e = s + 1; e <= 6; ++e) all.push_back(iv(s, e));
  }
  for (const TimeInterval& a : all) {
    for (const TimeInterval& b : all) {
      CHECK(interval_overlaps(a, b) == interval_overlaps(b, a));
      bool shares_point = false;
      for (int x = 0; x < 7; ++x) {
        if (x >= a.start.ms && x < a.end->ms && x >= b.start.ms && x < b.end->ms) {
          shares_point = true;
        }
      }
      CHECK(interval_overlaps(a, b) == shares_point);

      bool subset = true;
      for (int x = 0; x < 7; ++x) {
        if (x >= b.start.ms && x < b.end->ms && !(x >= a.start.ms && x < a.end->ms)) {
          subset = false;
        }
      }
      CHECK(interval_contains(a, b) == subset);
      CHECK(interval_contains(a, a));

      for (const TimeInterval& c : all) {
        if (interval_contains(a, b) && interval_contains(b, c)) {
          CHECK(interval_contains(a, c));
        }
      }
    }
  }
}

TEST_CASE("degenerate intervals follow the boundary formulas") {
  // an instantaneous episode counts as overlapping an interval that strictly
  // brackets its position, per the half-open boundary formula
  CHECK(interval_overlaps(iv(2, 2), iv(0, 5)));
  CHECK_FALSE(interval_overlaps(iv(0, 0), iv(0, 5)));  // touch at the start
  CHECK_FALSE(interval_overlaps(iv(5, 5), iv(0, 5)));
  CHECK(interval_contains(iv(0, 5), iv(2, 2)));
  CHECK(interval_contains(iv(0, 5), iv(0, 0)));
}

TEST_CASE("emotion_phrase levels") {
  CHECK(emotion_phrase({EmotionGroup::joy_trust, 1}) == "a little happy");
  CHECK(emotion_phrase({EmotionGroup::anger_disgust, 3}) == "very angry");
  CHECK(emotion_phrase({EmotionGroup::sadness_fear, 0}) == "normal");
  CHECK(emotion_phrase({EmotionGroup::joy_trust, 2}) == "happy");
  CHECK(emotion_phrase({EmotionGroup::surprise_anticipation, 2}) == "surprised");
  CHECK(emotion_phrase({EmotionGroup::sadness_fear, 3}) == "very sad");
}

TEST_CASE("emotion_phrase injective for intensity >= 1, constant at 0") {
  std::set<std::string> phrases;
  int nonzero = 0;
  for (EmotionGroup group : kEmotionGroups) {
    for (int intensity = 0; intensity <= 3; ++intensity) {
      const std::string phrase = emotion_phrase({group, intensity});
      if (intensity == 0) {
        CHECK(phrase == "normal");
      } else {
        phrases.insert(phrase);
        ++nonzero;
      }
    }
  }
  CHECK(static_cast<int>(phrases.size()) == nonzero);
}

TEST_CASE("episode kind helpers") {
  CHECK(EpisodeKind::context().level == EpisodeLevel::context);
  CHECK_FALSE(EpisodeKind::task().capability.has_value());
  const EpisodeKind nav = EpisodeKind::of_capability(CapabilityKind::navigation);
  CHECK(nav.level == EpisodeLevel::capability);
  CHECK(nav.capability == CapabilityKind::navigation);
}

TEST_CASE("semantic location text is coordinate-free") {
  SemanticLocation kitchen{LocationScope::inside_arena, "kitchen", std::nullopt, std::nullopt};
  CHECK(to_text(kitchen) == "kitchen");

  SemanticLocation fridge{LocationScope::inside_arena, "kitchen", "fridge", std::nullopt};
  CHECK(to_text(fridge) == "kitchen, near the fridge");

  SemanticLocation outside{LocationScope::outside_arena, std::nullopt, std::nullopt, std::nullopt};
  CHECK(to_text(outside) == "outside the arena");

  SemanticLocation related{LocationScope::inside_arena, "bedroom", std::nullopt,
                           SpatialRelation{RelPredicate::left_of, "desk"}};
  CHECK(to_text(related) == "bedroom, at the left of the desk");
}

TEST_CASE("names round-trip") {
  for (EmotionGroup group : kEmotionGroups) {
    CHECK(emotion_group_from_string(to_string(group)) == group);
  }
  CHECK_FALSE(emotion_group_from_string("joy").has_value());
  for (EpisodeLevel level :
       {EpisodeLevel::context, EpisodeLevel::task, EpisodeLevel::capability}) {
    CHECK(episode_level_from_string(to_string(level)) == level);
  }
  for (CapabilityKind kind : {CapabilityKind::navigation, CapabilityKind::manipulation,
                              CapabilityKind::perception, CapabilityKind::hri}) {
    CHECK(capability_kind_from_string(to_string(kind)) == kind);
  }
}
