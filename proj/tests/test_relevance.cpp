#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "epilog/relevance.hpp"

using namespace epilog;

namespace {

Episode closed_episode(EpisodeId id, std::int64_t start, std::int64_t end,
                       std::map<EmotionGroup, int> emotions) {
  Episode e;
  e.id = id;
  e.kind = EpisodeKind::task();
  e.when = {Timestamp{start}, Timestamp{end}};
  e.emotions = std::move(emotions);
  return e;
}

struct TestRng {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(next() % n); }
};

}  // namespace

TEST_CASE("historic relevance decays by half-lives") {
  const RelevanceParams p;
  const Episode e = closed_episode(1, 0, 0, {{EmotionGroup::joy_trust, 0}});

  CHECK(historic_relevance(e, Timestamp{0}, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(historic_relevance(e, Timestamp{3600 * 1000}, p) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(historic_relevance(e, Timestamp{2 * 3600 * 1000}, p) ==
        doctest::Approx(0.25).epsilon(1e-12));

  Episode open = e;
  open.when.end.reset();
  CHECK_THROWS_AS(historic_relevance(open, Timestamp{10}, p), Error);
}

TEST_CASE("emotional relevance is max intensity over three") {
  CHECK(emotional_relevance(closed_episode(1, 0, 1, {{EmotionGroup::joy_trust, 0}})) == 0.0);
  CHECK(emotional_relevance(closed_episode(1, 0, 1, {{EmotionGroup::sadness_fear, 3}})) == 1.0);
  CHECK(emotional_relevance(closed_episode(
            1, 0, 1, {{EmotionGroup::joy_trust, 1}, {EmotionGroup::anger_disgust, 2}})) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(emotional_relevance(closed_episode(1, 0, 1, {})), Error);
}

TEST_CASE("blended relevance") {
  const RelevanceParams p;
  // fresh but neutral
  CHECK(relevance(closed_episode(1, 0, 0, {{EmotionGroup::joy_trust, 0}}), Timestamp{0}, p) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // ancient but intense: floors at w_e
  CHECK(relevance(closed_episode(1, 0, 0, {{EmotionGroup::sadness_fear, 3}}),
                  Timestamp{400L * 24 * 3600 * 1000}, p) ==
        doctest::Approx(0.5).epsilon(1e-9));
  // one half-life old, intensity 2
  CHECK(relevance(closed_episode(1, 0, 0, {{EmotionGroup::joy_trust, 2}}),
                  Timestamp{3600 * 1000}, p) ==
        doctest::Approx(0.5 * 0.5 + 0.5 * (2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("consolidation rolls emotions up and fills defaults") {
  WorkingMemory wm;
  Store store;
  const ArenaMap map = default_arena();

  auto play = [&](const Event& event) { ingest_event(wm, store, event); };
  play({Timestamp{0}, PoseEvent{2.0, 2.0}});  // kitchen
  play({Timestamp{1}, BeginEvent{EpisodeKind::context(), "ctx"}});
  play({Timestamp{2}, BeginEvent{EpisodeKind::task(), "outer"}});
  play({Timestamp{3}, BeginEvent{EpisodeKind::of_capability(CapabilityKind::hri), "talk"}});
  play({Timestamp{4}, EmotionEvent{EmotionGroup::surprise_anticipation, 2}});
  play({Timestamp{5}, EndEvent{}});
  play({Timestamp{6}, EndEvent{}});
  play({Timestamp{7}, BeginEvent{EpisodeKind::task(), "plain"}});
  play({Timestamp{8}, PoseEvent{5.0, 6.0}});  // bathroom
  play({Timestamp{9}, EndEvent{}});
  play({Timestamp{10}, EndEvent{}});

  const ConsolidateStats stats = consolidate(wm, store, map, Timestamp{20});
  CHECK(stats.moved_roots == 1);
  CHECK(stats.moved_episodes == 4);
  CHECK(wm.pending.empty());
  CHECK(validate(store).empty());

  // roll-up: the untagged parent task and root gain the child's tag
  CHECK(store.episodes.at(2).emotions.at(EmotionGroup::surprise_anticipation) == 2);
  CHECK(store.episodes.at(1).emotions.at(EmotionGroup::surprise_anticipation) == 2);
  // untagged subtree gets the neutral default
  CHECK(store.episodes.at(4).emotions == std::map<EmotionGroup, int>{{EmotionGroup::joy_trust, 0}});

  // where-lists resolved from the pose trail
  REQUIRE(!store.episodes.at(1).where.empty());
  CHECK(store.episodes.at(1).where.front().room == "kitchen");
  CHECK(store.episodes.at(4).where.back().room == "bathroom");

  SUBCASE("empty working memory consolidates to zero stats") {
    WorkingMemory idle;
    Store side;
    const ConsolidateStats none = consolidate(idle, side, map, Timestamp{30});
    CHECK(none.moved_roots == 0);
    CHECK(none.moved_episodes == 0);
  }

  SUBCASE("open episodes stay in working memory") {
    WorkingMemory wm2;
    Store store2;
    ingest_event(wm2, store2, {Timestamp{0}, BeginEvent{EpisodeKind::context(), "open ctx"}});
    const ConsolidateStats none = consolidate(wm2, store2, map, Timestamp{5});
    CHECK(none.moved_roots == 0);
    CHECK(wm2.open.size() == 1);
    CHECK(store2.episodes.empty());
  }
}

TEST_CASE("consolidation applies staged entity state only for moved episodes") {
  WorkingMemory wm;
  Store store;
  const ArenaMap map = default_arena();
  auto play = [&](const Event& event) { ingest_event(wm, store, event); };

  play({Timestamp{0}, BeginEvent{EpisodeKind::context(), "first"}});
  play({Timestamp{1},
        ObserveEvent{"apple", EntityClass::object, {{"location", "fridge"}}, std::nullopt}});
  play({Timestamp{2}, EndEvent{}});
  play({Timestamp{3}, BeginEvent{EpisodeKind::context(), "second"}});
  play({Timestamp{4},
        ObserveEvent{"apple", EntityClass::object, {{"location", "desk"}}, std::nullopt}});

  consolidate(wm, store, map, Timestamp{10});
  const Entity& apple = store.entities.at("apple");
  REQUIRE(apple.state_history.size() == 1);  // the open context's record is still staged
  CHECK(apple.state_history[0].value == "fridge");
  CHECK(wm.staged_state.size() == 1);
  CHECK(validate(store).empty());

  play({Timestamp{5}, EndEvent{}});
  consolidate(wm, store, map, Timestamp{10});
  CHECK(store.entities.at("apple").state_history.size() == 2);
  CHECK(wm.staged_state.empty());
  CHECK(validate(store).empty());
}

TEST_CASE("forgetting") {
  const RelevanceParams p;

  auto build = [&](std::map<EmotionGroup, int> child_tags, std::map<EmotionGroup, int> leaf_tags) {
    Store store;
    Episode root = closed_episode(1, 0, 100, {{EmotionGroup::joy_trust, 0}});
    root.kind = EpisodeKind::context();
    Episode task = closed_episode(2, 10, 90, std::move(child_tags));
    task.parent = 1;
    root.children = {2};
    Episode leaf = closed_episode(3, 20, 80, std::move(leaf_tags));
    leaf.kind = EpisodeKind::of_capability(CapabilityKind::perception);
    leaf.parent = 2;
    task.children = {3};
    store.episodes[1] = root;
    store.episodes[2] = task;
    store.episodes[3] = leaf;
    store.roots = {1};
    store.next_id = 4;
    return store;
  };

  SUBCASE("fresh stores lose nothing") {
    Store store = build({{EmotionGroup::joy_trust, 0}}, {{EmotionGroup::joy_trust, 0}});
    CHECK(forget(store, Timestamp{100}, p).empty());
  }

  SUBCASE("irrelevant parent survives through a relevant child") {
    // a week of age at a one-hour half-life: historic is ~0
    Store store = build({{EmotionGroup::joy_trust, 0}}, {{EmotionGroup::sadness_fear, 3}});
    const Timestamp later{100 + 7L * 24 * 3600 * 1000};
    const std::vector<EpisodeId> pruned = forget(store, later, p);
    CHECK(pruned.empty());  // leaf scores 0.5 >= theta, parent kept for it
  }

  SUBCASE("neutral old subtrees fall, contexts stay") {
    Store store = build({{EmotionGroup::joy_trust, 0}}, {{EmotionGroup::joy_trust, 0}});
    const Timestamp later{100 + 7L * 24 * 3600 * 1000};
    const std::vector<EpisodeId> pruned = forget(store, later, p);
    CHECK(pruned == std::vector<EpisodeId>{2, 3});
    CHECK(store.episodes.contains(1));
    CHECK(store.episodes.at(1).children.empty());
  }

  SUBCASE("theta = 1 prunes every non-context episode once time has passed") {
    Store store = build({{EmotionGroup::joy_trust, 3}}, {{EmotionGroup::sadness_fear, 3}});
    RelevanceParams hard = p;
    hard.forget_threshold = 1.0;
    const std::vector<EpisodeId> pruned = forget(store, Timestamp{200}, hard);
    CHECK(pruned == std::vector<EpisodeId>{2, 3});
    CHECK(store.episodes.size() == 1);
  }

  SUBCASE("entity records re-point to the nearest retained ancestor") {
    Store store = build({{EmotionGroup::joy_trust, 0}}, {{EmotionGroup::joy_trust, 0}});
    Entity apple;
    apple.id = "apple";
    apple.cls = EntityClass::object;
    apple.state_history = {{Timestamp{30}, "location", "desk", 3}};
    store.entities["apple"] = apple;
    const Timestamp later{100 + 7L * 24 * 3600 * 1000};
    forget(store, later, p);
    REQUIRE(store.entities.at("apple").state_history.size() == 1);
    CHECK(store.entities.at("apple").state_history[0].source == 1);
    CHECK(validate(store).empty());
  }

  SUBCASE("forget is idempotent at a fixed now") {
    Store store = build({{EmotionGroup::sadness_fear, 1}}, {{EmotionGroup::joy_trust, 0}});
    const Timestamp later{100 + 7L * 24 * 3600 * 1000};
    forget(store, later, p);
    CHECK(forget(store, later, p).empty());
  }
}

TEST_CASE("rank ordering and ties") {
  const RelevanceParams p;
  Store store;
  auto add = [&](EpisodeId id, std::int64_t end, int intensity) {
    Episode e = closed_episode(id, 0, end, {{EmotionGroup::joy_trust, intensity}});
    e.kind = EpisodeKind::context();
    store.episodes[id] = e;
    store.roots.push_back(id);
  };
  const std::int64_t hour = 3600 * 1000;

  add(1, 0, 0);         // old, neutral
  add(2, 2 * hour, 0);  // newer, neutral
  add(3, 0, 3);         // old, intense
  add(4, 2 * hour, 3);  // newer, intense

  const Timestamp now{4 * hour};
  const std::vector<EpisodeId> ranked = rank(store, {1, 2, 3, 4}, now, p);
  CHECK(ranked == std::vector<EpisodeId>{4, 3, 2, 1});

  SUBCASE("equal scores break by later end, then lower id") {
    Store tie;
    auto add_tie = [&](EpisodeId id, std::int64_t end) {
      Episode e = closed_episode(id, 0, end, {{EmotionGroup::joy_trust, 1}});
      e.kind = EpisodeKind::context();
      tie.episodes[id] = e;
    };
    add_tie(5, 100);
    add_tie(6, 100);
    add_tie(7, 200);
    const std::vector<EpisodeId> order = rank(tie, {6, 7, 5}, Timestamp{200}, p);
    CHECK(order == std::vector<EpisodeId>{7, 5, 6});
  }

  SUBCASE("unknown and open episodes are errors") {
    CHECK_THROWS_AS(rank(store, {99}, now, p), Error);
    Store open_store = store;
    open_store.episodes.at(1).when.end.reset();
    CHECK_THROWS_AS(rank(open_store, {1}, now, p), Error);
  }
}

TEST_CASE("relevance laws over random ages") {
  const RelevanceParams p;
  TestRng rng{42};
  const Episode e = closed_episode(1, 0, 0, {{EmotionGroup::joy_trust, 2}});

  for (int i = 0; i < 1000; ++i) {
    // ages within 1000 half-lives keep exp2 comfortably inside double range
    const std::int64_t a1 = rng.below(1000L * 3600 * 1000);
    const std::int64_t a2 = rng.below(1000L * 3600 * 1000);
    if (a1 == a2) continue;
    const double r1 = historic_relevance(e, Timestamp{a1}, p);
    const double r2 = historic_relevance(e, Timestamp{a2}, p);
    CHECK((a1 < a2 ? r1 > r2 : r2 > r1));
  }

  SUBCASE("uniform time shift preserves order for equal emotions") {
    for (int i = 0; i < 200; ++i) {
      const std::int64_t end1 = rng.below(100L * 3600 * 1000);
      const std::int64_t end2 = rng.below(100L * 3600 * 1000);
      const std::int64_t base = 100L * 3600 * 1000 + rng.below(3600 * 1000);
      const std::int64_t shift = rng.below(100L * 3600 * 1000);
      const Episode e1 = closed_episode(1, 0, end1, {{EmotionGroup::joy_trust, 2}});
      const Episode e2 = closed_episode(2, 0, end2, {{EmotionGroup::joy_trust, 2}});
      const double before1 = relevance(e1, Timestamp{base}, p);
      const double before2 = relevance(e2, Timestamp{base}, p);
      const double after1 = relevance(e1, Timestamp{base + shift}, p);
      const double after2 = relevance(e2, Timestamp{base + shift}, p);
      if (before1 < before2) CHECK(after1 <= after2);
      if (before1 > before2) CHECK(after1 >= after2);
    }
  }
}
