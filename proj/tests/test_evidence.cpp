#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "epilog/evidence.hpp"

using namespace epilog;
namespace fs = std::filesystem;

namespace {

// 2019-07-17 15:40:15 UTC
constexpr std::int64_t kFigureEpochMs = 1563378015000;

struct Fixture {
  Store store;
  WorkingMemory wm;
  ArenaMap map = default_arena();
  RelevanceParams params;
  Timestamp now{kFigureEpochMs + 2 * 3600 * 1000};

  Fixture() {
    auto play = [&](Event event) { ingest_event(wm, store, event); };
    play({Timestamp{kFigureEpochMs - 1000}, PoseEvent{3.8, 0.2}});  // kitchen
    play({Timestamp{kFigureEpochMs}, BeginEvent{EpisodeKind::context(), "RoboCup, Stage 2, Test: EpLTM"}});
    play({Timestamp{kFigureEpochMs + 1000}, BeginEvent{EpisodeKind::task(), "serve breakfast"}});
    play({Timestamp{kFigureEpochMs + 2000},
          BeginEvent{EpisodeKind::of_capability(CapabilityKind::perception), "find the apple"}});
    play({Timestamp{kFigureEpochMs + 3000}, ActEvent{"search", {"apple"}}});
    play({Timestamp{kFigureEpochMs + 4000},
          ObserveEvent{"apple", EntityClass::object, {{"location", "kitchen_table"}},
                       MediaRef{"media/apple.png", MediaRef::Kind::image}}});
    play({Timestamp{kFigureEpochMs + 5000}, SayEvent{"robot", "found the apple"}});
    play({Timestamp{kFigureEpochMs + 6000}, EmotionEvent{EmotionGroup::joy_trust, 2}});
    play({Timestamp{kFigureEpochMs + 7000},
          ObserveEvent{"apple", EntityClass::object, {{"color", "red"}},
                       MediaRef{"media/apple2.png", MediaRef::Kind::image}}});
    play({Timestamp{kFigureEpochMs + 8000}, EndEvent{}});
    play({Timestamp{kFigureEpochMs + 9000}, EndEvent{}});
    play({Timestamp{kFigureEpochMs + 10000}, EndEvent{}});
    consolidate(wm, store, map, now);
  }

  Answer run(const std::string& dsl) {
    return eval_query(parse_query(dsl), store, now, params);
  }
};

}  // namespace

TEST_CASE("datetime formatting matches the display convention") {
  CHECK(format_datetime(Timestamp{kFigureEpochMs}) == "Wed, July 17, 2019 15:40:15");
  CHECK(format_datetime(Timestamp{0}) == "Thu, January 1, 1970 00:00:00");
  CHECK(format_datetime(Timestamp{1000L * 86400 * 1000 + 3661000}) ==
        "Wed, September 27, 1972 01:01:01");
}

TEST_CASE("assemble produces the verifiable display fields") {
  Fixture fx;
  const Answer answer = fx.run("WHERE-IS apple");
  const EvidenceBundle bundle = assemble(fx.store, answer, fx.map);

  // the supporting capability episode anchors the bundle
  CHECK(bundle.context_line ==
        "RoboCup, Stage 2, Test: EpLTM / serve breakfast / find the apple");
  CHECK(bundle.datetime_line == "Wed, July 17, 2019 15:40:17");
  CHECK(bundle.location_name == "kitchen");
  CHECK(bundle.emotion_series.at(EmotionGroup::joy_trust) == 2);
  CHECK(bundle.emotion_series.at(EmotionGroup::sadness_fear) == 0);
  CHECK(bundle.emotion_series.size() == 4);
  CHECK(bundle.map_svg_name == "map.svg");
  CHECK(bundle.map_svg.find("kitchen") != std::string::npos);
  REQUIRE(bundle.media.size() == 2);
  CHECK(bundle.media[0].path == "media/apple.png");
  CHECK(bundle.media[1].path == "media/apple2.png");
  // utterance subtitles ride along
  bool has_subtitle = false;
  for (const std::string& line : bundle.text_lines) {
    if (line == "robot: found the apple") has_subtitle = true;
  }
  CHECK(has_subtitle);
  CHECK(bundle.supporting_ids == answer.supporting);

  SUBCASE("empty provenance is an error") {
    Answer empty = answer;
    empty.supporting.clear();
    empty.primary.reset();
    CHECK_THROWS_AS(assemble(fx.store, empty, fx.map), Error);
  }
}

TEST_CASE("write_report emits deterministic bytes") {
  Fixture fx;
  const Answer answer = fx.run("DESCRIBE 2");
  const EvidenceBundle bundle = assemble(fx.store, answer, fx.map);

  const fs::path dir_a = fs::temp_directory_path() / "epilog_report_a";
  const fs::path dir_b = fs::temp_directory_path() / "epilog_report_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  write_report(bundle, dir_a);
  write_report(bundle, dir_b);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir_a / "bundle.json") == slurp(dir_b / "bundle.json"));
  CHECK(slurp(dir_a / "map.svg") == slurp(dir_b / "map.svg"));
  CHECK(slurp(dir_a / "bundle.json").find("media/apple.png") != std::string::npos);
  CHECK(slurp(dir_a / "bundle.json").find("media/apple2.png") != std::string::npos);
}

TEST_CASE("coherence holds for engine-produced bundles and breaks under mutation") {
  Fixture fx;

  for (const char* dsl : {"WHERE-IS apple", "DESCRIBE 2", "FEELING WHERE LABEL~\"EpLTM\"",
                          "FIND EPISODES WHERE KIND=task", "WHEN KIND=context",
                          "STATE OF apple FIELD color"}) {
    const Answer answer = fx.run(dsl);
    const EvidenceBundle bundle = assemble(fx.store, answer, fx.map);
    const CoherenceResult result = check_coherence(answer, bundle, fx.store, fx.params);
    INFO(dsl, " reasons: ", result.reasons.empty() ? "" : result.reasons.front());
    CHECK(result.coherent);
  }

  const Answer answer = fx.run("WHERE-IS apple");
  const EvidenceBundle truthful = assemble(fx.store, answer, fx.map);

  SUBCASE("context mutation") {
    EvidenceBundle mutated = truthful;
    mutated.context_line = "RoboCup, Stage 1, Test: SPR";
    const CoherenceResult result = check_coherence(answer, mutated, fx.store, fx.params);
    CHECK_FALSE(result.coherent);
    CHECK(result.reasons == std::vector<std::string>{"ContextMismatch"});
  }

  SUBCASE("datetime mutation") {
    EvidenceBundle mutated = truthful;
    mutated.datetime_line = "Wed, July 17, 2019 15:40:18";
    CHECK_FALSE(check_coherence(answer, mutated, fx.store, fx.params).coherent);
  }

  SUBCASE("location mutation") {
    EvidenceBundle mutated = truthful;
    mutated.location_name = "bedroom";
    const CoherenceResult result = check_coherence(answer, mutated, fx.store, fx.params);
    CHECK_FALSE(result.coherent);
    CHECK(result.reasons == std::vector<std::string>{"LocationMismatch"});
  }

  SUBCASE("emotion mutation") {
    EvidenceBundle mutated = truthful;
    mutated.emotion_series[EmotionGroup::joy_trust] = 3;
    CHECK_FALSE(check_coherence(answer, mutated, fx.store, fx.params).coherent);
  }

  SUBCASE("foreign media is flagged") {
    EvidenceBundle mutated = truthful;
    mutated.media.push_back({"media/forged.png", MediaRef::Kind::image});
    CHECK_FALSE(check_coherence(answer, mutated, fx.store, fx.params).coherent);
  }

  SUBCASE("an answer not derivable from its citations is incoherent") {
    // claim a value the supporting episodes never recorded
    Answer forged = answer;
    forged.payload = std::optional<std::string>{"bedroom"};
    const EvidenceBundle bundle = assemble(fx.store, forged, fx.map);
    const CoherenceResult result = check_coherence(forged, bundle, fx.store, fx.params);
    CHECK_FALSE(result.coherent);
    bool underivable = false;
    for (const std::string& reason : result.reasons) {
      if (reason.rfind("UnderivableAnswer", 0) == 0) underivable = true;
    }
    CHECK(underivable);
  }

  SUBCASE("citing an unrelated episode is incoherent") {
    // the answer cites the context instead of the recording episode
    Answer forged = answer;
    forged.supporting = {1};
    forged.primary = 1;
    const EvidenceBundle bundle = assemble(fx.store, forged, fx.map);
    CHECK_FALSE(check_coherence(forged, bundle, fx.store, fx.params).coherent);
  }
}
