#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "epilog/arena.hpp"
#include "epilog/query.hpp"
#include "epilog/store.hpp"

namespace epilog {

// ---------------------------------------------------------------------------
// Scenario generation
// ---------------------------------------------------------------------------

struct ScenarioConfig {
  std::uint64_t seed = 0;
  int people = 3;
  int objects = 5;
  std::vector<std::string> tests = default_tests();
  std::string map_path;             // empty -> built-in arena
  double emotion_event_rate = 1.0;  // scripted emotion events per task

  static std::vector<std::string> default_tests();
};

ScenarioConfig scenario_config_from_file(const std::filesystem::path& path);
void scenario_config_to_file(const ScenarioConfig& cfg, const std::filesystem::path& path);

struct GroundAction {
  std::string verb;
  std::vector<std::string> args;
};

// The generator's own record of an episode; ids predict the engine's
// assignment (begin order) but every value here is computed from the script,
// never by running the engine.
struct GroundEpisode {
  EpisodeId id = 0;
  EpisodeKind kind;
  std::string label;
  Timestamp start;
  std::optional<Timestamp> end;
  std::optional<EpisodeId> parent;
  std::vector<EpisodeId> children;
  std::map<EmotionGroup, int> own_emotions;
  std::map<EmotionGroup, int> rolled_emotions;  // per-group max over self + descendants
  std::vector<GroundAction> actions;
};

struct StateTruthRecord {
  Timestamp t;
  std::string entity;
  std::string field;
  std::string value;
};

struct RosterPerson {
  std::string id;
  int age = 0;
  std::string clothes;  // varies per test: similar, not identical
  std::string room;
};

struct RosterObject {
  std::string id;
  std::string place;  // current location value (furniture or area name)
};

struct Scenario {
  ScenarioConfig config;
  ArenaMap map;
  std::vector<RosterPerson> people;
  std::vector<RosterObject> objects;
  std::vector<Event> events;
  // ground truth, derived from the script alone:
  std::map<EpisodeId, GroundEpisode> episodes;
  std::vector<EpisodeId> context_order;
  std::vector<EpisodeId> task_order;
  std::vector<StateTruthRecord> state_timeline;
  Timestamp end_time;
  int scripted_emotion_events = 0;
};

// Deterministic in the seed: identical configs yield byte-identical logs.
Scenario generate_scenario(const ScenarioConfig& cfg);

// ---------------------------------------------------------------------------
// Query generation
// ---------------------------------------------------------------------------

enum class QueryCategory { cat1, cat2, cat3 };

const char* to_string(QueryCategory cat);

struct QueryItem {
  QueryCategory category = QueryCategory::cat1;
  std::string dsl;
  std::string truth_payload_json;   // canonical payload JSON, from ground tables
  std::vector<Event> fresh_events;  // simulated investigation / interaction
  Timestamp eval_now;               // shared across the generated set
};

// n_per_cat items per category, ground truth from the scenario tables only.
// Cat1: memories and emotions; Cat2: object investigation (with fresh
// observe events); Cat3: person interaction (with fresh say/observe events).
std::vector<QueryItem> generate_queries(const Scenario& scenario, int n_per_cat);

// The default 4-query operator session: one item per category plus the next
// unused item, in generation order.
std::vector<QueryItem> select_session(const std::vector<QueryItem>& items);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct QueryScore {
  QueryCategory category = QueryCategory::cat1;
  std::string dsl;
  bool correct = false;
  bool coherent = false;
  std::string note;  // engine error, if any
};

struct ScoreReport {
  std::vector<QueryScore> queries;
  std::map<std::string, bool> category_covered;  // "cat1".."cat3"
  int correct_count = 0;
  int coherent_count = 0;
  bool pass = false;  // >= 1 correct-and-coherent query per category
};

// Replays the scenario log through ingestion + consolidation, then runs each
// query (injecting its fresh events first), assembles evidence and checks
// correctness against the ground truth and answer/evidence coherence.
// Engine errors are recorded as incorrect answers, never propagated.
ScoreReport run_and_score(const Scenario& scenario, const std::vector<QueryItem>& items,
                          const RelevanceParams& params);

std::string score_report_json_text(const ScoreReport& report);
void write_query_items(const std::vector<QueryItem>& items, const std::filesystem::path& path);

}  // namespace epilog
