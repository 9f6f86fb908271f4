#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "epilog/arena.hpp"
#include "epilog/query.hpp"
#include "epilog/relevance.hpp"
#include "epilog/store.hpp"

namespace epilog {

struct EngineConfig {
  RelevanceParams relevance;
  std::string map_path;  // empty -> built-in arena
  std::string data_dir = "epilog-data";
  enum class ClockMode { wall, fixed };
  ClockMode clock_mode = ClockMode::wall;
  Timestamp fixed_now;
};

EngineConfig engine_config_from_file(const std::filesystem::path& path);
void engine_config_to_file(const EngineConfig& cfg, const std::filesystem::path& path);

// One process owns a data dir at a time (flock on <dir>/lock). State is event
// sourced: snapshot.json holds the consolidated store, journal.jsonl the
// events not yet consolidated, state.json the replay seed (last event time,
// last pose). Consolidation rewrites the journal down to the open suffix.
class Session {
public:
  explicit Session(EngineConfig cfg);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const Store& store() const { return store_; }
  const ArenaMap& map() const { return map_; }
  const EngineConfig& config() const { return config_; }

  // --now override > fixed clock > wall clock
  Timestamp now(std::optional<Timestamp> override_now) const;

  // Appends a validated event file to the journal; rejects the whole file on
  // the first illegal event.
  std::size_t ingest_file(const std::filesystem::path& events_path);

  ConsolidateStats consolidate_now(Timestamp now);
  std::vector<EpisodeId> forget_now(Timestamp now);
  std::vector<Violation> validate_store() const;
  Answer query(const std::string& dsl, Timestamp now) const;

private:
  void replay_journal();
  void write_state() const;

  EngineConfig config_;
  ArenaMap map_;
  Store store_;
  WorkingMemory wm_;
  std::vector<Event> journal_;
  // journal index just past each closed root's End event, same order as
  // wm_.closed_roots
  std::vector<std::size_t> closed_root_cuts_;
  std::optional<PosePoint> seed_pose_;
  std::optional<Timestamp> last_t_;
  int lock_fd_ = -1;
};

}  // namespace epilog
