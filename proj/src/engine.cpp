#include "epilog/engine.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <fstream>

#include "json.hpp"

namespace epilog {

using json = nlohmann::json;

EngineConfig engine_config_from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  EngineConfig cfg;
  try {
    cfg.relevance.half_life_s = j.value("half_life_s", 3600.0);
    cfg.relevance.w_h = j.value("w_h", 0.5);
    cfg.relevance.w_e = j.value("w_e", 0.5);
    cfg.relevance.forget_threshold = j.value("forget_threshold", 0.05);
    cfg.map_path = j.value("map", std::string{});
    cfg.data_dir = j.value("data_dir", std::string{"epilog-data"});
    if (j.contains("clock")) {
      const json& clock = j.at("clock");
      if (clock.is_string() && clock.get<std::string>() == "wall") {
        cfg.clock_mode = EngineConfig::ClockMode::wall;
      } else if (clock.is_object() && clock.contains("fixed")) {
        cfg.clock_mode = EngineConfig::ClockMode::fixed;
        cfg.fixed_now = Timestamp{clock.at("fixed").get<std::int64_t>()};
      } else {
        throw Error(Errc::invalid_config, "clock must be \"wall\" or {\"fixed\": t}");
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  if (!cfg.relevance.valid()) {
    throw Error(Errc::invalid_config, "relevance params invalid (w_h + w_e must be 1)");
  }
  return cfg;
}

void engine_config_to_file(const EngineConfig& cfg, const std::filesystem::path& path) {
  json j;
  j["half_life_s"] = cfg.relevance.half_life_s;
  j["w_h"] = cfg.relevance.w_h;
  j["w_e"] = cfg.relevance.w_e;
  j["forget_threshold"] = cfg.relevance.forget_threshold;
  j["map"] = cfg.map_path;
  j["data_dir"] = cfg.data_dir;
  if (cfg.clock_mode == EngineConfig::ClockMode::wall) {
    j["clock"] = "wall";
  } else {
    j["clock"] = json{{"fixed", cfg.fixed_now.ms}};
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

namespace {

std::filesystem::path snapshot_path(const EngineConfig& cfg) {
  return std::filesystem::path(cfg.data_dir) / "snapshot.json";
}
std::filesystem::path journal_path(const EngineConfig& cfg) {
  return std::filesystem::path(cfg.data_dir) / "journal.jsonl";
}
std::filesystem::path state_path(const EngineConfig& cfg) {
  return std::filesystem::path(cfg.data_dir) / "state.json";
}

}  // namespace

Session::Session(EngineConfig cfg) : config_(std::move(cfg)) {
  if (!config_.relevance.valid()) {
    throw Error(Errc::invalid_config, "relevance params invalid");
  }
  map_ = config_.map_path.empty() ? default_arena() : load_map(config_.map_path);

  std::error_code ec;
  std::filesystem::create_directories(config_.data_dir, ec);

  const std::string lock_file = (std::filesystem::path(config_.data_dir) / "lock").string();
  lock_fd_ = ::open(lock_file.c_str(), O_CREAT | O_RDWR, 0644);
  if (lock_fd_ < 0) throw Error(Errc::io_error, "cannot open lock file '" + lock_file + "'");
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(Errc::io_error, "data dir '" + config_.data_dir + "' is locked by another process");
  }

  if (std::filesystem::exists(snapshot_path(config_))) {
    store_ = load(snapshot_path(config_));
  }
  if (std::filesystem::exists(state_path(config_))) {
    std::ifstream in(state_path(config_), std::ios::binary);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(Errc::corrupt_snapshot, std::string("state.json: ") + e.what());
    }
    if (j.contains("last_t") && !j.at("last_t").is_null()) {
      last_t_ = Timestamp{j.at("last_t").get<std::int64_t>()};
    }
    if (j.contains("last_pose") && !j.at("last_pose").is_null()) {
      seed_pose_ = PosePoint{Timestamp{j.at("last_pose").at("t").get<std::int64_t>()},
                             j.at("last_pose").at("x").get<double>(),
                             j.at("last_pose").at("y").get<double>()};
    }
  }
  if (std::filesystem::exists(journal_path(config_))) {
    journal_ = read_event_log(journal_path(config_));
  }
  replay_journal();
}

Session::~Session() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void Session::replay_journal() {
  wm_ = WorkingMemory{};
  closed_root_cuts_.clear();
  if (seed_pose_) wm_.pose_trail.push_back(*seed_pose_);
  // replaying must not re-assign ids: rewind the counter to the journal start
  Store replay_store;
  replay_store.next_id = 1;
  std::size_t begins_before = 0;
  for (const Event& event : journal_) {
    if (std::holds_alternative<BeginEvent>(event.payload)) ++begins_before;
  }
  if (store_.next_id > static_cast<EpisodeId>(begins_before)) {
    replay_store.next_id = store_.next_id - static_cast<EpisodeId>(begins_before);
  }

  std::size_t index = 0;
  std::size_t roots_seen = 0;
  for (const Event& event : journal_) {
    ingest_event(wm_, replay_store, event);
    ++index;
    while (roots_seen < wm_.closed_roots.size()) {
      closed_root_cuts_.push_back(index);
      ++roots_seen;
    }
  }
  if (last_t_ && (!wm_.last_t || *wm_.last_t < *last_t_)) wm_.last_t = last_t_;
}

void Session::write_state() const {
  json j;
  j["last_t"] = wm_.last_t ? json(wm_.last_t->ms) : json(nullptr);
  if (seed_pose_) {
    j["last_pose"] = json{{"t", seed_pose_->t.ms}, {"x", seed_pose_->x}, {"y", seed_pose_->y}};
  } else {
    j["last_pose"] = nullptr;
  }
  std::ofstream out(state_path(config_), std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write state.json");
  out << j.dump(2) << "\n";
}

Timestamp Session::now(std::optional<Timestamp> override_now) const {
  if (override_now) return *override_now;
  if (config_.clock_mode == EngineConfig::ClockMode::fixed) return config_.fixed_now;
  const auto wall = std::chrono::system_clock::now().time_since_epoch();
  return Timestamp{std::chrono::duration_cast<std::chrono::milliseconds>(wall).count()};
}

std::size_t Session::ingest_file(const std::filesystem::path& events_path) {
  const std::vector<Event> events = read_event_log(events_path);

  // validate against copies so a bad file leaves no trace
  WorkingMemory wm_copy = wm_;
  Store store_copy = store_;
  std::vector<std::size_t> cuts_copy = closed_root_cuts_;
  std::size_t roots_seen = wm_copy.closed_roots.size();
  std::size_t index = journal_.size();
  for (const Event& event : events) {
    ingest_event(wm_copy, store_copy, event);
    ++index;
    while (roots_seen < wm_copy.closed_roots.size()) {
      cuts_copy.push_back(index);
      ++roots_seen;
    }
  }

  wm_ = std::move(wm_copy);
  store_ = std::move(store_copy);
  closed_root_cuts_ = std::move(cuts_copy);

  std::ofstream out(journal_path(config_), std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::io_error, "cannot append to journal");
  for (const Event& event : events) out << event_to_json_line(event) << "\n";
  journal_.insert(journal_.end(), events.begin(), events.end());
  // keep the snapshot's next_id in step with journal begins so replay after a
  // restart re-assigns the same ids
  save(store_, snapshot_path(config_));
  write_state();
  return events.size();
}

ConsolidateStats Session::consolidate_now(Timestamp now) {
  const std::size_t consumed_roots = wm_.closed_roots.size();
  const ConsolidateStats stats = consolidate(wm_, store_, map_, now);
  if (stats.moved_roots == 0) return stats;

  // drop the journal prefix covering the consumed roots
  std::size_t cut = 0;
  for (std::size_t i = 0; i < consumed_roots && i < closed_root_cuts_.size(); ++i) {
    cut = std::max(cut, closed_root_cuts_[i]);
  }
  for (std::size_t i = 0; i < cut; ++i) {
    if (const auto* pose = std::get_if<PoseEvent>(&journal_[i].payload)) {
      seed_pose_ = PosePoint{journal_[i].t, pose->x, pose->y};
    }
  }
  journal_.erase(journal_.begin(), journal_.begin() + static_cast<std::ptrdiff_t>(cut));
  closed_root_cuts_.erase(closed_root_cuts_.begin(),
                          closed_root_cuts_.begin() +
                              static_cast<std::ptrdiff_t>(std::min(consumed_roots,
                                                                   closed_root_cuts_.size())));
  for (std::size_t& position : closed_root_cuts_) position -= cut;

  save(store_, snapshot_path(config_));
  write_event_log(journal_, journal_path(config_));
  write_state();
  return stats;
}

std::vector<EpisodeId> Session::forget_now(Timestamp now) {
  std::vector<EpisodeId> pruned = forget(store_, now, config_.relevance);
  if (!pruned.empty()) save(store_, snapshot_path(config_));
  return pruned;
}

std::vector<Violation> Session::validate_store() const { return validate(store_); }

Answer Session::query(const std::string& dsl, Timestamp now) const {
  return eval_query(parse_query(dsl), store_, now, config_.relevance);
}

}  // namespace epilog
