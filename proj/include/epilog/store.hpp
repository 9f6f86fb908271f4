#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "epilog/core.hpp"

namespace epilog {

// ---------------------------------------------------------------------------
// Event stream
// ---------------------------------------------------------------------------

struct BeginEvent {
  EpisodeKind kind;
  std::string label;

  bool operator==(const BeginEvent&) const = default;
};

// Closes the innermost open episode, or the innermost open episode with a
// matching label when one is given (this is how transposed capabilities end
// out of stack order).
struct EndEvent {
  std::optional<std::string> label;

  bool operator==(const EndEvent&) const = default;
};

struct ObserveEvent {
  std::string entity;
  EntityClass cls = EntityClass::object;
  std::map<std::string, std::string> fields;
  std::optional<MediaRef> media;

  bool operator==(const ObserveEvent&) const = default;
};

struct SayEvent {
  std::string speaker;
  std::string text;

  bool operator==(const SayEvent&) const = default;
};

struct ActEvent {
  std::string verb;
  std::vector<std::string> args;

  bool operator==(const ActEvent&) const = default;
};

struct EmotionEvent {
  EmotionGroup group = EmotionGroup::joy_trust;
  int intensity = 0;

  bool operator==(const EmotionEvent&) const = default;
};

struct PoseEvent {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const PoseEvent&) const = default;
};

using EventPayload =
    std::variant<BeginEvent, EndEvent, ObserveEvent, SayEvent, ActEvent, EmotionEvent, PoseEvent>;

struct Event {
  Timestamp t;
  EventPayload payload;

  bool operator==(const Event&) const = default;
};

// ---------------------------------------------------------------------------
// Working memory
// ---------------------------------------------------------------------------

struct PosePoint {
  Timestamp t;
  double x = 0.0;
  double y = 0.0;
};

// Entity state change staged until its source episode is consolidated.
struct PendingStateUpdate {
  std::string entity;
  EntityClass cls = EntityClass::object;
  StateRecord record;
};

// Short-term buffer: open episodes, closed roots awaiting consolidation, raw
// pose trail and staged entity updates. The open list keeps begin order; the
// context/task spine nests strictly while several capabilities may be open at
// once under the innermost task.
struct WorkingMemory {
  std::vector<EpisodeId> open;                     // begin order, innermost last
  std::map<EpisodeId, Episode> pending;            // open + closed, not yet consolidated
  std::vector<EpisodeId> closed_roots;             // consolidation order
  std::vector<PosePoint> pose_trail;
  std::vector<PendingStateUpdate> staged_state;
  std::optional<Timestamp> last_t;

  bool has_open() const { return !open.empty(); }
  EpisodeId innermost() const { return open.back(); }
};

// ---------------------------------------------------------------------------
// Long-term store
// ---------------------------------------------------------------------------

struct Violation {
  enum class Kind {
    nesting_kind,
    containment,
    missing_emotion,
    bad_interval,
    open_episode,
    dangling_reference,
    children_unsorted,
    state_history_unsorted,
    bad_intensity,
    bad_content,
  };

  Kind kind = Kind::nesting_kind;
  EpisodeId episode = 0;  // 0 when the violation is entity-level
  std::string detail;
};

const char* to_string(Violation::Kind kind);

struct Store {
  std::map<EpisodeId, Episode> episodes;
  std::map<std::string, Entity> entities;
  std::vector<EpisodeId> roots;  // context episodes, consolidation order
  EpisodeId next_id = 1;

  bool operator==(const Store&) const = default;
};

// Applies one event to working memory / store. Events must arrive in
// non-decreasing timestamp order; ties keep file order.
void ingest_event(WorkingMemory& wm, Store& store, const Event& event);

// Content access/modification (R3/R6).
const std::vector<ContentItem>& get_what(const Store& store, EpisodeId id);
void update_what(Store& store, EpisodeId id, const ContentItem& item);

// Time-overlapping same-parent siblings of a closed episode (R8).
std::vector<EpisodeId> transposed_with(const Store& store, EpisodeId id);

// Checks every structural invariant; violations are data, not errors.
std::vector<Violation> validate(const Store& store);

// ---------------------------------------------------------------------------
// Persistence (canonical JSON snapshot; load(save(s)) == s, save deterministic)
// ---------------------------------------------------------------------------

void save(const Store& store, const std::filesystem::path& path);
Store load(const std::filesystem::path& path);

std::string store_to_json_text(const Store& store);
Store store_from_json_text(const std::string& text);

// Event log lines (UTF-8 newline-delimited JSON, one event per line).
std::string event_to_json_line(const Event& event);
Event event_from_json_line(const std::string& line);
std::vector<Event> read_event_log(const std::filesystem::path& path);
void write_event_log(const std::vector<Event>& events, const std::filesystem::path& path);

}  // namespace epilog
