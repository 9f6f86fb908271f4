#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace epilog {

using EpisodeId = std::int64_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class Errc {
  nesting_violation,
  end_without_open,
  out_of_order_timestamp,
  no_open_episode,
  unknown_episode,
  open_episode,
  missing_emotion,
  unknown_anchor,
  outside_arena,
  invalid_map,
  io_error,
  corrupt_snapshot,
  syntax_error,
  future_timestamp,
  empty_provenance,
  invalid_config,
  insufficient_scenario,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

private:
  Errc code_;
};

// ---------------------------------------------------------------------------
// Time
// ---------------------------------------------------------------------------

// Milliseconds since the Unix epoch, UTC. Integer so interval logic is exact.
struct Timestamp {
  std::int64_t ms = 0;

  auto operator<=>(const Timestamp&) const = default;
};

// Half-open interval [start, end). `end` is absent while the episode is open;
// an absent end behaves as +infinity in the interval algebra.
struct TimeInterval {
  Timestamp start;
  std::optional<Timestamp> end;

  bool closed() const { return end.has_value(); }

  bool operator==(const TimeInterval&) const = default;
};

bool interval_overlaps(const TimeInterval& a, const TimeInterval& b);
bool interval_contains(const TimeInterval& outer, const TimeInterval& inner);

// ---------------------------------------------------------------------------
// Emotions
// ---------------------------------------------------------------------------

enum class EmotionGroup {
  joy_trust,
  sadness_fear,
  surprise_anticipation,
  anger_disgust,
};

inline constexpr std::array<EmotionGroup, 4> kEmotionGroups = {
    EmotionGroup::joy_trust,
    EmotionGroup::sadness_fear,
    EmotionGroup::surprise_anticipation,
    EmotionGroup::anger_disgust,
};

const char* to_string(EmotionGroup group);
std::optional<EmotionGroup> emotion_group_from_string(const std::string& name);

inline constexpr int kMaxEmotionIntensity = 3;

// Intensity levels: 0 = normal, 1 = a little, 2 = plain, 3 = very.
struct EmotionTag {
  EmotionGroup group = EmotionGroup::joy_trust;
  int intensity = 0;

  auto operator<=>(const EmotionTag&) const = default;
};

// "normal", "a little happy", "sad", "very surprised", ...
std::string emotion_phrase(const EmotionTag& tag);

// ---------------------------------------------------------------------------
// Episode kinds
// ---------------------------------------------------------------------------

enum class EpisodeLevel { context, task, capability };
enum class CapabilityKind { navigation, manipulation, perception, hri };

const char* to_string(EpisodeLevel level);
const char* to_string(CapabilityKind kind);
std::optional<EpisodeLevel> episode_level_from_string(const std::string& name);
std::optional<CapabilityKind> capability_kind_from_string(const std::string& name);

// Capability episodes carry a subtype; context/task episodes never do.
struct EpisodeKind {
  EpisodeLevel level = EpisodeLevel::context;
  std::optional<CapabilityKind> capability;

  static EpisodeKind context() { return {EpisodeLevel::context, std::nullopt}; }
  static EpisodeKind task() { return {EpisodeLevel::task, std::nullopt}; }
  static EpisodeKind of_capability(CapabilityKind c) { return {EpisodeLevel::capability, c}; }

  bool operator==(const EpisodeKind&) const = default;
};

// ---------------------------------------------------------------------------
// Semantic locations (coordinate-free place descriptions)
// ---------------------------------------------------------------------------

enum class RelPredicate { left_of, right_of, over, under, near };

const char* to_string(RelPredicate p);

struct SpatialRelation {
  RelPredicate predicate = RelPredicate::near;
  std::string anchor;

  bool operator==(const SpatialRelation&) const = default;
};

enum class LocationScope { inside_arena, outside_arena };

struct SemanticLocation {
  LocationScope scope = LocationScope::inside_arena;
  std::optional<std::string> room;       // also holds named-area names
  std::optional<std::string> furniture;  // present only when room is present
  std::optional<SpatialRelation> relation;

  bool operator==(const SemanticLocation&) const = default;
};

// Coordinate-free rendering, e.g. "kitchen", "kitchen, near the fridge",
// "outside the arena".
std::string to_text(const SemanticLocation& loc);

// ---------------------------------------------------------------------------
// Episode content
// ---------------------------------------------------------------------------

struct MediaRef {
  enum class Kind { image, video };

  std::string path;
  Kind kind = Kind::image;

  bool operator==(const MediaRef&) const = default;
};

struct EntityObservation {
  std::string entity;
  std::map<std::string, std::string> fields;
  std::optional<MediaRef> media;

  bool operator==(const EntityObservation&) const = default;
};

struct Utterance {
  std::string speaker;  // entity id or "robot"
  std::string text;

  bool operator==(const Utterance&) const = default;
};

struct ActionRecord {
  std::string verb;
  std::vector<std::string> args;

  bool operator==(const ActionRecord&) const = default;
};

using ContentPayload = std::variant<EntityObservation, Utterance, ActionRecord, MediaRef>;

struct ContentItem {
  ContentPayload payload;
  bool post_hoc = false;  // appended after the episode closed

  bool operator==(const ContentItem&) const = default;
};

// ---------------------------------------------------------------------------
// Episodes and entities
// ---------------------------------------------------------------------------

struct Episode {
  EpisodeId id = 0;
  EpisodeKind kind;
  std::string label;
  TimeInterval when;
  std::vector<SemanticLocation> where;       // distinct, in visit order
  std::vector<ContentItem> what;             // insertion order
  std::map<EmotionGroup, int> emotions;      // at most one tag per group
  std::optional<EpisodeId> parent;
  std::vector<EpisodeId> children;           // creation order == start order

  int max_emotion_intensity() const;

  bool operator==(const Episode&) const = default;
};

enum class EntityClass { person, object, location };

const char* to_string(EntityClass cls);
std::optional<EntityClass> entity_class_from_string(const std::string& name);

struct StateRecord {
  Timestamp t;
  std::string field;
  std::string value;
  EpisodeId source = 0;

  bool operator==(const StateRecord&) const = default;
};

struct Entity {
  std::string id;
  EntityClass cls = EntityClass::object;
  std::map<std::string, std::string> static_fields;
  std::vector<StateRecord> state_history;  // sorted by timestamp

  bool operator==(const Entity&) const = default;
};

}  // namespace epilog
