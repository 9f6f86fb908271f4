#include "epilog/core.hpp"

#include <algorithm>

namespace epilog {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::nesting_violation: return "NestingViolation";
    case Errc::end_without_open: return "EndWithoutOpen";
    case Errc::out_of_order_timestamp: return "OutOfOrderTimestamp";
    case Errc::no_open_episode: return "NoOpenEpisode";
    case Errc::unknown_episode: return "UnknownEpisode";
    case Errc::open_episode: return "OpenEpisode";
    case Errc::missing_emotion: return "MissingEmotion";
    case Errc::unknown_anchor: return "UnknownAnchor";
    case Errc::outside_arena: return "OutsideArena";
    case Errc::invalid_map: return "InvalidMap";
    case Errc::io_error: return "IoError";
    case Errc::corrupt_snapshot: return "CorruptSnapshot";
    case Errc::syntax_error: return "SyntaxError";
    case Errc::future_timestamp: return "FutureTimestamp";
    case Errc::empty_provenance: return "EmptyProvenance";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::insufficient_scenario: return "InsufficientScenario";
  }
  return "Error";
}

// Half-open semantics; an absent end acts as +infinity.
bool interval_overlaps(const TimeInterval& a, const TimeInterval& b) {
  const bool a_before_b_end = !b.end || a.start < *b.end;
  const bool b_before_a_end = !a.end || b.start < *a.end;
  return a_before_b_end && b_before_a_end;
}

bool interval_contains(const TimeInterval& outer, const TimeInterval& inner) {
  if (outer.start > inner.start) return false;
  if (!outer.end) return true;
  return inner.end && *inner.end <= *outer.end;
}

const char* to_string(EmotionGroup group) {
  switch (group) {
    case EmotionGroup::joy_trust: return "joy_trust";
    case EmotionGroup::sadness_fear: return "sadness_fear";
    case EmotionGroup::surprise_anticipation: return "surprise_anticipation";
    case EmotionGroup::anger_disgust: return "anger_disgust";
  }
  return "joy_trust";
}

std::optional<EmotionGroup> emotion_group_from_string(const std::string& name) {
  for (EmotionGroup g : kEmotionGroups) {
    if (name == to_string(g)) return g;
  }
  return std::nullopt;
}

namespace {

const char* group_adjective(EmotionGroup group) {
  switch (group) {
    case EmotionGroup::joy_trust: return "happy";
    case EmotionGroup::sadness_fear: return "sad";
    case EmotionGroup::surprise_anticipation: return "surprised";
    case EmotionGroup::anger_disgust: return "angry";
  }
  return "happy";
}

}  // namespace

std::string emotion_phrase(const EmotionTag& tag) {
  switch (tag.intensity) {
    case 0: return "normal";  // level 0 is group-independent
    case 1: return std::string("a little ") + group_adjective(tag.group);
    case 2: return group_adjective(tag.group);
    default: return std::string("very ") + group_adjective(tag.group);
  }
}

const char* to_string(EpisodeLevel level) {
  switch (level) {
    case EpisodeLevel::context: return "context";
    case EpisodeLevel::task: return "task";
    case EpisodeLevel::capability: return "capability";
  }
  return "context";
}

const char* to_string(CapabilityKind kind) {
  switch (kind) {
    case CapabilityKind::navigation: return "navigation";
    case CapabilityKind::manipulation: return "manipulation";
    case CapabilityKind::perception: return "perception";
    case CapabilityKind::hri: return "hri";
  }
  return "navigation";
}

std::optional<EpisodeLevel> episode_level_from_string(const std::string& name) {
  for (EpisodeLevel l : {EpisodeLevel::context, EpisodeLevel::task, EpisodeLevel::capability}) {
    if (name == to_string(l)) return l;
  }
  return std::nullopt;
}

std::optional<CapabilityKind> capability_kind_from_string(const std::string& name) {
  for (CapabilityKind c : {CapabilityKind::navigation, CapabilityKind::manipulation,
                           CapabilityKind::perception, CapabilityKind::hri}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

const char* to_string(RelPredicate p) {
  switch (p) {
    case RelPredicate::left_of: return "left_of";
    case RelPredicate::right_of: return "right_of";
    case RelPredicate::over: return "over";
    case RelPredicate::under: return "under";
    case RelPredicate::near: return "near";
  }
  return "near";
}

namespace {

std::string relation_text(const SpatialRelation& rel) {
  switch (rel.predicate) {
    case RelPredicate::left_of: return "at the left of the " + rel.anchor;
    case RelPredicate::right_of: return "at the right of the " + rel.anchor;
    case RelPredicate::over: return "over the " + rel.anchor;
    case RelPredicate::under: return "under the " + rel.anchor;
    case RelPredicate::near: return "near the " + rel.anchor;
  }
  return "near the " + rel.anchor;
}

}  // namespace

std::string to_text(const SemanticLocation& loc) {
  if (loc.scope == LocationScope::outside_arena) return "outside the arena";
  std::string text = loc.room ? *loc.room : std::string("inside the arena");
  if (loc.furniture) text += ", near the " + *loc.furniture;
  if (loc.relation) text += ", " + relation_text(*loc.relation);
  return text;
}

int Episode::max_emotion_intensity() const {
  int best = 0;
  for (const auto& [group, intensity] : emotions) best = std::max(best, intensity);
  return best;
}

const char* to_string(EntityClass cls) {
  switch (cls) {
    case EntityClass::person: return "person";
    case EntityClass::object: return "object";
    case EntityClass::location: return "location";
  }
  return "object";
}

std::optional<EntityClass> entity_class_from_string(const std::string& name) {
  for (EntityClass c : {EntityClass::person, EntityClass::object, EntityClass::location}) {
    if (name == to_string(c)) return c;
  }
  return std::nullopt;
}

}  // namespace epilog
