#include "epilog/store.hpp"

#include <algorithm>

namespace epilog {

namespace {

Episode& pending_episode(WorkingMemory& wm, EpisodeId id) { return wm.pending.at(id); }

// Is `candidate` an ancestor of `id` within working memory?
bool is_pending_ancestor(const WorkingMemory& wm, EpisodeId candidate, EpisodeId id) {
  std::optional<EpisodeId> cur = wm.pending.at(id).parent;
  while (cur) {
    if (*cur == candidate) return true;
    auto it = wm.pending.find(*cur);
    if (it == wm.pending.end()) break;
    cur = it->second.parent;
  }
  return false;
}

std::optional<EpisodeId> innermost_open_task(const WorkingMemory& wm) {
  for (auto it = wm.open.rbegin(); it != wm.open.rend(); ++it) {
    if (wm.pending.at(*it).kind.level == EpisodeLevel::task) return *it;
  }
  return std::nullopt;
}

void handle_begin(WorkingMemory& wm, Store& store, const BeginEvent& begin, Timestamp t) {
  std::optional<EpisodeId> parent;
  switch (begin.kind.level) {
    case EpisodeLevel::context: {
      if (!wm.open.empty()) {
        throw Error(Errc::nesting_violation,
                    "cannot begin a context while another episode is open");
      }
      if (begin.kind.capability) {
        throw Error(Errc::nesting_violation, "context cannot carry a capability subtype");
      }
      break;
    }
    case EpisodeLevel::task: {
      if (wm.open.empty()) {
        throw Error(Errc::nesting_violation, "task requires an open context or task");
      }
      const Episode& innermost = wm.pending.at(wm.innermost());
      if (innermost.kind.level == EpisodeLevel::capability) {
        throw Error(Errc::nesting_violation, "cannot begin a task while a capability is open");
      }
      if (begin.kind.capability) {
        throw Error(Errc::nesting_violation, "task cannot carry a capability subtype");
      }
      parent = wm.innermost();
      break;
    }
    case EpisodeLevel::capability: {
      if (!begin.kind.capability) {
        throw Error(Errc::nesting_violation, "capability episode requires a subtype");
      }
      parent = innermost_open_task(wm);
      if (!parent) {
        throw Error(Errc::nesting_violation, "capabilities are defined inside a task");
      }
      break;
    }
  }

  Episode episode;
  episode.id = store.next_id++;
  episode.kind = begin.kind;
  episode.label = begin.label;
  episode.when.start = t;
  episode.parent = parent;
  if (parent) wm.pending.at(*parent).children.push_back(episode.id);
  wm.open.push_back(episode.id);
  wm.pending.emplace(episode.id, std::move(episode));
}

void handle_end(WorkingMemory& wm, const EndEvent& end, Timestamp t) {
  if (wm.open.empty()) throw Error(Errc::end_without_open, "no open episode to end");

  std::size_t index = wm.open.size() - 1;
  if (end.label) {
    bool found = false;
    for (std::size_t i = wm.open.size(); i-- > 0;) {
      if (wm.pending.at(wm.open[i]).label == *end.label) {
        index = i;
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(Errc::nesting_violation, "no open episode labeled '" + *end.label + "'");
    }
  }

  const EpisodeId id = wm.open[index];
  for (std::size_t i = index + 1; i < wm.open.size(); ++i) {
    if (is_pending_ancestor(wm, id, wm.open[i])) {
      throw Error(Errc::nesting_violation,
                  "cannot end an episode with open children: '" +
                      wm.pending.at(id).label + "'");
    }
  }

  Episode& episode = pending_episode(wm, id);
  episode.when.end = t;
  wm.open.erase(wm.open.begin() + static_cast<std::ptrdiff_t>(index));
  if (!episode.parent) wm.closed_roots.push_back(id);
}

void handle_observe(WorkingMemory& wm, const ObserveEvent& observe, Timestamp t) {
  if (!wm.has_open()) {
    throw Error(Errc::no_open_episode, "observe event with no open episode");
  }
  Episode& target = pending_episode(wm, wm.innermost());
  target.what.push_back(
      {EntityObservation{observe.entity, observe.fields, observe.media}, false});
  for (const auto& [field, value] : observe.fields) {
    wm.staged_state.push_back(
        {observe.entity, observe.cls, StateRecord{t, field, value, target.id}});
  }
}

void handle_emotion(WorkingMemory& wm, const EmotionEvent& emotion) {
  if (emotion.intensity < 0 || emotion.intensity > kMaxEmotionIntensity) {
    throw Error(Errc::nesting_violation, "emotion intensity out of range");
  }
  if (!wm.has_open()) {
    throw Error(Errc::no_open_episode, "emotion event with no open episode");
  }
  Episode& target = pending_episode(wm, wm.innermost());
  auto [it, inserted] = target.emotions.emplace(emotion.group, emotion.intensity);
  if (!inserted) it->second = std::max(it->second, emotion.intensity);
}

}  // namespace

void ingest_event(WorkingMemory& wm, Store& store, const Event& event) {
  if (wm.last_t && event.t < *wm.last_t) {
    throw Error(Errc::out_of_order_timestamp,
                "event at t=" + std::to_string(event.t.ms) + " precedes t=" +
                    std::to_string(wm.last_t->ms));
  }
  std::visit(
      [&](const auto& payload) {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, BeginEvent>) {
          handle_begin(wm, store, payload, event.t);
        } else if constexpr (std::is_same_v<T, EndEvent>) {
          handle_end(wm, payload, event.t);
        } else if constexpr (std::is_same_v<T, ObserveEvent>) {
          handle_observe(wm, payload, event.t);
        } else if constexpr (std::is_same_v<T, SayEvent>) {
          if (!wm.has_open()) throw Error(Errc::no_open_episode, "say event with no open episode");
          pending_episode(wm, wm.innermost())
              .what.push_back({Utterance{payload.speaker, payload.text}, false});
        } else if constexpr (std::is_same_v<T, ActEvent>) {
          if (!wm.has_open()) throw Error(Errc::no_open_episode, "act event with no open episode");
          if (payload.verb.empty()) throw Error(Errc::nesting_violation, "action verb is empty");
          pending_episode(wm, wm.innermost())
              .what.push_back({ActionRecord{payload.verb, payload.args}, false});
        } else if constexpr (std::is_same_v<T, EmotionEvent>) {
          handle_emotion(wm, payload);
        } else if constexpr (std::is_same_v<T, PoseEvent>) {
          wm.pose_trail.push_back({event.t, payload.x, payload.y});
        }
      },
      event.payload);
  wm.last_t = event.t;
}

const std::vector<ContentItem>& get_what(const Store& store, EpisodeId id) {
  auto it = store.episodes.find(id);
  if (it == store.episodes.end()) {
    throw Error(Errc::unknown_episode, "episode " + std::to_string(id));
  }
  return it->second.what;
}

void update_what(Store& store, EpisodeId id, const ContentItem& item) {
  auto it = store.episodes.find(id);
  if (it == store.episodes.end()) {
    throw Error(Errc::unknown_episode, "episode " + std::to_string(id));
  }
  Episode& episode = it->second;
  ContentItem stored = item;
  stored.post_hoc = episode.when.closed();
  episode.what.push_back(stored);

  if (const auto* obs = std::get_if<EntityObservation>(&stored.payload)) {
    const Timestamp t = episode.when.end.value_or(episode.when.start);
    auto [ent_it, inserted] = store.entities.try_emplace(obs->entity);
    Entity& entity = ent_it->second;
    if (inserted) entity.id = obs->entity;
    for (const auto& [field, value] : obs->fields) {
      StateRecord record{t, field, value, id};
      // keep state_history sorted; equal timestamps keep insertion order
      auto pos = std::upper_bound(
          entity.state_history.begin(), entity.state_history.end(), record,
          [](const StateRecord& a, const StateRecord& b) { return a.t < b.t; });
      entity.state_history.insert(pos, std::move(record));
      if (field == "name" || field == "age") entity.static_fields[field] = value;
    }
  }
}

std::vector<EpisodeId> transposed_with(const Store& store, EpisodeId id) {
  auto it = store.episodes.find(id);
  if (it == store.episodes.end()) {
    throw Error(Errc::unknown_episode, "episode " + std::to_string(id));
  }
  const Episode& episode = it->second;
  if (!episode.when.closed()) {
    throw Error(Errc::open_episode, "episode " + std::to_string(id) + " is open");
  }

  std::vector<EpisodeId> result;
  for (const auto& [other_id, other] : store.episodes) {
    if (other_id == id) continue;
    if (other.parent != episode.parent) continue;  // only in context
    if (interval_overlaps(episode.when, other.when)) result.push_back(other_id);
  }
  return result;
}

namespace {

void check_episode(const Store& store, const Episode& e, std::vector<Violation>& out) {
  if ((e.kind.level == EpisodeLevel::capability) != e.kind.capability.has_value()) {
    out.push_back({Violation::Kind::nesting_kind, e.id,
                   "capability subtype present iff kind is capability"});
  }
  if (!e.when.closed()) {
    out.push_back({Violation::Kind::open_episode, e.id, "stored episode is open"});
  } else if (*e.when.end < e.when.start) {
    out.push_back({Violation::Kind::bad_interval, e.id, "end precedes start"});
  }
  if (e.emotions.empty()) {
    out.push_back({Violation::Kind::missing_emotion, e.id, "no emotion tag"});
  }
  for (const auto& [group, intensity] : e.emotions) {
    if (intensity < 0 || intensity > kMaxEmotionIntensity) {
      out.push_back({Violation::Kind::bad_intensity, e.id,
                     std::string(to_string(group)) + " intensity out of range"});
    }
  }
  for (const ContentItem& item : e.what) {
    if (const auto* action = std::get_if<ActionRecord>(&item.payload)) {
      if (action->verb.empty()) {
        out.push_back({Violation::Kind::bad_content, e.id, "action verb is empty"});
      }
    } else if (const auto* media = std::get_if<MediaRef>(&item.payload)) {
      if (media->path.empty()) {
        out.push_back({Violation::Kind::bad_content, e.id, "media path is empty"});
      }
    } else if (const auto* obs = std::get_if<EntityObservation>(&item.payload)) {
      if (obs->media && obs->media->path.empty()) {
        out.push_back({Violation::Kind::bad_content, e.id, "observation media path is empty"});
      }
    }
  }

  if (e.parent) {
    auto pit = store.episodes.find(*e.parent);
    if (pit == store.episodes.end()) {
      out.push_back({Violation::Kind::dangling_reference, e.id, "parent missing"});
    } else {
      const Episode& parent = pit->second;
      const bool legal =
          (e.kind.level == EpisodeLevel::task &&
           (parent.kind.level == EpisodeLevel::context ||
            parent.kind.level == EpisodeLevel::task)) ||
          (e.kind.level == EpisodeLevel::capability && parent.kind.level == EpisodeLevel::task);
      if (!legal) {
        out.push_back({Violation::Kind::nesting_kind, e.id,
                       std::string(to_string(e.kind.level)) + " under " +
                           to_string(parent.kind.level)});
      }
      if (!interval_contains(parent.when, e.when)) {
        out.push_back({Violation::Kind::containment, e.id, "interval escapes parent"});
      }
    }
  } else if (e.kind.level != EpisodeLevel::context) {
    out.push_back({Violation::Kind::nesting_kind, e.id,
                   std::string(to_string(e.kind.level)) + " without parent"});
  }

  Timestamp prev_start{INT64_MIN};
  for (EpisodeId child_id : e.children) {
    auto cit = store.episodes.find(child_id);
    if (cit == store.episodes.end()) {
      out.push_back({Violation::Kind::dangling_reference, e.id,
                     "child " + std::to_string(child_id) + " missing"});
      continue;
    }
    if (cit->second.parent != std::optional<EpisodeId>(e.id)) {
      out.push_back({Violation::Kind::dangling_reference, e.id,
                     "child " + std::to_string(child_id) + " does not point back"});
    }
    if (cit->second.when.start < prev_start) {
      out.push_back({Violation::Kind::children_unsorted, e.id, "children not in start order"});
    }
    prev_start = cit->second.when.start;
  }
}

}  // namespace

std::vector<Violation> validate(const Store& store) {
  std::vector<Violation> out;
  for (const auto& [id, episode] : store.episodes) {
    if (episode.id != id) {
      out.push_back({Violation::Kind::dangling_reference, id, "id field mismatch"});
    }
    check_episode(store, episode, out);
  }
  for (EpisodeId root : store.roots) {
    auto it = store.episodes.find(root);
    if (it == store.episodes.end()) {
      out.push_back({Violation::Kind::dangling_reference, root, "root missing"});
    } else if (it->second.kind.level != EpisodeLevel::context || it->second.parent) {
      out.push_back({Violation::Kind::nesting_kind, root, "root is not a parentless context"});
    }
  }
  for (const auto& [entity_id, entity] : store.entities) {
    Timestamp prev{INT64_MIN};
    for (const StateRecord& record : entity.state_history) {
      if (record.t < prev) {
        out.push_back({Violation::Kind::state_history_unsorted, 0,
                       "entity '" + entity_id + "' history unsorted"});
        break;
      }
      prev = record.t;
    }
    for (const StateRecord& record : entity.state_history) {
      if (!store.episodes.contains(record.source)) {
        out.push_back({Violation::Kind::dangling_reference, record.source,
                       "entity '" + entity_id + "' cites missing episode"});
      }
    }
  }
  return out;
}

const char* to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::nesting_kind: return "NestingKindViolation";
    case Violation::Kind::containment: return "ContainmentViolation";
    case Violation::Kind::missing_emotion: return "MissingEmotionViolation";
    case Violation::Kind::bad_interval: return "BadIntervalViolation";
    case Violation::Kind::open_episode: return "OpenEpisodeViolation";
    case Violation::Kind::dangling_reference: return "DanglingReferenceViolation";
    case Violation::Kind::children_unsorted: return "ChildrenUnsortedViolation";
    case Violation::Kind::state_history_unsorted: return "StateHistoryUnsortedViolation";
    case Violation::Kind::bad_intensity: return "BadIntensityViolation";
    case Violation::Kind::bad_content: return "BadContentViolation";
  }
  return "Violation";
}

}  // namespace epilog
