#include "epilog/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace epilog {

bool RelevanceParams::valid() const {
  return half_life_s > 0.0 && w_h >= 0.0 && w_e >= 0.0 &&
         std::abs(w_h + w_e - 1.0) < 1e-9 && forget_threshold >= 0.0 && forget_threshold <= 1.0;
}

double historic_relevance(const Episode& e, Timestamp now, const RelevanceParams& p) {
  if (!e.when.closed()) {
    throw Error(Errc::open_episode, "episode " + std::to_string(e.id) + " is open");
  }
  const double age_s = std::max<double>(0.0, static_cast<double>(now.ms - e.when.end->ms)) / 1000.0;
  return std::exp2(-age_s / p.half_life_s);
}

double emotional_relevance(const Episode& e) {
  if (e.emotions.empty()) {
    throw Error(Errc::missing_emotion, "episode " + std::to_string(e.id) + " has no emotion tag");
  }
  return static_cast<double>(e.max_emotion_intensity()) / kMaxEmotionIntensity;
}

double relevance(const Episode& e, Timestamp now, const RelevanceParams& p) {
  return p.w_h * historic_relevance(e, now, p) + p.w_e * emotional_relevance(e);
}

namespace {

// Resolved locations visited during [start, end): the position at start (the
// last pose at or before it) followed by poses inside the interval, distinct,
// first visit order.
std::vector<SemanticLocation> resolve_where(const std::vector<PosePoint>& trail,
                                            const TimeInterval& when, const ArenaMap& map) {
  std::vector<SemanticLocation> out;
  auto push = [&](const SemanticLocation& loc) {
    if (std::find(out.begin(), out.end(), loc) == out.end()) out.push_back(loc);
  };

  const PosePoint* at_start = nullptr;
  for (const PosePoint& p : trail) {
    if (p.t <= when.start) at_start = &p;
  }
  if (at_start) push(resolve_pose(map, at_start->x, at_start->y));
  for (const PosePoint& p : trail) {
    if (p.t <= when.start) continue;
    if (when.end && p.t >= *when.end) break;
    push(resolve_pose(map, p.x, p.y));
  }
  return out;
}

void rollup_emotions(std::map<EpisodeId, Episode>& pending, EpisodeId id) {
  Episode& e = pending.at(id);
  for (EpisodeId child_id : e.children) {
    rollup_emotions(pending, child_id);
    for (const auto& [group, intensity] : pending.at(child_id).emotions) {
      auto [it, inserted] = e.emotions.emplace(group, intensity);
      if (!inserted) it->second = std::max(it->second, intensity);
    }
  }
  if (e.emotions.empty()) e.emotions.emplace(EmotionGroup::joy_trust, 0);
}

void move_subtree(WorkingMemory& wm, Store& store, const ArenaMap& map, EpisodeId id,
                  ConsolidateStats& stats) {
  Episode episode = std::move(wm.pending.at(id));
  wm.pending.erase(id);
  episode.where = resolve_where(wm.pose_trail, episode.when, map);
  for (EpisodeId child_id : episode.children) move_subtree(wm, store, map, child_id, stats);
  store.episodes.emplace(id, std::move(episode));
  ++stats.moved_episodes;
}

}  // namespace

ConsolidateStats consolidate(WorkingMemory& wm, Store& store, const ArenaMap& map,
                             Timestamp now) {
  (void)now;
  ConsolidateStats stats;
  if (wm.closed_roots.empty()) return stats;

  std::set<EpisodeId> moved;
  for (EpisodeId root : wm.closed_roots) {
    rollup_emotions(wm.pending, root);
    // collect the subtree ids before the episodes move out
    std::vector<EpisodeId> frontier{root};
    while (!frontier.empty()) {
      EpisodeId id = frontier.back();
      frontier.pop_back();
      moved.insert(id);
      const Episode& e = wm.pending.at(id);
      frontier.insert(frontier.end(), e.children.begin(), e.children.end());
    }
    move_subtree(wm, store, map, root, stats);
    store.roots.push_back(root);
    ++stats.moved_roots;
  }
  wm.closed_roots.clear();

  // apply entity state staged from the moved episodes
  std::vector<PendingStateUpdate> remaining;
  for (PendingStateUpdate& update : wm.staged_state) {
    if (!moved.contains(update.record.source)) {
      remaining.push_back(std::move(update));
      continue;
    }
    auto [it, inserted] = store.entities.try_emplace(update.entity);
    Entity& entity = it->second;
    if (inserted) {
      entity.id = update.entity;
      entity.cls = update.cls;
    }
    if (update.record.field == "name" || update.record.field == "age") {
      entity.static_fields[update.record.field] = update.record.value;
    }
    auto pos = std::upper_bound(
        entity.state_history.begin(), entity.state_history.end(), update.record,
        [](const StateRecord& a, const StateRecord& b) { return a.t < b.t; });
    entity.state_history.insert(pos, std::move(update.record));
  }
  wm.staged_state = std::move(remaining);

  // compact the pose trail: keep the latest point at or before the newest
  // consolidated end, plus everything after it
  Timestamp horizon{INT64_MIN};
  for (EpisodeId id : moved) {
    const Episode& e = store.episodes.at(id);
    if (e.when.end && *e.when.end > horizon) horizon = *e.when.end;
  }
  const PosePoint* seed = nullptr;
  std::vector<PosePoint> trail;
  for (const PosePoint& p : wm.pose_trail) {
    if (p.t <= horizon) {
      seed = &p;
    } else {
      trail.push_back(p);
    }
  }
  if (seed) trail.insert(trail.begin(), *seed);
  wm.pose_trail = std::move(trail);

  return stats;
}

std::vector<EpisodeId> forget(Store& store, Timestamp now, const RelevanceParams& p) {
  std::map<EpisodeId, bool> retained;

  auto is_retained = [&](auto&& self, EpisodeId id) -> bool {
    auto it = retained.find(id);
    if (it != retained.end()) return it->second;
    const Episode& e = store.episodes.at(id);
    bool keep = e.kind.level == EpisodeLevel::context;
    if (!keep && !e.emotions.empty() && e.when.closed()) {
      keep = relevance(e, now, p) >= p.forget_threshold;
    }
    for (EpisodeId child : e.children) {
      if (self(self, child)) keep = true;  // no short-circuit: descendants must all be decided
    }
    retained[id] = keep;
    return keep;
  };
  for (const auto& [id, episode] : store.episodes) is_retained(is_retained, id);

  std::vector<EpisodeId> pruned;
  for (const auto& [id, keep] : retained) {
    if (!keep) pruned.push_back(id);
  }
  if (pruned.empty()) return pruned;

  // re-point entity records sourced from pruned episodes to the nearest
  // retained ancestor
  for (auto& [entity_id, entity] : store.entities) {
    std::vector<StateRecord> kept;
    for (StateRecord& record : entity.state_history) {
      if (retained.count(record.source) && !retained[record.source]) {
        std::optional<EpisodeId> cur = store.episodes.at(record.source).parent;
        while (cur && !retained[*cur]) cur = store.episodes.at(*cur).parent;
        if (!cur) continue;  // no retained ancestor: drop the record
        record.source = *cur;
      }
      kept.push_back(std::move(record));
    }
    entity.state_history = std::move(kept);
  }

  for (EpisodeId id : pruned) {
    const Episode& e = store.episodes.at(id);
    if (e.parent && store.episodes.contains(*e.parent)) {
      auto& siblings = store.episodes.at(*e.parent).children;
      siblings.erase(std::remove(siblings.begin(), siblings.end(), id), siblings.end());
    }
  }
  for (EpisodeId id : pruned) store.episodes.erase(id);
  return pruned;
}

std::vector<EpisodeId> rank(const Store& store, std::vector<EpisodeId> ids, Timestamp now,
                            const RelevanceParams& p) {
  struct Scored {
    EpisodeId id;
    double score;
    Timestamp end;
  };
  std::vector<Scored> scored;
  scored.reserve(ids.size());
  for (EpisodeId id : ids) {
    auto it = store.episodes.find(id);
    if (it == store.episodes.end()) {
      throw Error(Errc::unknown_episode, "episode " + std::to_string(id));
    }
    if (!it->second.when.closed()) {
      throw Error(Errc::open_episode, "episode " + std::to_string(id) + " is open");
    }
    scored.push_back({id, relevance(it->second, now, p), *it->second.when.end});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.end != b.end) return a.end > b.end;
    return a.id < b.id;
  });
  std::vector<EpisodeId> out;
  out.reserve(scored.size());
  for (const Scored& s : scored) out.push_back(s.id);
  return out;
}

}  // namespace epilog
