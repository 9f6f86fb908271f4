#pragma once

#include <vector>

#include "epilog/arena.hpp"
#include "epilog/store.hpp"

namespace epilog {

struct RelevanceParams {
  double half_life_s = 3600.0;     // historic decay half-life, seconds
  double w_h = 0.5;                // historic weight
  double w_e = 0.5;                // emotional weight, w_h + w_e = 1
  double forget_threshold = 0.05;  // theta

  bool valid() const;
};

// 2^(-age/half_life), age measured from when.end. 1 at age 0, 0.5 at one
// half-life. Throws OpenEpisode for open episodes.
double historic_relevance(const Episode& e, Timestamp now, const RelevanceParams& p);

// max tag intensity / 3, in {0, 1/3, 2/3, 1}. Throws MissingEmotion.
double emotional_relevance(const Episode& e);

// w_h * historic + w_e * emotional; an arbitrarily old intensity-3 episode
// still scores w_e.
double relevance(const Episode& e, Timestamp now, const RelevanceParams& p);

struct ConsolidateStats {
  int moved_roots = 0;
  int moved_episodes = 0;
};

// Moves every closed root subtree from working memory into the store:
// resolves where-lists from the pose trail, rolls emotions up bottom-up
// (per-group max over self and children), defaults untagged episodes to
// (joy_trust, 0), and applies staged entity state. Open episodes stay in
// working memory.
ConsolidateStats consolidate(WorkingMemory& wm, Store& store, const ArenaMap& map, Timestamp now);

// Prunes every non-context episode with relevance below the threshold and no
// retained descendant. Contexts are never pruned. Entity records sourced
// from pruned episodes re-point to the nearest retained ancestor. Returns
// pruned ids, ascending.
std::vector<EpisodeId> forget(Store& store, Timestamp now, const RelevanceParams& p);

// Sorts ids by relevance descending; ties prefer the later end, then the
// lower id. Throws UnknownEpisode / OpenEpisode.
std::vector<EpisodeId> rank(const Store& store, std::vector<EpisodeId> ids, Timestamp now,
                            const RelevanceParams& p);

}  // namespace epilog
