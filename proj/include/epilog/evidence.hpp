#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "epilog/arena.hpp"
#include "epilog/query.hpp"

namespace epilog {

// The referee-checkable payload behind an answer: context chain, date-time,
// emotion series, location with map marker, media and text.
struct EvidenceBundle {
  std::string context_line;                  // root context ... primary, " / " joined
  std::string datetime_line;                 // "Wed, July 17, 2019 15:40:15"
  std::map<EmotionGroup, int> emotion_series;  // all four groups, absent -> 0
  std::string location_name;
  std::string map_svg_name;                  // relative file name, empty when outside/unknown
  std::string map_svg;                       // rendered content
  std::vector<MediaRef> media;               // from supporting episodes only
  std::vector<std::string> text_lines;       // utterance subtitles + narration
  std::vector<EpisodeId> supporting_ids;
};

// "Wed, July 17, 2019 15:40:15" (UTC).
std::string format_datetime(Timestamp t);

EvidenceBundle assemble(const Store& store, const Answer& answer, const ArenaMap& map);

// Writes bundle.json (canonical, sorted keys) plus the referenced SVG;
// identical inputs produce identical bytes.
void write_report(const EvidenceBundle& bundle, const std::filesystem::path& out_dir);

struct CoherenceResult {
  bool coherent = false;
  std::vector<std::string> reasons;
};

// True iff the bundle's display fields reproduce the stored episodes and the
// answer payload is re-derivable from the supporting episodes alone.
CoherenceResult check_coherence(const Answer& answer, const EvidenceBundle& bundle,
                                const Store& store, const RelevanceParams& params);

}  // namespace epilog
