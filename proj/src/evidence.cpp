#include "epilog/evidence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace epilog {

using json = nlohmann::json;

namespace {

// civil-from-days (Howard Hinnant's algorithm), UTC
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yy + (m <= 2));
}

constexpr const char* kWeekdays[] = {"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
constexpr const char* kMonths[] = {"January", "February", "March",     "April",   "May",
                                   "June",    "July",     "August",    "September",
                                   "October", "November", "December"};

}  // namespace

std::string format_datetime(Timestamp t) {
  const std::int64_t total_s = t.ms / 1000;
  std::int64_t days = total_s / 86400;
  std::int64_t secs = total_s % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  int year = 0;
  unsigned month = 0, day = 0;
  civil_from_days(days, year, month, day);
  const int weekday = static_cast<int>((days % 7 + 11) % 7);  // 1970-01-01 was a Thursday

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s, %s %u, %d %02d:%02d:%02d", kWeekdays[weekday],
                kMonths[month - 1], day, year, static_cast<int>(secs / 3600),
                static_cast<int>((secs % 3600) / 60), static_cast<int>(secs % 60));
  return buf;
}

namespace {

std::string context_chain(const Store& store, EpisodeId id) {
  std::vector<const Episode*> path;
  std::optional<EpisodeId> cur = id;
  while (cur) {
    auto it = store.episodes.find(*cur);
    if (it == store.episodes.end()) break;
    path.push_back(&it->second);
    cur = it->second.parent;
  }
  std::string line;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    if (!line.empty()) line += " / ";
    line += (*it)->label;
  }
  return line;
}

std::map<EmotionGroup, int> full_series(const Episode& e) {
  std::map<EmotionGroup, int> series;
  for (EmotionGroup group : kEmotionGroups) series[group] = 0;
  for (const auto& [group, intensity] : e.emotions) series[group] = intensity;
  return series;
}

std::string primary_location_name(const Episode& e) {
  if (e.where.empty()) return "unknown";
  return to_text(e.where.front());
}

void collect_media(const Episode& e, std::vector<MediaRef>& out) {
  for (const ContentItem& item : e.what) {
    if (const auto* media = std::get_if<MediaRef>(&item.payload)) {
      out.push_back(*media);
    } else if (const auto* obs = std::get_if<EntityObservation>(&item.payload)) {
      if (obs->media) out.push_back(*obs->media);
    }
  }
}

}  // namespace

EvidenceBundle assemble(const Store& store, const Answer& answer, const ArenaMap& map) {
  if (answer.supporting.empty() || !answer.primary) {
    throw Error(Errc::empty_provenance, "answer has no supporting episodes");
  }
  for (EpisodeId id : answer.supporting) {
    if (!store.episodes.contains(id)) {
      throw Error(Errc::unknown_episode, "supporting episode " + std::to_string(id));
    }
  }

  const Episode& primary = store.episodes.at(*answer.primary);

  EvidenceBundle bundle;
  bundle.supporting_ids = answer.supporting;
  bundle.context_line = context_chain(store, primary.id);
  bundle.datetime_line = format_datetime(primary.when.start);
  bundle.emotion_series = full_series(primary);
  bundle.location_name = primary_location_name(primary);

  if (!primary.where.empty() && primary.where.front().scope == LocationScope::inside_arena) {
    bundle.map_svg_name = "map.svg";
    bundle.map_svg = render_map_marker_svg(map, primary.where.front());
  }

  for (EpisodeId id : answer.supporting) {
    collect_media(store.episodes.at(id), bundle.media);
  }
  for (EpisodeId id : answer.supporting) {
    for (const ContentItem& item : store.episodes.at(id).what) {
      if (const auto* utterance = std::get_if<Utterance>(&item.payload)) {
        bundle.text_lines.push_back(utterance->speaker + ": " + utterance->text);
      }
    }
  }
  if (primary.when.closed()) {
    bundle.text_lines.push_back(narrate(store, primary.id, answer.eval_now));
  }
  return bundle;
}

void write_report(const EvidenceBundle& bundle, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  json j;
  j["context"] = bundle.context_line;
  j["datetime"] = bundle.datetime_line;
  j["emotions"] = json::object();
  for (const auto& [group, intensity] : bundle.emotion_series) {
    j["emotions"][to_string(group)] = intensity;
  }
  j["location"] = bundle.location_name;
  j["map_svg"] = bundle.map_svg_name;
  j["media"] = json::array();
  for (const MediaRef& media : bundle.media) {
    j["media"].push_back(json{{"kind", media.kind == MediaRef::Kind::image ? "image" : "video"},
                              {"path", media.path}});
  }
  j["text"] = bundle.text_lines;
  j["supporting_ids"] = bundle.supporting_ids;

  std::ofstream out(out_dir / "bundle.json", std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::io_error, "cannot open '" + (out_dir / "bundle.json").string() + "'");
  }
  out << j.dump(2) << "\n";
  if (!out) throw Error(Errc::io_error, "write failed in '" + out_dir.string() + "'");

  if (!bundle.map_svg_name.empty()) {
    std::ofstream svg(out_dir / bundle.map_svg_name, std::ios::binary | std::ios::trunc);
    if (!svg) {
      throw Error(Errc::io_error, "cannot open '" + (out_dir / bundle.map_svg_name).string() + "'");
    }
    svg << bundle.map_svg;
  }
}

namespace {

// The sub-store induced by the supporting ids: episodes outside the set
// vanish, children lists shrink to retained members, entity histories keep
// only records sourced from the set.
Store induced_substore(const Store& store, const std::vector<EpisodeId>& supporting) {
  Store sub;
  sub.next_id = store.next_id;
  for (EpisodeId id : supporting) {
    auto it = store.episodes.find(id);
    if (it == store.episodes.end()) continue;
    Episode episode = it->second;
    std::vector<EpisodeId> children;
    for (EpisodeId child : episode.children) {
      if (std::find(supporting.begin(), supporting.end(), child) != supporting.end()) {
        children.push_back(child);
      }
    }
    episode.children = std::move(children);
    if (episode.parent &&
        std::find(supporting.begin(), supporting.end(), *episode.parent) == supporting.end()) {
      episode.parent.reset();
    }
    if (!episode.parent) sub.roots.push_back(id);
    sub.episodes.emplace(id, std::move(episode));
  }
  for (const auto& [entity_id, entity] : store.entities) {
    Entity filtered = entity;
    filtered.state_history.clear();
    for (const StateRecord& record : entity.state_history) {
      if (std::find(supporting.begin(), supporting.end(), record.source) != supporting.end()) {
        filtered.state_history.push_back(record);
      }
    }
    sub.entities.emplace(entity_id, std::move(filtered));
  }
  return sub;
}

}  // namespace

CoherenceResult check_coherence(const Answer& answer, const EvidenceBundle& bundle,
                                const Store& store, const RelevanceParams& params) {
  CoherenceResult result;

  if (bundle.supporting_ids.empty() || answer.supporting.empty() || !answer.primary) {
    result.reasons.push_back("EmptyProvenance");
    return result;
  }
  if (bundle.supporting_ids != answer.supporting) {
    result.reasons.push_back("SupportMismatch");
  }

  for (EpisodeId id : bundle.supporting_ids) {
    if (!store.episodes.contains(id)) {
      result.reasons.push_back("UnknownSupport:" + std::to_string(id));
      return result;
    }
  }

  const Episode& primary = store.episodes.at(*answer.primary);
  if (bundle.context_line != context_chain(store, primary.id)) {
    result.reasons.push_back("ContextMismatch");
  }
  if (bundle.datetime_line != format_datetime(primary.when.start)) {
    result.reasons.push_back("DatetimeMismatch");
  }
  if (bundle.location_name != primary_location_name(primary)) {
    result.reasons.push_back("LocationMismatch");
  }
  if (bundle.emotion_series != full_series(primary)) {
    result.reasons.push_back("EmotionMismatch");
  }

  // media must originate from supporting episodes
  std::vector<MediaRef> available;
  for (EpisodeId id : bundle.supporting_ids) {
    if (store.episodes.contains(id)) collect_media(store.episodes.at(id), available);
  }
  for (const MediaRef& media : bundle.media) {
    if (std::find(available.begin(), available.end(), media) == available.end()) {
      result.reasons.push_back("ForeignMedia:" + media.path);
    }
  }

  // the payload must be derivable from the supporting episodes alone
  try {
    const Store sub = induced_substore(store, answer.supporting);
    const Answer replay = eval_query(answer.query, sub, answer.eval_now, params);
    if (answer_payload_json_text(replay) != answer_payload_json_text(answer)) {
      result.reasons.push_back("UnderivableAnswer");
    }
  } catch (const Error& e) {
    result.reasons.push_back(std::string("UnderivableAnswer:") + e.what());
  }

  result.coherent = result.reasons.empty();
  return result;
}

}  // namespace epilog
