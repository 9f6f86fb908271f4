#include <algorithm>
#include <cctype>
#include <set>

#include "epilog/query.hpp"
#include "json.hpp"

namespace epilog {

using json = nlohmann::json;

namespace {

bool matches(const Episode& e, const Condition& cond) {
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, CondKind>) {
          return e.kind.level == c.level;
        } else if constexpr (std::is_same_v<T, CondLabel>) {
          return e.label.find(c.substring) != std::string::npos;
        } else if constexpr (std::is_same_v<T, CondLocation>) {
          return std::any_of(e.where.begin(), e.where.end(), [&](const SemanticLocation& loc) {
            return (loc.room && *loc.room == c.name) ||
                   (loc.furniture && *loc.furniture == c.name);
          });
        } else if constexpr (std::is_same_v<T, CondEntity>) {
          return std::any_of(e.what.begin(), e.what.end(), [&](const ContentItem& item) {
            if (const auto* obs = std::get_if<EntityObservation>(&item.payload)) {
              return obs->entity == c.id;
            }
            if (const auto* utterance = std::get_if<Utterance>(&item.payload)) {
              return utterance->speaker == c.id;
            }
            return false;
          });
        } else if constexpr (std::is_same_v<T, CondEmotion>) {
          auto it = e.emotions.find(c.group);
          if (it == e.emotions.end()) return false;
          return !c.min_intensity || it->second >= *c.min_intensity;
        } else {
          return interval_overlaps(e.when, TimeInterval{c.from, Timestamp{c.to}});
        }
      },
      cond);
}

bool matches_all(const Episode& e, const std::vector<Condition>& conds) {
  return std::all_of(conds.begin(), conds.end(),
                     [&](const Condition& c) { return matches(e, c); });
}

std::vector<EpisodeId> matching_closed(const Store& store, const std::vector<Condition>& conds) {
  std::vector<EpisodeId> ids;
  for (const auto& [id, e] : store.episodes) {
    if (e.when.closed() && matches_all(e, conds)) ids.push_back(id);
  }
  return ids;
}

std::vector<EpisodeId> sorted_unique(std::vector<EpisodeId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Latest record for `field` at or before `at`; insertion order breaks ties.
const StateRecord* latest_record(const Entity& entity, const std::string& field, Timestamp at) {
  const StateRecord* best = nullptr;
  for (const StateRecord& record : entity.state_history) {
    if (record.field != field || record.t > at) continue;
    if (!best || record.t >= best->t) best = &record;
  }
  return best;
}

Answer eval_state_lookup(const Store& store, const std::string& entity_id,
                         const std::optional<std::string>& field, Timestamp at, Answer answer) {
  auto it = store.entities.find(entity_id);
  if (it == store.entities.end()) {
    // unknown entities yield an empty answer, not an error
    if (field || std::holds_alternative<StateOfQuery>(answer.query)) {
      answer.payload = std::vector<StateEntry>{};
    } else {
      answer.payload = std::optional<std::string>{};
    }
    return answer;
  }
  const Entity& entity = it->second;

  if (std::holds_alternative<WhereIsQuery>(answer.query)) {
    const StateRecord* record = latest_record(entity, "location", at);
    if (!record) {
      answer.payload = std::optional<std::string>{};
    } else {
      answer.payload = std::optional<std::string>{record->value};
      answer.supporting = {record->source};
      answer.primary = record->source;
    }
    return answer;
  }

  std::vector<StateEntry> entries;
  std::vector<EpisodeId> supporting;
  const StateRecord* newest = nullptr;
  if (field) {
    if (const StateRecord* record = latest_record(entity, *field, at)) {
      entries.push_back({record->field, record->value});
      supporting.push_back(record->source);
      newest = record;
    }
  } else {
    std::set<std::string> fields;
    for (const StateRecord& record : entity.state_history) fields.insert(record.field);
    for (const std::string& name : fields) {
      if (const StateRecord* record = latest_record(entity, name, at)) {
        entries.push_back({record->field, record->value});
        supporting.push_back(record->source);
        if (!newest || record->t >= newest->t) newest = record;
      }
    }
  }
  answer.payload = std::move(entries);
  answer.supporting = sorted_unique(std::move(supporting));
  if (newest) answer.primary = newest->source;
  return answer;
}

}  // namespace

bool Answer::empty_result() const {
  return std::visit(
      [](const auto& payload) -> bool {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, std::optional<std::string>>) {
          return !payload.has_value();
        } else {
          return payload.empty();
        }
      },
      payload);
}

Answer eval_query(const Query& q, const Store& store, Timestamp now, const RelevanceParams& p) {
  Answer answer;
  answer.query = q;
  answer.eval_now = now;

  std::visit(
      [&](const auto& query) {
        using T = std::decay_t<decltype(query)>;
        if constexpr (std::is_same_v<T, FindEpisodesQuery>) {
          std::vector<EpisodeId> ids = matching_closed(store, query.conds);
          if (query.order == OrderBy::relevance) {
            ids = rank(store, std::move(ids), now, p);
          } else {
            std::sort(ids.begin(), ids.end(), [&](EpisodeId a, EpisodeId b) {
              const Episode& ea = store.episodes.at(a);
              const Episode& eb = store.episodes.at(b);
              if (ea.when.start != eb.when.start) return ea.when.start < eb.when.start;
              return a < b;
            });
          }
          if (query.limit && *query.limit >= 0 &&
              ids.size() > static_cast<std::size_t>(*query.limit)) {
            ids.resize(static_cast<std::size_t>(*query.limit));
          }
          if (!ids.empty()) answer.primary = ids.front();
          answer.supporting = sorted_unique(ids);
          answer.payload = std::move(ids);
        } else if constexpr (std::is_same_v<T, WhenQuery>) {
          std::vector<EpisodeId> ids = matching_closed(store, query.conds);
          std::sort(ids.begin(), ids.end(), [&](EpisodeId a, EpisodeId b) {
            const Episode& ea = store.episodes.at(a);
            const Episode& eb = store.episodes.at(b);
            if (ea.when.start != eb.when.start) return ea.when.start < eb.when.start;
            return a < b;
          });
          std::vector<TimeInterval> intervals;
          intervals.reserve(ids.size());
          for (EpisodeId id : ids) intervals.push_back(store.episodes.at(id).when);
          if (!ids.empty()) answer.primary = ids.front();
          answer.supporting = sorted_unique(std::move(ids));
          answer.payload = std::move(intervals);
        } else if constexpr (std::is_same_v<T, WhereIsQuery>) {
          answer = eval_state_lookup(store, query.entity, std::nullopt,
                                     query.at.value_or(now), std::move(answer));
        } else if constexpr (std::is_same_v<T, StateOfQuery>) {
          answer = eval_state_lookup(store, query.entity, query.field, query.at.value_or(now),
                                     std::move(answer));
        } else if constexpr (std::is_same_v<T, FeelingQuery>) {
          const std::vector<EpisodeId> ids = matching_closed(store, query.conds);
          std::map<EmotionGroup, int> maxima;
          for (EpisodeId id : ids) {
            for (const auto& [group, intensity] : store.episodes.at(id).emotions) {
              auto [it, inserted] = maxima.emplace(group, intensity);
              if (!inserted) it->second = std::max(it->second, intensity);
            }
          }
          std::vector<FeelingEntry> entries;
          std::vector<EpisodeId> supporting;
          for (const auto& [group, intensity] : maxima) {
            EmotionTag tag{group, intensity};
            entries.push_back({tag, emotion_phrase(tag)});
            for (EpisodeId id : ids) {
              auto it = store.episodes.at(id).emotions.find(group);
              if (it != store.episodes.at(id).emotions.end() && it->second == intensity) {
                supporting.push_back(id);
              }
            }
          }
          // primary: the episode behind the strongest feeling, latest end wins ties
          int best_intensity = -1;
          for (const auto& [group, intensity] : maxima) {
            best_intensity = std::max(best_intensity, intensity);
          }
          std::optional<EpisodeId> primary;
          for (EpisodeId id : sorted_unique(supporting)) {
            const Episode& e = store.episodes.at(id);
            bool achieves = false;
            for (const auto& [group, intensity] : e.emotions) {
              auto it = maxima.find(group);
              if (it != maxima.end() && it->second == intensity && intensity == best_intensity) {
                achieves = true;
              }
            }
            if (!achieves) continue;
            if (!primary || *store.episodes.at(id).when.end > *store.episodes.at(*primary).when.end) {
              primary = id;
            }
          }
          answer.primary = primary;
          answer.supporting = sorted_unique(std::move(supporting));
          answer.payload = std::move(entries);
        } else {
          std::optional<EpisodeId> target;
          if (const auto* id = std::get_if<EpisodeId>(&query.target)) {
            if (!store.episodes.contains(*id)) {
              throw Error(Errc::unknown_episode, "episode " + std::to_string(*id));
            }
            target = *id;
          } else {
            const auto& last = std::get<DescribeLast>(query.target);
            std::vector<EpisodeId> ids = matching_closed(store, last.conds);
            for (EpisodeId id : ids) {
              if (!target) {
                target = id;
                continue;
              }
              const Episode& candidate = store.episodes.at(id);
              const Episode& current = store.episodes.at(*target);
              if (candidate.when.start > current.when.start ||
                  (candidate.when.start == current.when.start && id > *target)) {
                target = id;
              }
            }
          }
          if (!target) {
            answer.payload = std::string{};
            return;
          }
          answer.payload = narrate(store, *target, now);
          std::vector<EpisodeId> supporting{*target};
          const Episode& e = store.episodes.at(*target);
          supporting.insert(supporting.end(), e.children.begin(), e.children.end());
          answer.supporting = sorted_unique(std::move(supporting));
          answer.primary = *target;
        }
      },
      q);
  return answer;
}

// ---------------------------------------------------------------------------
// Narration
// ---------------------------------------------------------------------------

namespace {

std::string past_tense(const std::string& verb) {
  if (verb == "chat") return "chatted";
  if (verb == "grab") return "grabbed";
  if (verb == "stop") return "stopped";
  if (!verb.empty() && verb.back() == 'e') return verb + "d";
  return verb + "ed";
}

std::string action_clause(const ActionRecord& action) {
  std::string out = "I " + past_tense(action.verb);
  if (action.args.empty()) return out;

  const std::string& verb = action.verb;
  std::string prep;
  bool article = false;
  if (verb == "move" || verb == "go" || verb == "navigate" || verb == "walk" ||
      verb == "return") {
    prep = "towards";
    article = true;
  } else if (verb == "search" || verb == "look" || verb == "wait") {
    prep = "for";
  } else if (verb == "listen") {
    prep = "to";
  } else if (verb == "talk" || verb == "speak" || verb == "chat") {
    prep = "with";
  } else if (verb == "greet" || verb == "thank" || verb == "find") {
    // bare object, e.g. "greeted anna"
  } else {
    article = true;
  }

  for (std::size_t i = 0; i < action.args.size(); ++i) {
    out += i == 0 ? " " : " and ";
    if (i == 0 && !prep.empty()) out += prep + " ";
    if (article) out += "the ";
    out += action.args[i];
  }
  return out;
}

// The most specific action: prefer more arguments, then the later record.
std::string clause_for(const Episode& e) {
  const ActionRecord* best = nullptr;
  for (const ContentItem& item : e.what) {
    if (const auto* action = std::get_if<ActionRecord>(&item.payload)) {
      if (!best || action->args.size() >= best->args.size()) best = action;
    }
  }
  if (best) return action_clause(*best);
  return "I completed " + e.label;
}

}  // namespace

std::string narrate(const Store& store, EpisodeId id, Timestamp now) {
  auto it = store.episodes.find(id);
  if (it == store.episodes.end()) {
    throw Error(Errc::unknown_episode, "episode " + std::to_string(id));
  }
  const Episode& episode = it->second;
  if (!episode.when.closed()) {
    throw Error(Errc::open_episode, "episode " + std::to_string(id) + " is open");
  }

  std::string body;
  if (episode.children.empty()) {
    body = clause_for(episode);
  } else {
    // transposed runs: consecutive children that overlap in time share a run
    for (std::size_t i = 0; i < episode.children.size(); ++i) {
      const Episode& child = store.episodes.at(episode.children[i]);
      if (i == 0) {
        body = clause_for(child);
        continue;
      }
      const Episode& prev = store.episodes.at(episode.children[i - 1]);
      body += interval_overlaps(prev.when, child.when) ? " while " : ", then ";
      body += clause_for(child);
    }
  }
  body += ", " + describe_time(episode.when.start, now) + ".";
  if (!body.empty()) body.front() = static_cast<char>(std::toupper(body.front()));
  return body;
}

std::string describe_time(Timestamp t, Timestamp now) {
  if (t > now) throw Error(Errc::future_timestamp, "timestamp is in the future");
  const std::int64_t age_s = (now.ms - t.ms) / 1000;
  if (age_s < 60) return "less than a minute ago";

  struct Unit {
    std::int64_t seconds;
    const char* name;
  };
  // month = 30 days, year = 365 days
  static constexpr Unit kUnits[] = {
      {31536000, "year"}, {2592000, "month"}, {604800, "week"},
      {86400, "day"},     {3600, "hour"},     {60, "minute"},
  };
  for (const Unit& unit : kUnits) {
    const std::int64_t n = age_s / unit.seconds;
    if (n >= 1) {
      return std::to_string(n) + " " + unit.name + (n > 1 ? "s" : "") + " ago";
    }
  }
  return "less than a minute ago";
}

// ---------------------------------------------------------------------------
// Answer serialization
// ---------------------------------------------------------------------------

namespace {

json payload_to_json(const Answer& answer) {
  return std::visit(
      [](const auto& payload) -> json {
        using T = std::decay_t<decltype(payload)>;
        json j;
        if constexpr (std::is_same_v<T, std::vector<EpisodeId>>) {
          j["kind"] = "episodes";
          j["ids"] = payload;
        } else if constexpr (std::is_same_v<T, std::vector<TimeInterval>>) {
          j["kind"] = "intervals";
          j["intervals"] = json::array();
          for (const TimeInterval& when : payload) {
            j["intervals"].push_back(
                json{{"start", when.start.ms},
                     {"end", when.end ? json(when.end->ms) : json(nullptr)}});
          }
        } else if constexpr (std::is_same_v<T, std::optional<std::string>>) {
          j["kind"] = "location";
          j["value"] = payload ? json(*payload) : json(nullptr);
        } else if constexpr (std::is_same_v<T, std::vector<StateEntry>>) {
          j["kind"] = "state";
          j["fields"] = json::array();
          for (const StateEntry& entry : payload) {
            j["fields"].push_back(json{{"field", entry.field}, {"value", entry.value}});
          }
        } else if constexpr (std::is_same_v<T, std::vector<FeelingEntry>>) {
          j["kind"] = "feeling";
          j["tags"] = json::array();
          for (const FeelingEntry& entry : payload) {
            j["tags"].push_back(json{{"group", to_string(entry.tag.group)},
                                     {"intensity", entry.tag.intensity},
                                     {"phrase", entry.phrase}});
          }
        } else {
          j["kind"] = "narration";
          j["text"] = payload;
        }
        return j;
      },
      answer.payload);
}

}  // namespace

std::string answer_payload_json_text(const Answer& answer) {
  return payload_to_json(answer).dump();
}

std::string answer_json_text(const Answer& answer) {
  json j;
  j["query"] = print_query(answer.query);
  j["now"] = answer.eval_now.ms;
  j["payload"] = payload_to_json(answer);
  j["supporting"] = answer.supporting;
  j["primary"] = answer.primary ? json(*answer.primary) : json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace epilog
