#include <fstream>
#include <sstream>

#include "epilog/store.hpp"
#include "json.hpp"

namespace epilog {

using json = nlohmann::json;

namespace {

json interval_to_json(const TimeInterval& when) {
  json j;
  j["start"] = when.start.ms;
  j["end"] = when.end ? json(when.end->ms) : json(nullptr);
  return j;
}

TimeInterval interval_from_json(const json& j) {
  TimeInterval when;
  when.start.ms = j.at("start").get<std::int64_t>();
  if (!j.at("end").is_null()) when.end = Timestamp{j.at("end").get<std::int64_t>()};
  return when;
}

json media_to_json(const MediaRef& media) {
  return json{{"kind", media.kind == MediaRef::Kind::image ? "image" : "video"},
              {"path", media.path}};
}

MediaRef media_from_json(const json& j) {
  MediaRef media;
  media.path = j.at("path").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "image") {
    media.kind = MediaRef::Kind::image;
  } else if (kind == "video") {
    media.kind = MediaRef::Kind::video;
  } else {
    throw Error(Errc::corrupt_snapshot, "unknown media kind '" + kind + "'");
  }
  return media;
}

json location_to_json(const SemanticLocation& loc) {
  json j;
  j["scope"] = loc.scope == LocationScope::inside_arena ? "inside_arena" : "outside_arena";
  j["room"] = loc.room ? json(*loc.room) : json(nullptr);
  j["furniture"] = loc.furniture ? json(*loc.furniture) : json(nullptr);
  if (loc.relation) {
    j["relation"] = json{{"anchor", loc.relation->anchor},
                         {"predicate", to_string(loc.relation->predicate)}};
  } else {
    j["relation"] = nullptr;
  }
  return j;
}

SemanticLocation location_from_json(const json& j) {
  SemanticLocation loc;
  const auto scope = j.at("scope").get<std::string>();
  if (scope == "inside_arena") {
    loc.scope = LocationScope::inside_arena;
  } else if (scope == "outside_arena") {
    loc.scope = LocationScope::outside_arena;
  } else {
    throw Error(Errc::corrupt_snapshot, "unknown location scope '" + scope + "'");
  }
  if (!j.at("room").is_null()) loc.room = j.at("room").get<std::string>();
  if (!j.at("furniture").is_null()) loc.furniture = j.at("furniture").get<std::string>();
  if (!j.at("relation").is_null()) {
    SpatialRelation rel;
    rel.anchor = j.at("relation").at("anchor").get<std::string>();
    const auto pred = j.at("relation").at("predicate").get<std::string>();
    bool matched = false;
    for (RelPredicate p : {RelPredicate::left_of, RelPredicate::right_of, RelPredicate::over,
                           RelPredicate::under, RelPredicate::near}) {
      if (pred == to_string(p)) {
        rel.predicate = p;
        matched = true;
      }
    }
    if (!matched) throw Error(Errc::corrupt_snapshot, "unknown relation predicate '" + pred + "'");
    loc.relation = rel;
  }
  return loc;
}

json content_to_json(const ContentItem& item) {
  json j;
  j["post_hoc"] = item.post_hoc;
  std::visit(
      [&](const auto& payload) {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, EntityObservation>) {
          j["type"] = "observation";
          j["entity"] = payload.entity;
          j["fields"] = payload.fields;
          j["media"] = payload.media ? media_to_json(*payload.media) : json(nullptr);
        } else if constexpr (std::is_same_v<T, Utterance>) {
          j["type"] = "utterance";
          j["speaker"] = payload.speaker;
          j["text"] = payload.text;
        } else if constexpr (std::is_same_v<T, ActionRecord>) {
          j["type"] = "action";
          j["verb"] = payload.verb;
          j["args"] = payload.args;
        } else {
          j["type"] = "media";
          j["kind"] = payload.kind == MediaRef::Kind::image ? "image" : "video";
          j["path"] = payload.path;
        }
      },
      item.payload);
  return j;
}

ContentItem content_from_json(const json& j) {
  ContentItem item;
  item.post_hoc = j.at("post_hoc").get<bool>();
  const auto type = j.at("type").get<std::string>();
  if (type == "observation") {
    EntityObservation obs;
    obs.entity = j.at("entity").get<std::string>();
    obs.fields = j.at("fields").get<std::map<std::string, std::string>>();
    if (!j.at("media").is_null()) obs.media = media_from_json(j.at("media"));
    item.payload = std::move(obs);
  } else if (type == "utterance") {
    item.payload = Utterance{j.at("speaker").get<std::string>(), j.at("text").get<std::string>()};
  } else if (type == "action") {
    item.payload = ActionRecord{j.at("verb").get<std::string>(),
                                j.at("args").get<std::vector<std::string>>()};
  } else if (type == "media") {
    item.payload = media_from_json(j);
  } else {
    throw Error(Errc::corrupt_snapshot, "unknown content type '" + type + "'");
  }
  return item;
}

json episode_to_json(const Episode& e) {
  json j;
  j["id"] = e.id;
  j["kind"] = to_string(e.kind.level);
  j["subtype"] = e.kind.capability ? json(to_string(*e.kind.capability)) : json(nullptr);
  j["label"] = e.label;
  j["when"] = interval_to_json(e.when);
  j["where"] = json::array();
  for (const SemanticLocation& loc : e.where) j["where"].push_back(location_to_json(loc));
  j["what"] = json::array();
  for (const ContentItem& item : e.what) j["what"].push_back(content_to_json(item));
  j["emotions"] = json::array();
  for (const auto& [group, intensity] : e.emotions) {
    j["emotions"].push_back(json{{"group", to_string(group)}, {"intensity", intensity}});
  }
  j["parent"] = e.parent ? json(*e.parent) : json(nullptr);
  j["children"] = e.children;
  return j;
}

Episode episode_from_json(const json& j) {
  Episode e;
  e.id = j.at("id").get<EpisodeId>();
  const auto kind = j.at("kind").get<std::string>();
  auto level = episode_level_from_string(kind);
  if (!level) throw Error(Errc::corrupt_snapshot, "unknown episode kind '" + kind + "'");
  e.kind.level = *level;
  if (!j.at("subtype").is_null()) {
    const auto subtype = j.at("subtype").get<std::string>();
    auto cap = capability_kind_from_string(subtype);
    if (!cap) throw Error(Errc::corrupt_snapshot, "unknown capability subtype '" + subtype + "'");
    e.kind.capability = *cap;
  }
  e.label = j.at("label").get<std::string>();
  e.when = interval_from_json(j.at("when"));
  for (const json& loc : j.at("where")) e.where.push_back(location_from_json(loc));
  for (const json& item : j.at("what")) e.what.push_back(content_from_json(item));
  for (const json& tag : j.at("emotions")) {
    const auto name = tag.at("group").get<std::string>();
    auto group = emotion_group_from_string(name);
    if (!group) throw Error(Errc::corrupt_snapshot, "unknown emotion group '" + name + "'");
    e.emotions[*group] = tag.at("intensity").get<int>();
  }
  if (!j.at("parent").is_null()) e.parent = j.at("parent").get<EpisodeId>();
  e.children = j.at("children").get<std::vector<EpisodeId>>();
  return e;
}

json entity_to_json(const Entity& entity) {
  json j;
  j["id"] = entity.id;
  j["class"] = to_string(entity.cls);
  j["static_fields"] = entity.static_fields;
  j["state_history"] = json::array();
  for (const StateRecord& record : entity.state_history) {
    j["state_history"].push_back(json{{"t", record.t.ms},
                                      {"field", record.field},
                                      {"value", record.value},
                                      {"source", record.source}});
  }
  return j;
}

Entity entity_from_json(const json& j) {
  Entity entity;
  entity.id = j.at("id").get<std::string>();
  const auto cls = j.at("class").get<std::string>();
  auto parsed = entity_class_from_string(cls);
  if (!parsed) throw Error(Errc::corrupt_snapshot, "unknown entity class '" + cls + "'");
  entity.cls = *parsed;
  entity.static_fields = j.at("static_fields").get<std::map<std::string, std::string>>();
  for (const json& record : j.at("state_history")) {
    entity.state_history.push_back(StateRecord{Timestamp{record.at("t").get<std::int64_t>()},
                                               record.at("field").get<std::string>(),
                                               record.at("value").get<std::string>(),
                                               record.at("source").get<EpisodeId>()});
  }
  return entity;
}

}  // namespace

std::string store_to_json_text(const Store& store) {
  json j;
  j["episodes"] = json::array();
  for (const auto& [id, episode] : store.episodes) j["episodes"].push_back(episode_to_json(episode));
  j["entities"] = json::array();
  for (const auto& [id, entity] : store.entities) j["entities"].push_back(entity_to_json(entity));
  j["roots"] = store.roots;
  j["next_id"] = store.next_id;
  return j.dump(2) + "\n";
}

Store store_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_snapshot, e.what());
  }
  Store store;
  try {
    for (const json& ej : j.at("episodes")) {
      Episode episode = episode_from_json(ej);
      const EpisodeId id = episode.id;
      if (!store.episodes.emplace(id, std::move(episode)).second) {
        throw Error(Errc::corrupt_snapshot, "duplicate episode id " + std::to_string(id));
      }
    }
    for (const json& ej : j.at("entities")) {
      Entity entity = entity_from_json(ej);
      std::string id = entity.id;
      store.entities.emplace(std::move(id), std::move(entity));
    }
    store.roots = j.at("roots").get<std::vector<EpisodeId>>();
    store.next_id = j.at("next_id").get<EpisodeId>();
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_snapshot, e.what());
  }
  if (!validate(store).empty()) {
    throw Error(Errc::corrupt_snapshot, "snapshot violates store invariants");
  }
  return store;
}

void save(const Store& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  out << store_to_json_text(store);
  if (!out) throw Error(Errc::io_error, "write failed for '" + path.string() + "'");
}

Store load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return store_from_json_text(buffer.str());
}

std::string event_to_json_line(const Event& event) {
  json j;
  j["t"] = event.t.ms;
  std::visit(
      [&](const auto& payload) {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, BeginEvent>) {
          j["type"] = "begin";
          j["kind"] = to_string(payload.kind.level);
          if (payload.kind.capability) j["subtype"] = to_string(*payload.kind.capability);
          j["label"] = payload.label;
        } else if constexpr (std::is_same_v<T, EndEvent>) {
          j["type"] = "end";
          if (payload.label) j["label"] = *payload.label;
        } else if constexpr (std::is_same_v<T, ObserveEvent>) {
          j["type"] = "observe";
          j["entity"] = payload.entity;
          j["class"] = to_string(payload.cls);
          j["fields"] = payload.fields;
          if (payload.media) j["media"] = media_to_json(*payload.media);
        } else if constexpr (std::is_same_v<T, SayEvent>) {
          j["type"] = "say";
          j["speaker"] = payload.speaker;
          j["text"] = payload.text;
        } else if constexpr (std::is_same_v<T, ActEvent>) {
          j["type"] = "act";
          j["verb"] = payload.verb;
          j["args"] = payload.args;
        } else if constexpr (std::is_same_v<T, EmotionEvent>) {
          j["type"] = "emotion";
          j["group"] = to_string(payload.group);
          j["intensity"] = payload.intensity;
        } else {
          j["type"] = "pose";
          j["x"] = payload.x;
          j["y"] = payload.y;
        }
      },
      event.payload);
  return j.dump();
}

Event event_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_snapshot, std::string("bad event line: ") + e.what());
  }
  Event event;
  try {
    event.t.ms = j.at("t").get<std::int64_t>();
    const auto type = j.at("type").get<std::string>();
    if (type == "begin") {
      BeginEvent begin;
      const auto kind = j.at("kind").get<std::string>();
      auto level = episode_level_from_string(kind);
      if (!level) throw Error(Errc::corrupt_snapshot, "unknown begin kind '" + kind + "'");
      begin.kind.level = *level;
      if (j.contains("subtype") && !j.at("subtype").is_null()) {
        const auto subtype = j.at("subtype").get<std::string>();
        auto cap = capability_kind_from_string(subtype);
        if (!cap) throw Error(Errc::corrupt_snapshot, "unknown subtype '" + subtype + "'");
        begin.kind.capability = *cap;
      }
      begin.label = j.at("label").get<std::string>();
      event.payload = std::move(begin);
    } else if (type == "end") {
      EndEvent end;
      if (j.contains("label") && !j.at("label").is_null()) {
        end.label = j.at("label").get<std::string>();
      }
      event.payload = std::move(end);
    } else if (type == "observe") {
      ObserveEvent observe;
      observe.entity = j.at("entity").get<std::string>();
      const auto cls = j.at("class").get<std::string>();
      auto parsed = entity_class_from_string(cls);
      if (!parsed) throw Error(Errc::corrupt_snapshot, "unknown entity class '" + cls + "'");
      observe.cls = *parsed;
      observe.fields = j.at("fields").get<std::map<std::string, std::string>>();
      if (j.contains("media") && !j.at("media").is_null()) {
        observe.media = media_from_json(j.at("media"));
      }
      event.payload = std::move(observe);
    } else if (type == "say") {
      event.payload =
          SayEvent{j.at("speaker").get<std::string>(), j.at("text").get<std::string>()};
    } else if (type == "act") {
      event.payload =
          ActEvent{j.at("verb").get<std::string>(), j.at("args").get<std::vector<std::string>>()};
    } else if (type == "emotion") {
      EmotionEvent emotion;
      const auto name = j.at("group").get<std::string>();
      auto group = emotion_group_from_string(name);
      if (!group) throw Error(Errc::corrupt_snapshot, "unknown emotion group '" + name + "'");
      emotion.group = *group;
      emotion.intensity = j.at("intensity").get<int>();
      event.payload = emotion;
    } else if (type == "pose") {
      event.payload = PoseEvent{j.at("x").get<double>(), j.at("y").get<double>()};
    } else {
      throw Error(Errc::corrupt_snapshot, "unknown event type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_snapshot, std::string("bad event line: ") + e.what());
  }
  return event;
}

std::vector<Event> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  std::vector<Event> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(event_from_json_line(line));
  }
  return events;
}

void write_event_log(const std::vector<Event>& events, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  for (const Event& event : events) out << event_to_json_line(event) << "\n";
  if (!out) throw Error(Errc::io_error, "write failed for '" + path.string() + "'");
}

}  // namespace epilog
