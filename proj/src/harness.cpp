#include "epilog/harness.hpp"

#include <algorithm>
#include <fstream>

#include "epilog/evidence.hpp"
#include "epilog/relevance.hpp"
#include "json.hpp"

namespace epilog {

using json = nlohmann::json;

namespace {

// splitmix64: the log bytes must not depend on the standard library's
// distribution implementations.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
};

const std::vector<std::string> kNames = {"anna",   "bruno",  "carla", "diego", "elena",
                                         "felipe", "gloria", "hugo",  "irene", "jorge"};
const std::vector<std::string> kObjects = {"apple", "coke", "milk",   "bread", "cereal",
                                           "mug",   "book", "remote", "keys",  "towel"};
const std::vector<std::string> kColors = {"red",   "blue",  "green",  "yellow",
                                          "black", "white", "orange", "purple"};
const std::vector<std::string> kGarments = {"jacket", "shirt", "sweater", "coat", "hoodie"};
const std::vector<std::string> kShades = {"", "dark ", "light "};

constexpr std::int64_t kBaseTimeMs = 1562749200000;  // 2019-07-10 09:00:00 UTC

std::string indexed_name(const std::vector<std::string>& pool, int index) {
  const std::string& base = pool[static_cast<std::size_t>(index) % pool.size()];
  const int round = index / static_cast<int>(pool.size());
  return round == 0 ? base : base + std::to_string(round + 1);
}

// ---------------------------------------------------------------------------
// Scenario builder: emits events and mirrors them into the ground tables.
// It predicts episode ids by counting begins; it never runs the engine.
// ---------------------------------------------------------------------------

class ScenarioBuilder {
public:
  ScenarioBuilder(Scenario& s, Rng& rng) : s_(s), rng_(rng), t_{kBaseTimeMs} {}

  Timestamp now() const { return t_; }

  void step(std::int64_t ms) { t_.ms += ms; }
  void small_step() { step(rng_.range(800, 2400)); }

  EpisodeId begin(EpisodeKind kind, const std::string& label) {
    GroundEpisode g;
    g.id = next_id_++;
    g.kind = kind;
    g.label = label;
    g.start = t_;
    if (kind.level == EpisodeLevel::task) {
      g.parent = open_.back();
    } else if (kind.level == EpisodeLevel::capability) {
      for (auto it = open_.rbegin(); it != open_.rend(); ++it) {
        if (s_.episodes.at(*it).kind.level == EpisodeLevel::task) {
          g.parent = *it;
          break;
        }
      }
    }
    if (g.parent) s_.episodes.at(*g.parent).children.push_back(g.id);
    if (kind.level == EpisodeLevel::context) s_.context_order.push_back(g.id);
    if (kind.level == EpisodeLevel::task) s_.task_order.push_back(g.id);
    open_.push_back(g.id);
    s_.episodes.emplace(g.id, std::move(g));
    s_.events.push_back({t_, BeginEvent{kind, label}});
    small_step();
    return open_.back();
  }

  void end() {
    s_.episodes.at(open_.back()).end = t_;
    open_.pop_back();
    s_.events.push_back({t_, EndEvent{}});
    small_step();
  }

  void end_label(const std::string& label) {
    for (auto it = open_.rbegin(); it != open_.rend(); ++it) {
      if (s_.episodes.at(*it).label == label) {
        s_.episodes.at(*it).end = t_;
        open_.erase(std::next(it).base());
        break;
      }
    }
    s_.events.push_back({t_, EndEvent{label}});
    small_step();
  }

  void pose(double x, double y) {
    s_.events.push_back({t_, PoseEvent{x, y}});
    small_step();
  }

  void move_to(const std::string& place) {
    if (const Rect* rect = s_.map.find_rect(place)) {
      pose(rect->cx(), rect->cy());
    } else {
      pose(s_.map.bounds.cx(), s_.map.bounds.cy());
    }
  }

  void say(const std::string& speaker, const std::string& text) {
    s_.events.push_back({t_, SayEvent{speaker, text}});
    small_step();
  }

  void act(const std::string& verb, std::vector<std::string> args) {
    s_.episodes.at(open_.back()).actions.push_back({verb, args});
    s_.events.push_back({t_, ActEvent{verb, std::move(args)}});
    small_step();
  }

  void observe(const std::string& entity, EntityClass cls,
               const std::map<std::string, std::string>& fields, bool with_media = false) {
    std::optional<MediaRef> media;
    if (with_media) {
      media = MediaRef{"media/" + entity + "_" + std::to_string(t_.ms) + ".png",
                       MediaRef::Kind::image};
    }
    for (const auto& [field, value] : fields) {
      s_.state_timeline.push_back({t_, entity, field, value});
    }
    s_.events.push_back({t_, ObserveEvent{entity, cls, fields, media}});
    small_step();
  }

  void emotion(EmotionGroup group, int intensity) {
    auto& own = s_.episodes.at(open_.back()).own_emotions;
    auto [it, inserted] = own.emplace(group, intensity);
    if (!inserted) it->second = std::max(it->second, intensity);
    s_.events.push_back({t_, EmotionEvent{group, intensity}});
    ++s_.scripted_emotion_events;
    small_step();
  }

  // scripted emotion burst for the current task
  void task_emotions(double rate) {
    int count = static_cast<int>(rate);
    const double frac = rate - count;
    if (frac > 0 && static_cast<double>(rng_.below(1000)) < frac * 1000.0) ++count;
    for (int i = 0; i < count; ++i) {
      const EmotionGroup group = kEmotionGroups[rng_.below(4)];
      emotion(group, rng_.range(1, 3));
    }
  }

private:
  Scenario& s_;
  Rng& rng_;
  Timestamp t_;
  EpisodeId next_id_ = 1;
  std::vector<EpisodeId> open_;
};

void rollup_ground(Scenario& s, EpisodeId id) {
  GroundEpisode& g = s.episodes.at(id);
  g.rolled_emotions = g.own_emotions;
  for (EpisodeId child : g.children) {
    rollup_ground(s, child);
    for (const auto& [group, intensity] : s.episodes.at(child).rolled_emotions) {
      auto [it, inserted] = g.rolled_emotions.emplace(group, intensity);
      if (!inserted) it->second = std::max(it->second, intensity);
    }
  }
  if (g.rolled_emotions.empty()) g.rolled_emotions.emplace(EmotionGroup::joy_trust, 0);
}

// ---------------------------------------------------------------------------
// Test scripts
// ---------------------------------------------------------------------------

struct ScriptContext {
  Scenario& s;
  ScenarioBuilder& b;
  Rng& rng;
  double rate;
};

void script_memory_setup(ScriptContext& ctx) {
  auto& [s, b, rng, rate] = ctx;
  b.begin(EpisodeKind::context(), "RoboCup, Setup Days, Test: Memory Setup");
  b.say("robot", "starting test: Memory Setup");

  b.begin(EpisodeKind::task(), "introduction round");
  b.say("robot", "task: introduction round");
  b.move_to("living_room");
  for (RosterPerson& person : s.people) {
    b.begin(EpisodeKind::of_capability(CapabilityKind::hri), "meet " + person.id);
    b.say(person.id, "my name is " + person.id);
    b.say(person.id, "i am " + std::to_string(person.age) + " years old");
    b.observe(person.id, EntityClass::person,
              {{"name", person.id},
               {"age", std::to_string(person.age)},
               {"clothes", person.clothes},
               {"location", person.room}},
              true);
    b.act("greet", {person.id});
    b.end();
  }
  b.task_emotions(rate);
  b.end();

  b.begin(EpisodeKind::task(), "arena tour");
  b.say("robot", "task: arena tour");
  for (RosterObject& object : s.objects) {
    b.begin(EpisodeKind::of_capability(CapabilityKind::perception), "spot the " + object.id);
    b.move_to(object.place);
    b.act("search", {object.id});
    b.observe(object.id, EntityClass::object, {{"location", object.place}}, true);
    b.end();
  }
  b.task_emotions(rate);
  b.end();

  b.begin(EpisodeKind::task(), "informal conversation");
  b.say("robot", "task: informal conversation");
  const RosterPerson& friend_ = s.people.front();
  b.begin(EpisodeKind::of_capability(CapabilityKind::hri), "chat with " + friend_.id);
  b.say(friend_.id, "how was the trip here");
  b.say("robot", "long but pleasant");
  b.act("chat", {friend_.id});
  b.end();
  b.task_emotions(rate);
  b.end();

  b.end();  // context
}

void observe_people_round(ScriptContext& ctx, int test_index) {
  auto& [s, b, rng, rate] = ctx;
  for (RosterPerson& person : s.people) {
    // similar but not identical clothes per test
    const std::size_t shade = static_cast<std::size_t>(test_index) % kShades.size();
    std::string base = person.clothes;
    if (base.rfind("dark ", 0) == 0) base = base.substr(5);
    if (base.rfind("light ", 0) == 0) base = base.substr(6);
    person.clothes = kShades[shade] + base;
    b.observe(person.id, EntityClass::person,
              {{"clothes", person.clothes}, {"location", person.room}});
  }
}

void script_spr(ScriptContext& ctx, int test_index) {
  auto& [s, b, rng, rate] = ctx;
  b.begin(EpisodeKind::context(), "RoboCup, Stage 1, Test: SPR");
  b.say("robot", "starting test: SPR");

  b.begin(EpisodeKind::task(), "Subtest: The Riddle Game");
  b.say("robot", "task: Subtest: The Riddle Game");
  b.move_to("living_room");
  b.begin(EpisodeKind::of_capability(CapabilityKind::perception), "find the crowd");
  for (RosterPerson& person : s.people) b.act("search", {person.id});
  observe_people_round(ctx, test_index);
  b.end();
  b.begin(EpisodeKind::of_capability(CapabilityKind::hri), "answer the riddles");
  const RosterPerson& asker = s.people[rng.below(s.people.size())];
  b.say(asker.id, "who is the oldest person in the room");
  b.say("robot", "let me think");
  b.act("answer", {"riddles"});
  b.end();
  b.task_emotions(rate);
  b.end();

  b.end();
}

void script_gpsr(ScriptContext& ctx, const std::vector<std::size_t>& object_indices) {
  auto& [s, b, rng, rate] = ctx;
  b.begin(EpisodeKind::context(), "RoboCup, Stage 1, Test: GPSR");
  b.say("robot", "starting test: GPSR");

  const auto& furniture = s.map.furniture;
  for (std::size_t index : object_indices) {
    RosterObject& object = s.objects[index];
    std::string destination = object.place;
    if (!furniture.empty()) {
      for (std::size_t offset = 1; offset <= furniture.size(); ++offset) {
        const FurnitureDef& candidate =
            furniture[(index + offset + furniture.size() / 2) % furniture.size()];
        if (candidate.name != object.place) {
          destination = candidate.name;
          break;
        }
      }
    }

    b.begin(EpisodeKind::task(), "fetch the " + object.id);
    b.say("robot", "task: fetch the " + object.id);
    b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "go to the " + object.place);
    b.move_to(object.place);
    b.act("move", {object.place});
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::perception), "find the " + object.id);
    b.act("search", {object.id});
    b.observe(object.id, EntityClass::object, {{"location", object.place}}, true);
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::manipulation), "pick up the " + object.id);
    b.act("grasp", {object.id});
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "go to the " + destination);
    b.move_to(destination);
    b.act("move", {destination});
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::manipulation), "put down the " + object.id);
    b.act("place", {object.id});
    object.place = destination;
    b.observe(object.id, EntityClass::object, {{"location", object.place}}, true);
    b.end();
    b.task_emotions(rate);
    b.end();
  }

  b.end();
}

void script_restaurant(ScriptContext& ctx, const std::vector<std::size_t>& object_indices,
                       int test_index) {
  auto& [s, b, rng, rate] = ctx;
  b.begin(EpisodeKind::context(), "RoboCup, Stage 2, Test: Restaurant");
  b.say("robot", "starting test: Restaurant");

  RosterPerson& customer = s.people[s.people.size() / 2];
  const std::string counter = s.map.named_areas.empty() ? std::string("living_room")
                                                        : s.map.named_areas.front().name;

  b.begin(EpisodeKind::task(), "take an order");
  b.say("robot", "task: take an order");
  b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "go to the " + counter);
  b.move_to(counter);
  b.act("move", {counter});
  b.end();
  b.begin(EpisodeKind::of_capability(CapabilityKind::hri), "listen to " + customer.id);
  customer.room = counter;
  const std::string wanted =
      object_indices.empty() ? s.objects.front().id : s.objects[object_indices.front()].id;
  b.say(customer.id, "bring me the " + wanted);
  b.act("listen", {customer.id});
  const std::size_t shade = static_cast<std::size_t>(test_index) % kShades.size();
  std::string base = customer.clothes;
  if (base.rfind("dark ", 0) == 0) base = base.substr(5);
  if (base.rfind("light ", 0) == 0) base = base.substr(6);
  customer.clothes = kShades[shade] + base;
  b.observe(customer.id, EntityClass::person,
            {{"clothes", customer.clothes}, {"location", customer.room}});
  b.end();
  b.task_emotions(rate);
  b.end();

  for (std::size_t index : object_indices) {
    RosterObject& object = s.objects[index];
    b.begin(EpisodeKind::task(), "serve the " + object.id);
    b.say("robot", "task: serve the " + object.id);
    b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "go to the " + object.place);
    b.move_to(object.place);
    b.act("move", {object.place});
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::manipulation), "pick up the " + object.id);
    b.act("grasp", {object.id});
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "go to the " + counter);
    b.move_to(counter);
    b.act("move", {counter});
    b.end();
    b.begin(EpisodeKind::of_capability(CapabilityKind::manipulation), "put down the " + object.id);
    b.act("place", {object.id});
    object.place = counter;
    b.observe(object.id, EntityClass::object, {{"location", object.place}}, true);
    b.end();
    b.task_emotions(rate);
    b.end();
  }

  b.end();
}

void script_epltm(ScriptContext& ctx, int test_index) {
  auto& [s, b, rng, rate] = ctx;
  b.begin(EpisodeKind::context(), "RoboCup, Stage 2, Test: EpLTM");
  b.say("robot", "starting test: EpLTM");

  RosterPerson& operator_ = s.people.front();
  operator_.room = "bedroom";

  b.begin(EpisodeKind::task(), "enter the arena");
  b.say("robot", "task: enter the arena");
  b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "go to the bedroom");
  b.pose(s.map.bounds.x0 - 1.0, s.map.bounds.y0 - 1.0);  // at the entrance, outside
  b.move_to("bedroom");
  b.act("move", {"bedroom"});
  b.end();
  b.task_emotions(rate);
  b.end();

  b.begin(EpisodeKind::task(), "approach the operator");
  b.say("robot", "task: approach the operator");
  // the robot keeps talking while it walks: transposed capabilities
  b.begin(EpisodeKind::of_capability(CapabilityKind::navigation), "walk to the bed");
  b.move_to("bed");
  b.act("move", {"bed"});
  b.begin(EpisodeKind::of_capability(CapabilityKind::hri), "reassure " + operator_.id);
  b.say("robot", "i am on my way");
  b.act("chat", {operator_.id});
  b.end_label("walk to the bed");
  b.end();  // closes the hri capability after the navigation one
  b.begin(EpisodeKind::of_capability(CapabilityKind::perception), "find " + operator_.id);
  b.act("search", {operator_.id});
  const std::size_t shade = static_cast<std::size_t>(test_index) % kShades.size();
  std::string base = operator_.clothes;
  if (base.rfind("dark ", 0) == 0) base = base.substr(5);
  if (base.rfind("light ", 0) == 0) base = base.substr(6);
  operator_.clothes = kShades[shade] + base;
  b.observe(operator_.id, EntityClass::person,
            {{"clothes", operator_.clothes}, {"location", operator_.room}}, true);
  b.end();
  b.task_emotions(rate);
  b.end();

  b.begin(EpisodeKind::task(), "assist " + operator_.id);
  b.say("robot", "task: assist " + operator_.id);
  b.begin(EpisodeKind::of_capability(CapabilityKind::hri), "talk with " + operator_.id);
  b.say(operator_.id, "i am sick, i cannot move");
  b.say("robot", "i can answer your questions");
  b.act("talk", {operator_.id});
  b.end();
  b.task_emotions(rate);
  b.end();

  b.end();
}

}  // namespace

std::vector<std::string> ScenarioConfig::default_tests() {
  return {"MemorySetup", "Stage1/SPR", "Stage1/GPSR", "Stage2/Restaurant", "Stage2/EpLTM"};
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  if (cfg.people < 1) throw Error(Errc::invalid_config, "people must be >= 1");
  if (cfg.objects < 1) throw Error(Errc::invalid_config, "objects must be >= 1");
  if (cfg.tests.empty()) throw Error(Errc::invalid_config, "tests list is empty");
  if (cfg.emotion_event_rate < 0) throw Error(Errc::invalid_config, "negative emotion rate");
  const std::vector<std::string> known = {"MemorySetup", "Stage1/SPR", "Stage1/GPSR",
                                          "Stage2/Restaurant", "Stage2/EpLTM"};
  for (const std::string& test : cfg.tests) {
    if (std::find(known.begin(), known.end(), test) == known.end()) {
      throw Error(Errc::invalid_config, "unknown test '" + test + "'");
    }
    if (std::count(cfg.tests.begin(), cfg.tests.end(), test) > 1) {
      throw Error(Errc::invalid_config, "test '" + test + "' appears more than once");
    }
  }
  auto epltm = std::find(cfg.tests.begin(), cfg.tests.end(), "Stage2/EpLTM");
  if (epltm != cfg.tests.end() && std::next(epltm) != cfg.tests.end()) {
    throw Error(Errc::invalid_config, "Stage2/EpLTM must be the last test");
  }

  Scenario s;
  s.config = cfg;
  s.map = cfg.map_path.empty() ? default_arena() : load_map(cfg.map_path);

  Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);

  // roster
  const std::vector<std::string> room_pool = [&] {
    std::vector<std::string> names;
    for (const RoomDef& room : s.map.rooms) names.push_back(room.name);
    if (names.empty()) names.push_back("arena");
    return names;
  }();
  for (int i = 0; i < cfg.people; ++i) {
    RosterPerson person;
    person.id = indexed_name(kNames, i);
    person.age = rng.range(18, 88);
    person.clothes = kColors[rng.below(kColors.size())] + " " +
                     kGarments[rng.below(kGarments.size())];
    person.room = room_pool[static_cast<std::size_t>(i) % room_pool.size()];
    s.people.push_back(std::move(person));
  }
  const std::vector<std::string> place_pool = [&] {
    std::vector<std::string> names;
    for (const FurnitureDef& f : s.map.furniture) names.push_back(f.name);
    if (names.empty()) names = room_pool;
    return names;
  }();
  for (int i = 0; i < cfg.objects; ++i) {
    RosterObject object;
    object.id = indexed_name(kObjects, i);
    object.place = place_pool[static_cast<std::size_t>(i) % place_pool.size()];
    s.objects.push_back(std::move(object));
  }

  ScenarioBuilder b(s, rng);
  ScriptContext ctx{s, b, rng, cfg.emotion_event_rate};

  // GPSR moves the first half of the objects, Restaurant serves the rest
  std::vector<std::size_t> gpsr_objects, restaurant_objects;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (i < (s.objects.size() + 1) / 2) {
      gpsr_objects.push_back(i);
    } else {
      restaurant_objects.push_back(i);
    }
  }
  if (restaurant_objects.empty()) restaurant_objects = gpsr_objects;

  b.pose(s.map.bounds.cx(), s.map.bounds.cy());  // somewhere known before the first episode

  int test_index = 0;
  for (const std::string& test : cfg.tests) {
    if (test_index > 0) b.step(6LL * 3600 * 1000 + rng.range(0, 1800) * 1000LL);
    if (test == "MemorySetup") {
      script_memory_setup(ctx);
    } else if (test == "Stage1/SPR") {
      script_spr(ctx, test_index);
    } else if (test == "Stage1/GPSR") {
      script_gpsr(ctx, gpsr_objects);
    } else if (test == "Stage2/Restaurant") {
      script_restaurant(ctx, restaurant_objects, test_index);
    } else {
      script_epltm(ctx, test_index);
    }
    ++test_index;
  }

  for (EpisodeId root : s.context_order) rollup_ground(s, root);
  s.end_time = s.events.back().t;
  return s;
}

// ---------------------------------------------------------------------------
// Ground-truth helpers (table scans; deliberately independent of the engine)
// ---------------------------------------------------------------------------

namespace {

std::optional<std::string> truth_state(const Scenario& s, const std::string& entity,
                                       const std::string& field, Timestamp at) {
  std::optional<std::string> value;
  for (const StateTruthRecord& record : s.state_timeline) {
    if (record.entity == entity && record.field == field && record.t <= at) {
      value = record.value;
    }
  }
  return value;
}

std::vector<Timestamp> truth_state_times(const Scenario& s, const std::string& entity,
                                         const std::string& field) {
  std::vector<Timestamp> times;
  for (const StateTruthRecord& record : s.state_timeline) {
    if (record.entity == entity && record.field == field) times.push_back(record.t);
  }
  return times;
}

// the "Test: X" tail uniquely names a context among all ground labels
std::string context_fragment(const GroundEpisode& root) {
  const std::size_t at = root.label.find("Test:");
  return at == std::string::npos ? root.label : root.label.substr(at);
}

std::string truth_past_tense(const std::string& verb) {
  if (verb == "chat") return "chatted";
  if (verb == "grab") return "grabbed";
  if (verb == "stop") return "stopped";
  if (!verb.empty() && verb.back() == 'e') return verb + "d";
  return verb + "ed";
}

std::string truth_clause(const GroundEpisode& g) {
  const GroundAction* best = nullptr;
  for (const GroundAction& action : g.actions) {
    if (!best || action.args.size() >= best->args.size()) best = &action;
  }
  if (!best) return "I completed " + g.label;

  std::string out = "I " + truth_past_tense(best->verb);
  if (best->args.empty()) return out;
  const std::string& verb = best->verb;
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
    // bare object
  } else {
    article = true;
  }
  for (std::size_t i = 0; i < best->args.size(); ++i) {
    out += i == 0 ? " " : " and ";
    if (i == 0 && !prep.empty()) out += prep + " ";
    if (article) out += "the ";
    out += best->args[i];
  }
  return out;
}

std::string truth_time_phrase(Timestamp t, Timestamp now) {
  const std::int64_t age_s = (now.ms - t.ms) / 1000;
  if (age_s < 60) return "less than a minute ago";
  const std::pair<std::int64_t, const char*> units[] = {
      {31536000, "year"}, {2592000, "month"}, {604800, "week"},
      {86400, "day"},     {3600, "hour"},     {60, "minute"},
  };
  for (const auto& [seconds, name] : units) {
    const std::int64_t n = age_s / seconds;
    if (n >= 1) return std::to_string(n) + " " + name + (n > 1 ? "s" : "") + " ago";
  }
  return "less than a minute ago";
}

std::string truth_narration(const Scenario& s, const GroundEpisode& task, Timestamp now) {
  std::string body;
  if (task.children.empty()) {
    body = truth_clause(task);
  } else {
    for (std::size_t i = 0; i < task.children.size(); ++i) {
      const GroundEpisode& child = s.episodes.at(task.children[i]);
      if (i == 0) {
        body = truth_clause(child);
        continue;
      }
      const GroundEpisode& prev = s.episodes.at(task.children[i - 1]);
      const TimeInterval a{prev.start, prev.end};
      const TimeInterval bwhen{child.start, child.end};
      body += interval_overlaps(a, bwhen) ? " while " : ", then ";
      body += truth_clause(child);
    }
  }
  body += ", " + truth_time_phrase(task.start, now) + ".";
  if (!body.empty()) body.front() = static_cast<char>(std::toupper(body.front()));
  return body;
}

json truth_feeling_payload(const GroundEpisode& root) {
  json tags = json::array();
  for (const auto& [group, intensity] : root.rolled_emotions) {
    tags.push_back(json{{"group", to_string(group)},
                        {"intensity", intensity},
                        {"phrase", emotion_phrase({group, intensity})}});
  }
  return json{{"kind", "feeling"}, {"tags", tags}};
}

// number of label matches across all ground episodes (uniqueness guard)
int label_match_count(const Scenario& s, const std::string& fragment) {
  int count = 0;
  for (const auto& [id, g] : s.episodes) {
    if (g.label.find(fragment) != std::string::npos) ++count;
  }
  return count;
}

struct InjectionWriter {
  std::vector<Event> events;
  Timestamp t;

  void push(EventPayload payload) {
    events.push_back({t, std::move(payload)});
    t.ms += 1000;
  }
};

std::vector<Event> investigation_events(const Scenario& s, const std::string& object,
                                        const std::string& place, Timestamp base, int index) {
  InjectionWriter w{{}, base};
  w.push(BeginEvent{EpisodeKind::context(),
                    "RoboCup, Stage 2, Investigation " + std::to_string(index)});
  w.push(SayEvent{"robot", "investigating the " + object});
  w.push(BeginEvent{EpisodeKind::task(), "investigate the " + object});
  w.push(SayEvent{"robot", "task: investigate the " + object});
  if (const Rect* rect = s.map.find_rect(place)) {
    w.push(PoseEvent{rect->cx(), rect->cy()});
  }
  w.push(BeginEvent{EpisodeKind::of_capability(CapabilityKind::perception),
                    "check the " + object});
  w.push(ActEvent{"search", {object}});
  w.push(ObserveEvent{object, EntityClass::object, {{"location", place}},
                      MediaRef{"media/check_" + object + "_" + std::to_string(base.ms) + ".png",
                               MediaRef::Kind::image}});
  w.push(EndEvent{});
  w.push(EndEvent{});
  w.push(EndEvent{});
  return std::move(w.events);
}

std::vector<Event> interaction_events(const Scenario& s, const std::string& person,
                                      const std::string& room, Timestamp base, int index) {
  InjectionWriter w{{}, base};
  w.push(BeginEvent{EpisodeKind::context(),
                    "RoboCup, Stage 2, Interaction " + std::to_string(index)});
  w.push(SayEvent{"robot", "visiting " + person});
  w.push(BeginEvent{EpisodeKind::task(), "visit " + person});
  w.push(SayEvent{"robot", "task: visit " + person});
  if (const Rect* rect = s.map.find_rect(room)) {
    w.push(PoseEvent{rect->cx(), rect->cy()});
  }
  w.push(BeginEvent{EpisodeKind::of_capability(CapabilityKind::hri), "talk with " + person});
  w.push(SayEvent{person, "hello again"});
  w.push(ActEvent{"talk", {person}});
  w.push(ObserveEvent{person, EntityClass::person, {{"location", room}}, std::nullopt});
  w.push(EndEvent{});
  w.push(EndEvent{});
  w.push(EndEvent{});
  return std::move(w.events);
}

}  // namespace

const char* to_string(QueryCategory cat) {
  switch (cat) {
    case QueryCategory::cat1: return "cat1";
    case QueryCategory::cat2: return "cat2";
    case QueryCategory::cat3: return "cat3";
  }
  return "cat1";
}

std::vector<QueryItem> generate_queries(const Scenario& s, int n_per_cat) {
  if (n_per_cat <= 0) throw Error(Errc::invalid_config, "n_per_cat must be >= 1");
  if (s.scripted_emotion_events == 0) {
    throw Error(Errc::insufficient_scenario, "no scripted emotion events for Cat1");
  }
  if (s.objects.empty()) throw Error(Errc::insufficient_scenario, "no objects for Cat2");
  if (s.people.empty()) throw Error(Errc::insufficient_scenario, "no people for Cat3");
  if (s.context_order.empty()) throw Error(Errc::insufficient_scenario, "no episodes recorded");

  const Timestamp eval_now{s.end_time.ms + (3LL * n_per_cat + 1) * 60000};

  // Cat1 resources
  std::vector<const GroundEpisode*> describe_targets;
  for (EpisodeId id : s.task_order) {
    const GroundEpisode& g = s.episodes.at(id);
    if (g.children.size() >= 2 && label_match_count(s, g.label) == 1) {
      describe_targets.push_back(&g);
    }
  }
  std::vector<std::pair<EmotionGroup, int>> find_combos;
  for (int level : {2, 1}) {
    for (EmotionGroup group : kEmotionGroups) {
      bool any = false;
      for (EpisodeId id : s.task_order) {
        auto it = s.episodes.at(id).rolled_emotions.find(group);
        if (it != s.episodes.at(id).rolled_emotions.end() && it->second >= level) any = true;
      }
      if (any) find_combos.emplace_back(group, level);
    }
  }
  if (find_combos.empty() && describe_targets.empty()) {
    throw Error(Errc::insufficient_scenario, "no Cat1 material in scenario");
  }

  std::vector<QueryItem> cat1, cat2, cat3;

  for (int i = 0; i < n_per_cat; ++i) {
    QueryItem item;
    item.category = QueryCategory::cat1;
    item.eval_now = eval_now;
    const int kind = i % 4;
    if (kind == 0 || (kind == 1 && find_combos.empty()) ||
        (kind == 2 && describe_targets.empty())) {
      // FEELING over one context
      const GroundEpisode& root =
          s.episodes.at(s.context_order[static_cast<std::size_t>(i / 4) % s.context_order.size()]);
      const std::string fragment = context_fragment(root);
      FeelingQuery q;
      q.conds.push_back(CondLabel{fragment});
      item.dsl = print_query(Query{q});
      item.truth_payload_json = truth_feeling_payload(root).dump();
    } else if (kind == 1) {
      const auto& [group, level] = find_combos[static_cast<std::size_t>(i) % find_combos.size()];
      FindEpisodesQuery q;
      q.conds.push_back(CondKind{EpisodeLevel::task});
      q.conds.push_back(CondEmotion{group, level});
      item.dsl = print_query(Query{q});
      std::vector<const GroundEpisode*> matches;
      for (EpisodeId id : s.task_order) {
        const GroundEpisode& g = s.episodes.at(id);
        auto it = g.rolled_emotions.find(group);
        if (it != g.rolled_emotions.end() && it->second >= level) matches.push_back(&g);
      }
      std::sort(matches.begin(), matches.end(), [](const GroundEpisode* a, const GroundEpisode* b) {
        if (a->start != b->start) return a->start < b->start;
        return a->id < b->id;
      });
      json ids = json::array();
      for (const GroundEpisode* g : matches) ids.push_back(g->id);
      item.truth_payload_json = json{{"kind", "episodes"}, {"ids", ids}}.dump();
    } else if (kind == 2) {
      const GroundEpisode& target =
          *describe_targets[static_cast<std::size_t>(i) % describe_targets.size()];
      DescribeQuery q;
      q.target = DescribeLast{{CondLabel{target.label}}};
      item.dsl = print_query(Query{q});
      item.truth_payload_json =
          json{{"kind", "narration"}, {"text", truth_narration(s, target, eval_now)}}.dump();
    } else {
      const GroundEpisode& root =
          s.episodes.at(s.context_order[static_cast<std::size_t>(i) % s.context_order.size()]);
      const std::string fragment = context_fragment(root);
      WhenQuery q;
      q.conds.push_back(CondLabel{fragment});
      item.dsl = print_query(Query{q});
      json intervals = json::array();
      intervals.push_back(json{{"start", root.start.ms},
                               {"end", root.end ? json(root.end->ms) : json(nullptr)}});
      item.truth_payload_json = json{{"kind", "intervals"}, {"intervals", intervals}}.dump();
    }
    cat1.push_back(std::move(item));
  }

  for (int i = 0; i < n_per_cat; ++i) {
    QueryItem item;
    item.category = QueryCategory::cat2;
    item.eval_now = eval_now;
    const RosterObject& object = s.objects[static_cast<std::size_t>(i) % s.objects.size()];
    if (i % 2 == 0) {
      // the investigation re-observes the object at its roster place, so the
      // roster value is the truth whether or not the base log mentioned it
      WhereIsQuery q;
      q.entity = object.id;
      item.dsl = print_query(Query{q});
      item.truth_payload_json = json{{"kind", "location"}, {"value", object.place}}.dump();
    } else {
      const std::vector<Timestamp> times = truth_state_times(s, object.id, "location");
      Timestamp at;
      if (times.size() >= 2) {
        at = Timestamp{(times[times.size() - 2].ms + times.back().ms) / 2};
      } else {
        at = Timestamp{times.empty() ? s.end_time.ms : times.front().ms + 1};
      }
      StateOfQuery q;
      q.entity = object.id;
      q.field = "location";
      q.at = at;
      item.dsl = print_query(Query{q});
      auto value = truth_state(s, object.id, "location", at);
      json fields = json::array();
      if (value) fields.push_back(json{{"field", "location"}, {"value", *value}});
      item.truth_payload_json = json{{"kind", "state"}, {"fields", fields}}.dump();
    }
    cat2.push_back(std::move(item));
  }

  for (int i = 0; i < n_per_cat; ++i) {
    QueryItem item;
    item.category = QueryCategory::cat3;
    item.eval_now = eval_now;
    const RosterPerson& person = s.people[static_cast<std::size_t>(i) % s.people.size()];
    const char* field = i % 3 == 0 ? "age" : (i % 3 == 1 ? "location" : "clothes");
    if (std::string(field) == "location") {
      WhereIsQuery q;
      q.entity = person.id;
      item.dsl = print_query(Query{q});
      item.truth_payload_json = json{{"kind", "location"}, {"value", person.room}}.dump();
    } else {
      StateOfQuery q;
      q.entity = person.id;
      q.field = field;
      item.dsl = print_query(Query{q});
      auto value = truth_state(s, person.id, field, eval_now);
      json fields = json::array();
      if (value) fields.push_back(json{{"field", field}, {"value", *value}});
      item.truth_payload_json = json{{"kind", "state"}, {"fields", fields}}.dump();
    }
    cat3.push_back(std::move(item));
  }

  // interleave cat1, cat2, cat3 so any prefix covers the categories evenly
  std::vector<QueryItem> items;
  for (int i = 0; i < n_per_cat; ++i) {
    items.push_back(std::move(cat1[static_cast<std::size_t>(i)]));
    items.push_back(std::move(cat2[static_cast<std::size_t>(i)]));
    items.push_back(std::move(cat3[static_cast<std::size_t>(i)]));
  }

  // fresh events: simulated investigation (Cat2) / interaction (Cat3); each
  // re-asserts roster state, so truths hold under any session subset
  for (std::size_t k = 0; k < items.size(); ++k) {
    QueryItem& item = items[k];
    const Timestamp base{s.end_time.ms + (static_cast<std::int64_t>(k) + 1) * 60000};
    const int i = static_cast<int>(k) / 3;
    if (item.category == QueryCategory::cat2) {
      const RosterObject& object = s.objects[static_cast<std::size_t>(i) % s.objects.size()];
      item.fresh_events =
          investigation_events(s, object.id, object.place, base, static_cast<int>(k) + 1);
    } else if (item.category == QueryCategory::cat3) {
      const RosterPerson& person = s.people[static_cast<std::size_t>(i) % s.people.size()];
      item.fresh_events =
          interaction_events(s, person.id, person.room, base, static_cast<int>(k) + 1);
    }
  }
  return items;
}

std::vector<QueryItem> select_session(const std::vector<QueryItem>& items) {
  std::vector<bool> picked(items.size(), false);
  for (QueryCategory cat : {QueryCategory::cat1, QueryCategory::cat2, QueryCategory::cat3}) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].category == cat && !picked[i]) {
        picked[i] = true;
        break;
      }
    }
  }
  std::size_t chosen = static_cast<std::size_t>(std::count(picked.begin(), picked.end(), true));
  for (std::size_t i = 0; i < items.size() && chosen < 4; ++i) {
    if (!picked[i]) {
      picked[i] = true;
      ++chosen;
    }
  }
  std::vector<QueryItem> session;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (picked[i]) session.push_back(items[i]);
  }
  return session;
}

ScoreReport run_and_score(const Scenario& scenario, const std::vector<QueryItem>& items,
                          const RelevanceParams& params) {
  ScoreReport report;
  report.category_covered = {{"cat1", false}, {"cat2", false}, {"cat3", false}};

  Store store;
  WorkingMemory wm;
  for (const Event& event : scenario.events) ingest_event(wm, store, event);
  consolidate(wm, store, scenario.map, scenario.end_time);

  for (const QueryItem& item : items) {
    QueryScore score;
    score.category = item.category;
    score.dsl = item.dsl;
    try {
      for (const Event& event : item.fresh_events) ingest_event(wm, store, event);
      consolidate(wm, store, scenario.map, item.eval_now);

      const Query query = parse_query(item.dsl);
      const Answer answer = eval_query(query, store, item.eval_now, params);
      score.correct = json::parse(answer_payload_json_text(answer)) ==
                      json::parse(item.truth_payload_json);
      if (answer.empty_result() || answer.supporting.empty()) {
        score.coherent = score.correct;  // nothing to evidence for an empty answer
      } else {
        const EvidenceBundle bundle = assemble(store, answer, scenario.map);
        score.coherent = check_coherence(answer, bundle, store, params).coherent;
      }
    } catch (const Error& e) {
      score.correct = false;
      score.coherent = false;
      score.note = e.what();
    }
    if (score.correct) ++report.correct_count;
    if (score.coherent) ++report.coherent_count;
    if (score.correct && score.coherent) {
      report.category_covered[to_string(item.category)] = true;
    }
    report.queries.push_back(std::move(score));
  }

  report.pass = report.category_covered.at("cat1") && report.category_covered.at("cat2") &&
                report.category_covered.at("cat3");
  return report;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

ScenarioConfig scenario_config_from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  ScenarioConfig cfg;
  try {
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.people = j.value("people", 3);
    cfg.objects = j.value("objects", 5);
    if (j.contains("tests")) cfg.tests = j.at("tests").get<std::vector<std::string>>();
    cfg.map_path = j.value("map", std::string{});
    cfg.emotion_event_rate = j.value("emotion_event_rate", 1.0);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  return cfg;
}

void scenario_config_to_file(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  json j;
  j["seed"] = cfg.seed;
  j["people"] = cfg.people;
  j["objects"] = cfg.objects;
  j["tests"] = cfg.tests;
  j["map"] = cfg.map_path;
  j["emotion_event_rate"] = cfg.emotion_event_rate;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

std::string score_report_json_text(const ScoreReport& report) {
  json j;
  j["categories"] = report.category_covered;
  j["correct"] = report.correct_count;
  j["coherent"] = report.coherent_count;
  j["count"] = report.queries.size();
  j["pass"] = report.pass;
  j["queries"] = json::array();
  for (const QueryScore& score : report.queries) {
    j["queries"].push_back(json{{"category", to_string(score.category)},
                                {"dsl", score.dsl},
                                {"correct", score.correct},
                                {"coherent", score.coherent},
                                {"note", score.note}});
  }
  return j.dump(2) + "\n";
}

void write_query_items(const std::vector<QueryItem>& items, const std::filesystem::path& path) {
  json j = json::array();
  for (const QueryItem& item : items) {
    json fresh = json::array();
    for (const Event& event : item.fresh_events) {
      fresh.push_back(json::parse(event_to_json_line(event)));
    }
    j.push_back(json{{"category", to_string(item.category)},
                     {"dsl", item.dsl},
                     {"truth", json::parse(item.truth_payload_json)},
                     {"fresh_events", fresh},
                     {"eval_now", item.eval_now.ms}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace epilog
