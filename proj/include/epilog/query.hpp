#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "epilog/relevance.hpp"
#include "epilog/store.hpp"

namespace epilog {

// ---------------------------------------------------------------------------
// Query AST
// ---------------------------------------------------------------------------

struct CondKind {
  EpisodeLevel level = EpisodeLevel::task;
  bool operator==(const CondKind&) const = default;
};

struct CondLabel {
  std::string substring;
  bool operator==(const CondLabel&) const = default;
};

struct CondLocation {
  std::string name;
  bool operator==(const CondLocation&) const = default;
};

struct CondEntity {
  std::string id;
  bool operator==(const CondEntity&) const = default;
};

struct CondEmotion {
  EmotionGroup group = EmotionGroup::joy_trust;
  std::optional<int> min_intensity;  // EMOTION=g matches any tag of the group
  bool operator==(const CondEmotion&) const = default;
};

// Satisfied when the episode interval overlaps [from, to) (half-open).
struct CondDuring {
  Timestamp from;
  Timestamp to;
  bool operator==(const CondDuring&) const = default;
};

using Condition =
    std::variant<CondKind, CondLabel, CondLocation, CondEntity, CondEmotion, CondDuring>;

enum class OrderBy { time, relevance };

struct FindEpisodesQuery {
  std::vector<Condition> conds;
  OrderBy order = OrderBy::time;
  std::optional<std::int64_t> limit;
  bool operator==(const FindEpisodesQuery&) const = default;
};

struct WhenQuery {
  std::vector<Condition> conds;
  bool operator==(const WhenQuery&) const = default;
};

struct WhereIsQuery {
  std::string entity;
  std::optional<Timestamp> at;
  bool operator==(const WhereIsQuery&) const = default;
};

struct StateOfQuery {
  std::string entity;
  std::optional<std::string> field;
  std::optional<Timestamp> at;
  bool operator==(const StateOfQuery&) const = default;
};

struct FeelingQuery {
  std::vector<Condition> conds;
  bool operator==(const FeelingQuery&) const = default;
};

struct DescribeLast {
  std::vector<Condition> conds;
  bool operator==(const DescribeLast&) const = default;
};

struct DescribeQuery {
  std::variant<EpisodeId, DescribeLast> target;
  bool operator==(const DescribeQuery&) const = default;
};

using Query = std::variant<FindEpisodesQuery, WhenQuery, WhereIsQuery, StateOfQuery, FeelingQuery,
                           DescribeQuery>;

// ---------------------------------------------------------------------------
// Parsing / printing
// ---------------------------------------------------------------------------

class ParseError : public Error {
public:
  ParseError(std::size_t position, std::string expected)
      : Error(Errc::syntax_error,
              "at position " + std::to_string(position) + ": expected " + expected),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

private:
  std::size_t position_;
  std::string expected_;
};

// Keywords are case-insensitive; the error position is the byte offset of the
// offending token (input length when the input ends too early).
Query parse_query(const std::string& text);

// Canonical text; parse_query(print_query(q)) == q.
std::string print_query(const Query& q);

// ---------------------------------------------------------------------------
// Answers
// ---------------------------------------------------------------------------

struct StateEntry {
  std::string field;
  std::string value;
  bool operator==(const StateEntry&) const = default;
};

struct FeelingEntry {
  EmotionTag tag;
  std::string phrase;
  bool operator==(const FeelingEntry&) const = default;
};

using AnswerPayload = std::variant<std::vector<EpisodeId>,     // FindEpisodes
                                   std::vector<TimeInterval>,  // When
                                   std::optional<std::string>, // WhereIs
                                   std::vector<StateEntry>,    // StateOf
                                   std::vector<FeelingEntry>,  // Feeling
                                   std::string>;               // Describe narration

// Every claim in the payload is backed by at least one supporting episode;
// the query and evaluation time ride along so evidence checks can re-derive
// the payload later.
struct Answer {
  Query query;
  Timestamp eval_now;
  AnswerPayload payload;
  std::vector<EpisodeId> supporting;   // sorted, unique
  std::optional<EpisodeId> primary;    // anchor episode for evidence

  bool empty_result() const;
};

Answer eval_query(const Query& q, const Store& store, Timestamp now, const RelevanceParams& p);

// Canonical JSON text of just the payload (compared by scorers and the
// coherence checker) and of the whole answer (printed by the CLI).
std::string answer_payload_json_text(const Answer& answer);
std::string answer_json_text(const Answer& answer);

// ---------------------------------------------------------------------------
// Narration
// ---------------------------------------------------------------------------

// Story-style rendering of a closed episode: child clauses joined by
// ", then ", transposed runs by " while ", closing with the relative-time
// phrase of the episode start.
std::string narrate(const Store& store, EpisodeId id, Timestamp now);

// "2 hours ago", "less than a minute ago"; largest unit with floor >= 1
// (month = 30 days, year = 365 days). Throws FutureTimestamp.
std::string describe_time(Timestamp t, Timestamp now);

}  // namespace epilog
