#include <algorithm>
#include <cctype>

#include "epilog/query.hpp"

namespace epilog {

namespace {

enum class TokKind { word, integer, string, equals, tilde, ge, lbracket, rbracket, comma, eof };

struct Token {
  TokKind kind = TokKind::eof;
  std::string text;       // word (original case) or string body
  std::int64_t number = 0;
  std::size_t pos = 0;
};

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class Lexer {
public:
  explicit Lexer(const std::string& text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text_.size()) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::int64_t value = 0;
        while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]))) {
          value = value * 10 + (text_[i] - '0');
          ++i;
        }
        if (i < text_.size() && is_word_char(text_[i])) {
          throw ParseError(start, "an integer");
        }
        tokens.push_back({TokKind::integer, "", value, start});
      } else if (is_word_char(c)) {
        while (i < text_.size() && is_word_char(text_[i])) ++i;
        tokens.push_back({TokKind::word, text_.substr(start, i - start), 0, start});
      } else if (c == '"') {
        ++i;
        const std::size_t body = i;
        while (i < text_.size() && text_[i] != '"') ++i;
        if (i == text_.size()) throw ParseError(start, "a closing '\"'");
        tokens.push_back({TokKind::string, text_.substr(body, i - body), 0, start});
        ++i;
      } else if (c == '=') {
        tokens.push_back({TokKind::equals, "=", 0, start});
        ++i;
      } else if (c == '~') {
        tokens.push_back({TokKind::tilde, "~", 0, start});
        ++i;
      } else if (c == '>' && i + 1 < text_.size() && text_[i + 1] == '=') {
        tokens.push_back({TokKind::ge, ">=", 0, start});
        i += 2;
      } else if (c == '[') {
        tokens.push_back({TokKind::lbracket, "[", 0, start});
        ++i;
      } else if (c == ']') {
        tokens.push_back({TokKind::rbracket, "]", 0, start});
        ++i;
      } else if (c == ',') {
        tokens.push_back({TokKind::comma, ",", 0, start});
        ++i;
      } else {
        throw ParseError(start, "a query token");
      }
    }
    tokens.push_back({TokKind::eof, "", 0, text_.size()});
    return tokens;
  }

private:
  const std::string& text_;
};

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Query parse() {
    Query q = parse_query_body();
    expect_eof();
    return q;
  }

private:
  const Token& peek() const { return tokens_[index_]; }
  const Token& advance() { return tokens_[index_++]; }

  bool peek_keyword(const char* kw) const {
    return peek().kind == TokKind::word && lower(peek().text) == kw;
  }

  bool accept_keyword(const char* kw) {
    if (!peek_keyword(kw)) return false;
    ++index_;
    return true;
  }

  void expect_keyword(const char* kw) {
    if (!accept_keyword(kw)) throw ParseError(peek().pos, std::string("'") + kw + "'");
  }

  std::string expect_ident(const char* what) {
    if (peek().kind != TokKind::word) throw ParseError(peek().pos, what);
    return advance().text;
  }

  std::int64_t expect_integer(const char* what) {
    if (peek().kind != TokKind::integer) throw ParseError(peek().pos, what);
    return advance().number;
  }

  void expect(TokKind kind, const char* what) {
    if (peek().kind != kind) throw ParseError(peek().pos, what);
    ++index_;
  }

  void expect_eof() {
    if (peek().kind != TokKind::eof) throw ParseError(peek().pos, "end of query");
  }

  Query parse_query_body() {
    if (accept_keyword("find")) {
      expect_keyword("episodes");
      FindEpisodesQuery q;
      if (accept_keyword("where")) q.conds = parse_conds();
      if (accept_keyword("order")) {
        expect_keyword("by");
        if (accept_keyword("time")) {
          q.order = OrderBy::time;
        } else if (accept_keyword("relevance")) {
          q.order = OrderBy::relevance;
        } else {
          throw ParseError(peek().pos, "'TIME' or 'RELEVANCE'");
        }
      }
      if (accept_keyword("limit")) q.limit = expect_integer("a limit count");
      return q;
    }
    if (accept_keyword("when")) {
      WhenQuery q;
      q.conds = parse_conds();
      return q;
    }
    if (accept_keyword("where-is")) {
      WhereIsQuery q;
      q.entity = expect_ident("an entity id");
      if (accept_keyword("at")) q.at = Timestamp{expect_integer("a timestamp")};
      return q;
    }
    if (accept_keyword("state")) {
      expect_keyword("of");
      StateOfQuery q;
      q.entity = expect_ident("an entity id");
      if (accept_keyword("field")) q.field = expect_ident("a field name");
      if (accept_keyword("at")) q.at = Timestamp{expect_integer("a timestamp")};
      return q;
    }
    if (accept_keyword("feeling")) {
      FeelingQuery q;
      if (accept_keyword("where")) q.conds = parse_conds();
      return q;
    }
    if (accept_keyword("describe")) {
      DescribeQuery q;
      if (peek().kind == TokKind::integer) {
        q.target = static_cast<EpisodeId>(advance().number);
      } else if (accept_keyword("last")) {
        DescribeLast last;
        if (accept_keyword("where")) last.conds = parse_conds();
        q.target = std::move(last);
      } else {
        throw ParseError(peek().pos, "an episode id or 'LAST'");
      }
      return q;
    }
    throw ParseError(peek().pos,
                     "'FIND', 'WHEN', 'WHERE-IS', 'STATE', 'FEELING' or 'DESCRIBE'");
  }

  std::vector<Condition> parse_conds() {
    std::vector<Condition> conds;
    conds.push_back(parse_cond());
    while (accept_keyword("and")) conds.push_back(parse_cond());
    return conds;
  }

  Condition parse_cond() {
    if (accept_keyword("kind")) {
      expect(TokKind::equals, "'='");
      const Token& tok = peek();
      if (tok.kind != TokKind::word) throw ParseError(tok.pos, "an episode kind");
      auto level = episode_level_from_string(lower(tok.text));
      if (!level) throw ParseError(tok.pos, "'context', 'task' or 'capability'");
      ++index_;
      return CondKind{*level};
    }
    if (accept_keyword("label")) {
      expect(TokKind::tilde, "'~'");
      if (peek().kind != TokKind::string) throw ParseError(peek().pos, "a quoted substring");
      return CondLabel{advance().text};
    }
    if (accept_keyword("location")) {
      expect(TokKind::equals, "'='");
      return CondLocation{expect_ident("a location name")};
    }
    if (accept_keyword("entity")) {
      expect(TokKind::equals, "'='");
      return CondEntity{expect_ident("an entity id")};
    }
    if (accept_keyword("emotion")) {
      expect(TokKind::equals, "'='");
      const Token& tok = peek();
      if (tok.kind != TokKind::word) throw ParseError(tok.pos, "an emotion group");
      auto group = emotion_group_from_string(lower(tok.text));
      if (!group) throw ParseError(tok.pos, "an emotion group");
      ++index_;
      CondEmotion cond{*group, std::nullopt};
      if (peek().kind == TokKind::ge) {
        ++index_;
        cond.min_intensity = static_cast<int>(expect_integer("an intensity level"));
      }
      return cond;
    }
    if (accept_keyword("during")) {
      expect(TokKind::lbracket, "'['");
      const std::int64_t from = expect_integer("a timestamp");
      expect(TokKind::comma, "','");
      const std::int64_t to = expect_integer("a timestamp");
      expect(TokKind::rbracket, "']'");
      return CondDuring{Timestamp{from}, Timestamp{to}};
    }
    throw ParseError(peek().pos,
                     "'KIND', 'LABEL', 'LOCATION', 'ENTITY', 'EMOTION' or 'DURING'");
  }

  std::vector<Token> tokens_;
  std::size_t index_ = 0;
};

std::string print_cond(const Condition& cond) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, CondKind>) {
          return std::string("KIND=") + to_string(c.level);
        } else if constexpr (std::is_same_v<T, CondLabel>) {
          return "LABEL~\"" + c.substring + "\"";
        } else if constexpr (std::is_same_v<T, CondLocation>) {
          return "LOCATION=" + c.name;
        } else if constexpr (std::is_same_v<T, CondEntity>) {
          return "ENTITY=" + c.id;
        } else if constexpr (std::is_same_v<T, CondEmotion>) {
          std::string out = std::string("EMOTION=") + to_string(c.group);
          if (c.min_intensity) out += ">=" + std::to_string(*c.min_intensity);
          return out;
        } else {
          return "DURING [" + std::to_string(c.from.ms) + "," + std::to_string(c.to.ms) + "]";
        }
      },
      cond);
}

std::string print_conds(const std::vector<Condition>& conds) {
  std::string out;
  for (std::size_t i = 0; i < conds.size(); ++i) {
    if (i > 0) out += " AND ";
    out += print_cond(conds[i]);
  }
  return out;
}

}  // namespace

Query parse_query(const std::string& text) {
  return Parser(Lexer(text).run()).parse();
}

std::string print_query(const Query& q) {
  return std::visit(
      [](const auto& query) -> std::string {
        using T = std::decay_t<decltype(query)>;
        if constexpr (std::is_same_v<T, FindEpisodesQuery>) {
          std::string out = "FIND EPISODES";
          if (!query.conds.empty()) out += " WHERE " + print_conds(query.conds);
          if (query.order == OrderBy::relevance) out += " ORDER BY RELEVANCE";
          if (query.limit) out += " LIMIT " + std::to_string(*query.limit);
          return out;
        } else if constexpr (std::is_same_v<T, WhenQuery>) {
          return "WHEN " + print_conds(query.conds);
        } else if constexpr (std::is_same_v<T, WhereIsQuery>) {
          std::string out = "WHERE-IS " + query.entity;
          if (query.at) out += " AT " + std::to_string(query.at->ms);
          return out;
        } else if constexpr (std::is_same_v<T, StateOfQuery>) {
          std::string out = "STATE OF " + query.entity;
          if (query.field) out += " FIELD " + *query.field;
          if (query.at) out += " AT " + std::to_string(query.at->ms);
          return out;
        } else if constexpr (std::is_same_v<T, FeelingQuery>) {
          std::string out = "FEELING";
          if (!query.conds.empty()) out += " WHERE " + print_conds(query.conds);
          return out;
        } else {
          if (const auto* id = std::get_if<EpisodeId>(&query.target)) {
            return "DESCRIBE " + std::to_string(*id);
          }
          const auto& last = std::get<DescribeLast>(query.target);
          std::string out = "DESCRIBE LAST";
          if (!last.conds.empty()) out += " WHERE " + print_conds(last.conds);
          return out;
        }
      },
      q);
}

}  // namespace epilog
