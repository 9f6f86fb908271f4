#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "epilog/engine.hpp"
#include "epilog/evidence.hpp"
#include "epilog/harness.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace epilog;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string data_dir;
};

EngineConfig resolve_config(const GlobalOptions& options) {
  EngineConfig cfg;
  if (!options.config_path.empty()) {
    cfg = engine_config_from_file(options.config_path);
  } else if (fs::exists("engine.json")) {
    cfg = engine_config_from_file("engine.json");
  }
  if (const char* env = std::getenv("EPILOG_DATA_DIR"); env && *env) cfg.data_dir = env;
  if (!options.data_dir.empty()) cfg.data_dir = options.data_dir;
  return cfg;
}

std::optional<Timestamp> now_flag(const std::optional<std::int64_t>& value) {
  if (!value) return std::nullopt;
  return Timestamp{*value};
}

json violations_json(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const Violation& v : violations) {
    out.push_back(json{{"kind", to_string(v.kind)}, {"episode", v.episode}, {"detail", v.detail}});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epilog - episodic long-term memory engine"};
  app.require_subcommand(1);

  GlobalOptions options;
  app.add_option("--config", options.config_path, "engine config file (default: ./engine.json)");
  app.add_option("--data-dir", options.data_dir, "data directory (overrides EPILOG_DATA_DIR)");

  // ingest
  std::string events_file;
  auto* ingest_cmd = app.add_subcommand("ingest", "append an event log to working memory");
  ingest_cmd->add_option("events", events_file, "events.jsonl file")->required();

  // consolidate
  std::optional<std::int64_t> consolidate_at;
  auto* consolidate_cmd =
      app.add_subcommand("consolidate", "move closed episodes into the long-term store");
  consolidate_cmd->add_option("--now", consolidate_at, "clock override, ms since epoch");

  // query
  std::string dsl;
  std::string evidence_dir;
  std::optional<std::int64_t> query_at;
  auto* query_cmd = app.add_subcommand("query", "evaluate a query and print the answer as JSON");
  query_cmd->add_option("dsl", dsl, "query text")->required();
  query_cmd->add_option("--evidence", evidence_dir, "write the evidence bundle to this directory");
  query_cmd->add_option("--now", query_at, "clock override, ms since epoch");

  // forget
  std::optional<std::int64_t> forget_at;
  auto* forget_cmd = app.add_subcommand("forget", "prune low-relevance episodes");
  forget_cmd->add_option("--now", forget_at, "clock override, ms since epoch");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check store invariants");

  // report
  std::int64_t report_id = 0;
  std::string report_dir;
  std::optional<std::int64_t> report_at;
  auto* report_cmd = app.add_subcommand("report", "write the evidence report for an episode");
  report_cmd->add_option("episode", report_id, "episode id")->required();
  report_cmd->add_option("out", report_dir, "output directory")->required();
  report_cmd->add_option("--now", report_at, "clock override, ms since epoch");

  // simulate
  std::string sim_scenario, sim_out;
  int sim_n_per_cat = 4;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a competition scenario");
  simulate_cmd->add_option("scenario", sim_scenario, "scenario config JSON")->required();
  simulate_cmd->add_option("out", sim_out, "output directory")->required();
  simulate_cmd->add_option("--n-per-cat", sim_n_per_cat, "queries per category");

  // evaluate
  std::string eval_scenario, eval_out;
  int eval_n_per_cat = 4;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "run the full competition rehearsal");
  evaluate_cmd->add_option("scenario", eval_scenario, "scenario config JSON")->required();
  evaluate_cmd->add_option("out", eval_out, "output directory")->required();
  evaluate_cmd->add_option("--n-per-cat", eval_n_per_cat, "queries per category");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate_cmd) {
      const ScenarioConfig cfg = scenario_config_from_file(sim_scenario);
      const Scenario scenario = generate_scenario(cfg);
      const std::vector<QueryItem> items = generate_queries(scenario, sim_n_per_cat);
      fs::create_directories(sim_out);
      write_event_log(scenario.events, fs::path(sim_out) / "events.jsonl");
      write_query_items(items, fs::path(sim_out) / "queries.json");
      save_map(scenario.map, fs::path(sim_out) / "arena.json");
      scenario_config_to_file(cfg, fs::path(sim_out) / "scenario.json");
      std::cout << "scenario seed " << cfg.seed << ": " << scenario.events.size() << " events, "
                << items.size() << " queries\n";
      return 0;
    }

    if (*evaluate_cmd) {
      const ScenarioConfig cfg = scenario_config_from_file(eval_scenario);
      const Scenario scenario = generate_scenario(cfg);
      const std::vector<QueryItem> items = generate_queries(scenario, eval_n_per_cat);
      RelevanceParams params = resolve_config(options).relevance;
      const ScoreReport report = run_and_score(scenario, items, params);
      fs::create_directories(eval_out);
      write_event_log(scenario.events, fs::path(eval_out) / "events.jsonl");
      write_query_items(items, fs::path(eval_out) / "queries.json");
      {
        std::ofstream out(fs::path(eval_out) / "score.json", std::ios::binary | std::ios::trunc);
        out << score_report_json_text(report);
      }
      std::cout << "pass=" << (report.pass ? "true" : "false") << " correct="
                << report.correct_count << "/" << report.queries.size() << " coherent="
                << report.coherent_count << "/" << report.queries.size() << "\n";
      return 0;
    }

    EngineConfig cfg = resolve_config(options);

    if (*ingest_cmd) {
      Session session(cfg);
      const std::size_t count = session.ingest_file(events_file);
      std::cout << "ingested " << count << " events\n";
      return 0;
    }
    if (*consolidate_cmd) {
      Session session(cfg);
      const ConsolidateStats stats =
          session.consolidate_now(session.now(now_flag(consolidate_at)));
      std::cout << json{{"moved_roots", stats.moved_roots},
                        {"moved_episodes", stats.moved_episodes}}
                       .dump()
                << "\n";
      return 0;
    }
    if (*query_cmd) {
      Session session(cfg);
      const Answer answer = session.query(dsl, session.now(now_flag(query_at)));
      std::cout << answer_json_text(answer);
      if (!evidence_dir.empty()) {
        const EvidenceBundle bundle = assemble(session.store(), answer, session.map());
        write_report(bundle, evidence_dir);
      }
      return 0;
    }
    if (*forget_cmd) {
      Session session(cfg);
      const std::vector<EpisodeId> pruned = session.forget_now(session.now(now_flag(forget_at)));
      std::cout << json{{"pruned", pruned}}.dump() << "\n";
      return 0;
    }
    if (*validate_cmd) {
      Session session(cfg);
      const std::vector<Violation> violations = session.validate_store();
      std::cout << json{{"violations", violations_json(violations)},
                        {"count", violations.size()}}
                       .dump(2)
                << "\n";
      return 0;
    }
    if (*report_cmd) {
      Session session(cfg);
      const Timestamp now = session.now(now_flag(report_at));
      const Answer answer =
          session.query("DESCRIBE " + std::to_string(report_id), now);
      const EvidenceBundle bundle = assemble(session.store(), answer, session.map());
      write_report(bundle, report_dir);
      std::cout << "report written to " << report_dir << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
