#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args, const std::string& env = "") {
  const std::string command =
      (env.empty() ? std::string() : "env " + env + " ") + EPILOG_BIN + " " + args + " 2>&1";
  std::array<char, 4096> buffer{};
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe)) result.output += buffer.data();
  const int status = pclose(pipe);
  result.exit_code = WEXITSTATUS(status);
  return result;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

const char* kSmallLog = R"({"t":0,"type":"pose","x":3.8,"y":0.2}
{"t":10,"type":"begin","kind":"context","label":"RoboCup, Stage 2, Test: EpLTM"}
{"t":20,"type":"begin","kind":"task","label":"serve breakfast"}
{"t":30,"type":"begin","kind":"capability","subtype":"perception","label":"find the apple"}
{"t":40,"type":"act","verb":"search","args":["apple"]}
{"t":50,"type":"observe","entity":"apple","class":"object","fields":{"location":"kitchen_table"}}
{"t":60,"type":"emotion","group":"joy_trust","intensity":2}
{"t":70,"type":"end"}
{"t":80,"type":"end"}
{"t":90,"type":"end"}
)";

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run("no-such-command").exit_code == 2);
  CHECK(run("").exit_code == 2);
}

TEST_CASE("query before any ingest returns an empty answer with exit 0") {
  TempDir dir("epilog_cli_empty");
  const RunResult result =
      run("--data-dir " + (dir.path / "data").string() + " query \"WHERE-IS apple\" --now 100");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("\"value\": null") != std::string::npos);
}

TEST_CASE("syntax errors exit 1 with the structured error name") {
  TempDir dir("epilog_cli_syntax");
  const RunResult result =
      run("--data-dir " + (dir.path / "data").string() + " query \"WHEN KIND=\"");
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("SyntaxError") != std::string::npos);
}

TEST_CASE("ingest, consolidate, validate, query, report, forget") {
  TempDir dir("epilog_cli_flow");
  const std::string data = "--data-dir " + (dir.path / "data").string() + " ";
  write_file(dir.path / "events.jsonl", kSmallLog);

  const RunResult ingest = run(data + "ingest " + (dir.path / "events.jsonl").string());
  CHECK(ingest.exit_code == 0);
  CHECK(ingest.output.find("ingested 10 events") != std::string::npos);

  const RunResult consolidate = run(data + "consolidate --now 100");
  CHECK(consolidate.exit_code == 0);
  CHECK(consolidate.output.find("\"moved_roots\":1") != std::string::npos);

  const RunResult validate = run(data + "validate");
  CHECK(validate.exit_code == 0);
  CHECK(validate.output.find("\"count\": 0") != std::string::npos);

  const RunResult query = run(data + "query \"WHERE-IS apple\" --now 200");
  CHECK(query.exit_code == 0);
  CHECK(query.output.find("\"value\": \"kitchen_table\"") != std::string::npos);

  const RunResult evidence = run(data + "query \"WHERE-IS apple\" --now 200 --evidence " +
                                 (dir.path / "out").string());
  CHECK(evidence.exit_code == 0);
  CHECK(fs::exists(dir.path / "out" / "bundle.json"));
  CHECK(fs::exists(dir.path / "out" / "map.svg"));

  const RunResult report = run(data + "report 2 " + (dir.path / "report").string() + " --now 200");
  CHECK(report.exit_code == 0);
  CHECK(fs::exists(dir.path / "report" / "bundle.json"));

  // the joy-2 tag floors relevance at 1/3, far above the 0.05 threshold, so
  // even deep in the future nothing falls
  const RunResult keep = run(data + "forget --now 9000000000");
  CHECK(keep.exit_code == 0);
  CHECK(keep.output.find("\"pruned\":[]") != std::string::npos);

  // a neutral subtree does decay away
  write_file(dir.path / "neutral.jsonl",
             R"({"t":200,"type":"begin","kind":"context","label":"ctx2"}
{"t":210,"type":"begin","kind":"task","label":"idle"}
{"t":220,"type":"say","speaker":"robot","text":"nothing happened"}
{"t":230,"type":"end"}
{"t":240,"type":"end"}
)");
  CHECK(run(data + "ingest " + (dir.path / "neutral.jsonl").string()).exit_code == 0);
  CHECK(run(data + "consolidate --now 300").exit_code == 0);
  const RunResult forget = run(data + "forget --now 9000000000");
  CHECK(forget.exit_code == 0);
  CHECK(forget.output.find("\"pruned\":[5]") != std::string::npos);

  const RunResult after = run(data + "validate");
  CHECK(after.output.find("\"count\": 0") != std::string::npos);
}

TEST_CASE("working memory survives separate invocations") {
  TempDir dir("epilog_cli_split");
  const std::string data = "--data-dir " + (dir.path / "data").string() + " ";

  write_file(dir.path / "part1.jsonl",
             R"({"t":0,"type":"pose","x":3.8,"y":0.2}
{"t":10,"type":"begin","kind":"context","label":"ctx"}
{"t":20,"type":"begin","kind":"task","label":"t"}
{"t":30,"type":"say","speaker":"robot","text":"hello"}
)");
  write_file(dir.path / "part2.jsonl",
             R"({"t":40,"type":"end"}
{"t":50,"type":"end"}
)");

  CHECK(run(data + "ingest " + (dir.path / "part1.jsonl").string()).exit_code == 0);
  // nothing closed yet
  const RunResult early = run(data + "consolidate --now 45");
  CHECK(early.output.find("\"moved_roots\":0") != std::string::npos);

  CHECK(run(data + "ingest " + (dir.path / "part2.jsonl").string()).exit_code == 0);
  const RunResult later = run(data + "consolidate --now 60");
  CHECK(later.output.find("\"moved_roots\":1") != std::string::npos);

  const RunResult validate = run(data + "validate");
  CHECK(validate.output.find("\"count\": 0") != std::string::npos);

  SUBCASE("out-of-order events across invocations are rejected") {
    write_file(dir.path / "late.jsonl",
               R"({"t":5,"type":"begin","kind":"context","label":"late"}
)");
    const RunResult rejected = run(data + "ingest " + (dir.path / "late.jsonl").string());
    CHECK(rejected.exit_code == 1);
    CHECK(rejected.output.find("OutOfOrderTimestamp") != std::string::npos);
  }
}

TEST_CASE("EPILOG_DATA_DIR selects the data dir, flag wins over it") {
  TempDir dir("epilog_cli_env");
  const std::string env_dir = (dir.path / "from_env").string();
  const std::string flag_dir = (dir.path / "from_flag").string();
  write_file(dir.path / "events.jsonl", kSmallLog);

  const RunResult via_env = run("ingest " + (dir.path / "events.jsonl").string(),
                                "EPILOG_DATA_DIR=" + env_dir);
  CHECK(via_env.exit_code == 0);
  CHECK(fs::exists(fs::path(env_dir) / "journal.jsonl"));

  const RunResult via_flag = run("--data-dir " + flag_dir + " ingest " +
                                     (dir.path / "events.jsonl").string(),
                                 "EPILOG_DATA_DIR=" + env_dir);
  CHECK(via_flag.exit_code == 0);
  CHECK(fs::exists(fs::path(flag_dir) / "journal.jsonl"));
}

TEST_CASE("a held lock turns away a second process") {
  TempDir dir("epilog_cli_lock");
  const fs::path data = dir.path / "data";
  fs::create_directories(data);
  const int fd = ::open((data / "lock").c_str(), O_CREAT | O_RDWR, 0644);
  REQUIRE(fd >= 0);
  REQUIRE(::flock(fd, LOCK_EX) == 0);

  const RunResult blocked = run("--data-dir " + data.string() + " validate");
  CHECK(blocked.exit_code == 1);
  CHECK(blocked.output.find("locked") != std::string::npos);

  ::flock(fd, LOCK_UN);
  ::close(fd);
  CHECK(run("--data-dir " + data.string() + " validate").exit_code == 0);
}

TEST_CASE("simulate and evaluate") {
  TempDir dir("epilog_cli_harness");
  write_file(dir.path / "scenario.json",
             R"({"seed": 0, "people": 2, "objects": 3, "emotion_event_rate": 1.0})");

  const RunResult simulate = run("simulate " + (dir.path / "scenario.json").string() + " " +
                                 (dir.path / "sim").string());
  CHECK(simulate.exit_code == 0);
  CHECK(fs::exists(dir.path / "sim" / "events.jsonl"));
  CHECK(fs::exists(dir.path / "sim" / "queries.json"));
  CHECK(fs::exists(dir.path / "sim" / "arena.json"));

  const RunResult evaluate = run("evaluate " + (dir.path / "scenario.json").string() + " " +
                                 (dir.path / "eval").string() + " --n-per-cat 2");
  CHECK(evaluate.exit_code == 0);
  CHECK(evaluate.output.find("pass=true") != std::string::npos);
  CHECK(evaluate.output.find("correct=6/6") != std::string::npos);
  std::ifstream score(dir.path / "eval" / "score.json");
  std::string score_text((std::istreambuf_iterator<char>(score)),
                         std::istreambuf_iterator<char>());
  CHECK(score_text.find("\"pass\": true") != std::string::npos);

  SUBCASE("bad scenario config exits 1") {
    write_file(dir.path / "bad.json", R"({"people": 0})");
    const RunResult bad = run("simulate " + (dir.path / "bad.json").string() + " " +
                              (dir.path / "simbad").string());
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("InvalidConfig") != std::string::npos);
  }
}
