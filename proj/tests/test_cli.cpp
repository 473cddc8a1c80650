// End-to-end checks of the shardmap command-line surface. argv[1] is the
// path to the built binary; everything runs through /bin/sh.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "shardmap/docstore.hpp"
#include "shardmap/shardcore.hpp"

using namespace shardmap;

namespace {

int g_failures = 0;

#define REQUIRE(cond)                                                      \
  do {                                                                     \
    if (!(cond)) {                                                         \
      std::printf("FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond);          \
      ++g_failures;                                                        \
    }                                                                      \
  } while (0)

std::string g_cli;
const std::string kDir = "/tmp/shardmap_cli_test";

int exit_code(const std::string& args) {
  int status = std::system((g_cli + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string capture(const std::string& args, int* code = nullptr) {
  std::string cmd = g_cli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  int status = pclose(pipe);
  if (code) *code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

void check_exit_codes() {
  REQUIRE(exit_code("--help > /dev/null") == 0);
  REQUIRE(exit_code("bench --help > /dev/null") == 0);
  REQUIRE(exit_code("bench --shards 0 2> /dev/null") == 2);
  REQUIRE(exit_code("bench --rps -3 2> /dev/null") == 2);
  REQUIRE(exit_code("bench --retry sometimes 2> /dev/null") == 2);
  REQUIRE(exit_code("no-such-command 2> /dev/null") == 2);
  REQUIRE(exit_code("2> /dev/null") == 2);  // a subcommand is required
  REQUIRE(exit_code("sweep --votes 10 2> /dev/null") == 2);  // missing list
  REQUIRE(exit_code("compact --store /nonexistent --spec-file /nonexistent"
                    " --owner 42 2> /dev/null") == 1);
}

void check_bench() {
  int code = 0;
  std::string out = capture(
      "bench --strategy static --shards 8 --questions 4 --votes 200"
      " --retry until-success --seed 5 --out " + kDir + "/bench.csv", &code);
  REQUIRE(code == 0);
  REQUIRE(out.find("strategy,") != std::string::npos);  // header on stdout
  REQUIRE(out.find("static,8,") != std::string::npos);

  std::string csv = read_file(kDir + "/bench.csv");
  REQUIRE(line_count(csv) == 2);  // header + one row
  REQUIRE(csv.find("static,8,until_success,200,200,0,0.000") !=
          std::string::npos);

  // Same flags, JSON output: the echoed config survives a round trip.
  capture("bench --strategy static --shards 8 --questions 4 --votes 200"
          " --retry until-success --seed 5 --out " + kDir + "/bench.json",
          &code);
  REQUIRE(code == 0);
  auto j = nlohmann::json::parse(read_file(kDir + "/bench.json"));
  REQUIRE(j["issued"] == 200);
  REQUIRE(j["succeeded"] == 200);
  REQUIRE(j["config"]["shards"] == 8);
  REQUIRE(j["config"]["seed"] == 5);
}

void check_seed_env() {
  int code = 0;
  std::string flag = capture(
      "bench --strategy naive --questions 2 --votes 50 --seed 77", &code);
  REQUIRE(code == 0);
  // popen goes through sh, so prefix the env assignment directly.
  FILE* pipe = popen(("SHARDMAP_SEED=77 " + g_cli +
                      " bench --strategy naive --questions 2 --votes 50 2>&1")
                         .c_str(),
                     "r");
  REQUIRE(pipe != nullptr);
  std::string via_env;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) via_env.append(buf, n);
  pclose(pipe);
  REQUIRE(via_env == flag);
}

void check_sweep() {
  int code = 0;
  std::string out = capture(
      "sweep --shards-list 1,2,4,8,16 --strategy static --questions 4"
      " --votes 200 --retry none --seed 3 --out " + kDir + "/sweep.csv",
      &code);
  REQUIRE(code == 0);
  std::string csv = read_file(kDir + "/sweep.csv");
  REQUIRE(line_count(csv) == 6);  // header + 5 shard counts
  REQUIRE(csv.find("static,1,") != std::string::npos);
  REQUIRE(csv.find("static,16,") != std::string::npos);

  // Duplicates are dropped with a warning, not run twice.
  out = capture("sweep --shards-list 4,4,8 --questions 2 --votes 50 --seed 3"
                " --out " + kDir + "/dup.csv", &code);
  REQUIRE(code == 0);
  REQUIRE(out.find("duplicate shard count 4") != std::string::npos);
  REQUIRE(line_count(read_file(kDir + "/dup.csv")) == 3);

  // A sweep row matches the standalone bench run with the same flags.
  capture("bench --shards 8 --strategy static --questions 4 --votes 200"
          " --retry none --seed 3 --out " + kDir + "/row.csv", &code);
  REQUIRE(code == 0);
  std::string row = read_file(kDir + "/row.csv");
  std::string data_row = row.substr(row.find('\n') + 1);
  REQUIRE(csv.find(data_row) != std::string::npos);
}

void check_demo() {
  int code = 0;
  std::string out = capture("demo", &code);
  REQUIRE(code == 0);
  REQUIRE(out.find("votes(query) = 76") != std::string::npos);
  REQUIRE(out.find("votes(query) = 78") != std::string::npos);
  REQUIRE(out.find("\"kind\":\"Question\"") != std::string::npos);
}

void check_compact() {
  // Build a snapshot with three dynamic shards (76, 1, 1) in-process.
  ShardSpec spec;
  spec.property = "votes";
  spec.neutral = 0;
  spec.fold = "sum-int";
  spec.mode = ShardMode::dynamic;

  Store store;
  Key owner = Key::root("Question", "42");
  for (std::int64_t v : {76, 1, 1}) dynamic_shard_append(store, owner, v, spec);
  std::ofstream(kDir + "/store.json") << store.dump().dump(2);
  std::ofstream(kDir + "/spec.json") << spec.to_json().dump(2);

  int code = 0;
  std::string out = capture(
      "compact --store " + kDir + "/store.json --spec-file " + kDir +
      "/spec.json --owner 42 --out " + kDir + "/compacted.json", &code);
  REQUIRE(code == 0);
  REQUIRE(out.find("1 shard(s), total 78") != std::string::npos);
  REQUIRE(!read_file(kDir + "/store.json").empty());  // input untouched

  Store after;
  after.load_snapshot(nlohmann::json::parse(read_file(kDir +
                                                      "/compacted.json")));
  auto shards = shards_of(after, owner, spec, /*consistent=*/true);
  REQUIRE(shards.size() == 1);
  REQUIRE(fold_all(shards, spec) == 78);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <path-to-shardmap-cli>\n";
    return 2;
  }
  g_cli = argv[1];
  std::system(("mkdir -p " + kDir).c_str());

  check_exit_codes();
  check_bench();
  check_seed_env();
  check_sweep();
  check_demo();
  check_compact();

  if (g_failures > 0) {
    std::printf("%d check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all CLI checks passed\n");
  return 0;
}
