#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shardmap/docstore.hpp"
#include "shardmap/mapper.hpp"
#include "shardmap/shardcore.hpp"
#include "shardmap/simharness.hpp"

namespace {

using namespace shardmap;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SHARDMAP_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 1;
}

struct BenchFlags {
  std::string strategy = "static";
  int shards = 16;
  int questions = 16;
  int votes = 2000;
  double rps = 75.0;
  std::string retry = "none";
  double backoff_ms = 50.0;
  double jitter = 0.5;
  std::uint64_t seed = default_seed();
  double commit_service_ms = 150.0;
  double staleness_ms = 500.0;
  std::string out;
  std::string format;  // json|csv; inferred from --out extension if empty
};

void add_bench_flags(CLI::App& cmd, BenchFlags& f) {
  cmd.add_option("--strategy", f.strategy, "Sharding strategy")
      ->check(CLI::IsMember({"naive", "static", "dynamic", "group"}));
  cmd.add_option("--shards", f.shards, "Shard / replica-group count")
      ->check(CLI::Range(1, 1 << 20));
  cmd.add_option("--questions", f.questions, "Number of questions")
      ->check(CLI::Range(1, 1 << 20));
  cmd.add_option("--votes", f.votes, "Total votes issued")
      ->check(CLI::Range(0, 1 << 28));
  cmd.add_option("--rps", f.rps, "Vote arrivals per virtual second")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--retry", f.retry, "Transaction retry mode")
      ->check(CLI::IsMember({"none", "until-success"}));
  cmd.add_option("--backoff-ms", f.backoff_ms, "Fixed retry backoff (virtual ms)")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--jitter", f.jitter, "Backoff jitter fraction")
      ->check(CLI::Range(0.0, 1.0));
  cmd.add_option("--seed", f.seed, "RNG seed (or env SHARDMAP_SEED)");
  cmd.add_option("--commit-service-ms", f.commit_service_ms,
                 "Virtual time a commit occupies its entity group")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--staleness-ms", f.staleness_ms,
                 "Query visibility delay (virtual ms)")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--out", f.out, "Write the report to this file");
  cmd.add_option("--format", f.format, "Report file format")
      ->check(CLI::IsMember({"json", "csv"}));
}

WorkloadConfig to_config(const BenchFlags& f) {
  WorkloadConfig cfg;
  cfg.strategy = strategy_from_name(f.strategy);
  cfg.shards = f.shards;
  cfg.questions = f.questions;
  cfg.total_votes = f.votes;
  cfg.arrival_rate = f.rps;
  if (f.retry == "until-success")
    cfg.retry = RetryPolicy::until_success_fixed(virtual_ms(f.backoff_ms),
                                                 f.jitter);
  cfg.seed = f.seed;
  cfg.store.commit_service_time = virtual_ms(f.commit_service_ms);
  cfg.store.query_staleness_window = virtual_ms(f.staleness_ms);
  return cfg;
}

std::string pick_format(const BenchFlags& f) {
  if (!f.format.empty()) return f.format;
  if (f.out.size() >= 4 && f.out.substr(f.out.size() - 4) == ".csv")
    return "csv";
  return "json";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StoreError("cannot write " + path);
  out << content;
}

void print_table(std::ostream& os, const std::vector<WorkloadReport>& reports) {
  os << WorkloadReport::csv_header() << "\n";
  for (const auto& r : reports) os << r.csv_row() << "\n";
}

int cmd_bench(const BenchFlags& f) {
  WorkloadReport report = run_workload(to_config(f));
  print_table(std::cout, {report});
  if (!f.out.empty()) {
    if (pick_format(f) == "csv")
      write_file(f.out, WorkloadReport::csv_header() + "\n" + report.csv_row() +
                            "\n");
    else
      write_file(f.out, report.to_json().dump(2) + "\n");
  }
  return 0;
}

int cmd_sweep(const BenchFlags& f, const std::vector<int>& shards_list) {
  std::vector<int> counts;
  std::set<int> seen;
  for (int n : shards_list) {
    if (!seen.insert(n).second) {
      std::cerr << "warning: duplicate shard count " << n << " ignored\n";
      continue;
    }
    counts.push_back(n);
  }
  std::vector<WorkloadConfig> configs;
  for (int n : counts) {
    BenchFlags each = f;
    each.shards = n;
    configs.push_back(to_config(each));
  }
  std::vector<WorkloadReport> reports = sweep(configs);
  print_table(std::cout, reports);
  if (!f.out.empty()) {
    if (pick_format(f) == "json") {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : reports) arr.push_back(r.to_json());
      write_file(f.out, arr.dump(2) + "\n");
    } else {
      std::string csv = WorkloadReport::csv_header() + "\n";
      for (const auto& r : reports) csv += r.csv_row() + "\n";
      write_file(f.out, csv);
    }
  }
  return 0;
}

void print_entities(std::ostream& os, Store& store) {
  for (const auto& kind : {"Question", "Shard"})
    for (const Entity& e : store.scan(kind)) os << e.to_json().dump() << "\n";
}

PropertyValue query_fold(Store& store, const Key& owner,
                         const ShardSpec& spec) {
  // The aggregation an application would run: fetch the shards with a
  // kind query (eventually consistent), then fold programmatically.
  auto shards = store.query(
      spec.shard_kind,
      {Filter{owner_ref_property(owner), Comparator::eq, owner.id}});
  return fold_all(shards, spec);
}

// Replays the hot-question walkthrough: a question with 76 votes is split
// over three shards, two concurrent votes land on distinct shards, kind
// queries drift through the stale totals before converging.
int cmd_demo() {
  Store store;
  ShardSpec spec;
  spec.property = "votes";
  spec.neutral = 0;
  spec.fold = "sum-int";
  spec.mode = ShardMode::static_n;
  spec.shard_count = 3;

  Entity question{Key::root("Question", "42"),
                  {{"question", "How do you plan to improve public education?"},
                   {"author", "Phil R"},
                   {"responses",
                    {{{"response",
                       "i have earned $1048 dollars just by ad clicks"},
                      {"author", "twodollarclick"}}}},
                   {"votes", 76}}};
  auto [main, shards] = static_shard_init(question, spec);
  store.put(main);
  for (const Entity& s : shards) store.put(s);
  store.advance_time(store.config().query_staleness_window +
                     store.config().commit_service_time);

  std::cout << "-- sharded layout (3 shards, shard 1 holds the original "
               "value) --\n";
  print_entities(std::cout, store);
  std::cout << "votes(query) = " << query_fold(store, question.key, spec)
            << "\n\n";

  // Two concurrent votes on distinct shards: both commit.
  auto vote_on = [&](const std::string& shard_id) {
    Key k = Key::root(spec.shard_kind, shard_id);
    Transaction tx = store.begin_transaction({k});
    Entity shard = *tx.read(k);
    shard.properties[spec.shard_property()] =
        shard.properties[spec.shard_property()].get<std::int64_t>() + 1;
    tx.write(shard);
    store.commit(tx);
  };
  vote_on("42-2");
  store.advance_time(virtual_ms(120));
  vote_on("42-3");

  std::cout << "-- after two concurrent votes (strongly consistent view) --\n";
  print_entities(std::cout, store);
  std::cout << "votes(query) = " << query_fold(store, question.key, spec)
            << "  (stale)\n";

  store.advance_time(store.config().query_staleness_window - virtual_ms(100));
  std::cout << "votes(query) = " << query_fold(store, question.key, spec)
            << "  (stale)\n";

  store.advance_time(virtual_ms(200));
  std::cout << "votes(query) = " << query_fold(store, question.key, spec)
            << "  (consistent)\n";
  return 0;
}

int cmd_compact(const std::string& store_path, const std::string& spec_path,
                const std::string& owner_id, const std::string& owner_kind,
                const std::string& out_path) {
  std::ifstream store_in(store_path);
  if (!store_in) throw StoreError("cannot read " + store_path);
  std::ifstream spec_in(spec_path);
  if (!spec_in) throw StoreError("cannot read " + spec_path);

  Store store;
  store.load_snapshot(nlohmann::json::parse(store_in));
  ShardSpec spec = ShardSpec::from_json(nlohmann::json::parse(spec_in));
  Key owner = Key::root(owner_kind, owner_id);

  const PropertyValue before =
      fold_all(shards_of(store, owner, spec, /*consistent=*/true), spec);
  compact(store, owner, spec);
  const auto after_shards = shards_of(store, owner, spec, /*consistent=*/true);
  const PropertyValue after = fold_all(after_shards, spec);

  if (before != after) {
    std::cerr << "compaction self-check failed: fold " << before << " -> "
              << after << "\n";
    return 1;
  }
  write_file(out_path.empty() ? store_path : out_path,
             store.dump().dump(2) + "\n");
  std::cout << "compacted " << owner.to_string() << ": " << after_shards.size()
            << " shard(s), total " << after << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sharding object-mapper workbench: contention-limited "
               "document-store simulator and voting benchmark"};
  app.require_subcommand(1);

  BenchFlags bench_flags;
  CLI::App* bench = app.add_subcommand("bench", "Run one workload arm");
  add_bench_flags(*bench, bench_flags);

  BenchFlags sweep_flags;
  std::vector<int> shards_list;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Run one arm per shard count");
  add_bench_flags(*sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--shards-list", shards_list, "Shard counts to sweep")
      ->delimiter(',')
      ->required()
      ->check(CLI::Range(1, 1 << 20));

  CLI::App* demo =
      app.add_subcommand("demo", "Replay the stale-counter walkthrough");

  std::string store_path, spec_path, owner_id, out_path;
  std::string owner_kind = "Question";
  CLI::App* compact_cmd =
      app.add_subcommand("compact", "Fold a snapshot's dynamic shards");
  compact_cmd->add_option("--store", store_path, "Store snapshot (JSON)")
      ->required();
  compact_cmd->add_option("--spec-file", spec_path, "Shard spec (JSON)")
      ->required();
  compact_cmd->add_option("--owner", owner_id, "Owner entity id")->required();
  compact_cmd->add_option("--owner-kind", owner_kind, "Owner entity kind");
  compact_cmd->add_option("--out", out_path,
                          "Output snapshot path (default: --store)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bench->parsed()) return cmd_bench(bench_flags);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, shards_list);
    if (demo->parsed()) return cmd_demo();
    if (compact_cmd->parsed())
      return cmd_compact(store_path, spec_path, owner_id, owner_kind, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
