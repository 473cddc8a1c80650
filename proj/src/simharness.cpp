#include "shardmap/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>

#include "shardmap/mapper.hpp"
#include "shardmap/shardcore.hpp"

namespace shardmap {
namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(sorted.size())));
  if (rank == 0) rank = 1;
  return sorted[std::min(rank - 1, sorted.size() - 1)];
}

ShardSpec votes_spec(Strategy strategy, int shards) {
  ShardSpec spec;
  spec.property = "votes";
  spec.neutral = 0;
  spec.fold = "sum-int";
  if (strategy == Strategy::static_n) {
    spec.mode = ShardMode::static_n;
    spec.shard_count = shards;
  } else {
    spec.mode = ShardMode::dynamic;
  }
  return spec;
}

MappingDef question_mapping(const WorkloadConfig& cfg) {
  MappingDef def;
  def.kind = "Question";
  if (cfg.strategy == Strategy::static_n || cfg.strategy == Strategy::dynamic) {
    def.shard_specs.push_back(votes_spec(cfg.strategy, cfg.shards));
    def.shard_methods.push_back(ShardMethodDef{"voteUp", "votes", "increment"});
  } else {
    def.plain_properties.push_back("votes");
  }
  return def;
}

void seed_questions(Store& store, const WorkloadConfig& cfg) {
  for (int q = 1; q <= cfg.questions; ++q) {
    Key key = Key::root("Question", std::to_string(q));
    Entity main{key, {{"votes", 0}}};
    switch (cfg.strategy) {
      case Strategy::naive:
      case Strategy::group:
        store.put(main);
        break;
      case Strategy::static_n: {
        auto [stripped, shards] =
            static_shard_init(main, votes_spec(cfg.strategy, cfg.shards));
        store.put(stripped);
        for (const Entity& s : shards) store.put(s);
        break;
      }
      case Strategy::dynamic: {
        Entity stripped = main;
        stripped.properties.erase("votes");
        store.put(stripped);
        // Single initial shard carrying the original value.
        dynamic_shard_append(store, key, 0,
                             votes_spec(cfg.strategy, cfg.shards));
        break;
      }
    }
  }
}

void do_vote(Store& store, Mapper& mapper, const WorkloadConfig& cfg,
             const Key& question, std::mt19937_64& rng) {
  switch (cfg.strategy) {
    case Strategy::naive: {
      MappedObject obj = mapper.load("Question", question);
      obj.set_plain("votes", obj.value("votes").get<std::int64_t>() + 1);
      mapper.save(obj, rng);
      break;
    }
    case Strategy::static_n:
    case Strategy::dynamic: {
      MappedObject obj = mapper.load("Question", question);
      mapper.apply_shard_method(obj, "voteUp");
      mapper.save(obj, rng);
      break;
    }
    case Strategy::group: {
      store.get(question);
      Entity member;
      member.key = Key::root("Vote", store.allocate_id("Vote"));
      member.properties["question"] = question.id;
      group_shard_write(store, question, cfg.shards, member, rng);
      break;
    }
  }
}

std::int64_t final_count(Store& store, Mapper& mapper,
                         const WorkloadConfig& cfg, const Key& question) {
  switch (cfg.strategy) {
    case Strategy::naive:
      return store.get(question)->properties["votes"].get<std::int64_t>();
    case Strategy::static_n:
    case Strategy::dynamic:
      return mapper.reload_value("Question", question, "votes")
          .get<std::int64_t>();
    case Strategy::group:
      return static_cast<std::int64_t>(
          group_union(store, question, cfg.shards).size());
  }
  return 0;
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::naive: return "naive";
    case Strategy::static_n: return "static";
    case Strategy::dynamic: return "dynamic";
    case Strategy::group: return "group";
  }
  return "naive";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "naive") return Strategy::naive;
  if (name == "static") return Strategy::static_n;
  if (name == "dynamic") return Strategy::dynamic;
  if (name == "group") return Strategy::group;
  throw ConfigError("unknown strategy: " + name);
}

void WorkloadConfig::validate() const {
  if (questions <= 0) throw ConfigError("questions must be positive");
  if (total_votes < 0) throw ConfigError("total_votes must be >= 0");
  if (arrival_rate <= 0.0) throw ConfigError("arrival_rate must be positive");
  if (shards < 1) throw ConfigError("shards must be >= 1");
}

nlohmann::json WorkloadConfig::to_json() const {
  nlohmann::json j;
  j["questions"] = questions;
  j["total_votes"] = total_votes;
  j["arrival_rate"] = arrival_rate;
  j["strategy"] = strategy_name(strategy);
  j["shards"] = shards;
  j["retry"] = retry.to_json();
  j["seed"] = seed;
  j["store"] = {{"commit_service_ms", to_ms(store.commit_service_time)},
                {"staleness_ms", to_ms(store.query_staleness_window)},
                {"max_groups_per_tx", store.max_groups_per_tx},
                {"read_latency_ms", to_ms(store.read_latency)},
                {"commit_latency_ms", to_ms(store.commit_latency)}};
  return j;
}

WorkloadConfig WorkloadConfig::from_json(const nlohmann::json& j) {
  WorkloadConfig c;
  c.questions = j.value("questions", 16);
  c.total_votes = j.value("total_votes", 2000);
  c.arrival_rate = j.value("arrival_rate", 75.0);
  c.strategy = strategy_from_name(j.value("strategy", std::string("naive")));
  c.shards = j.value("shards", 16);
  if (j.contains("retry")) c.retry = RetryPolicy::from_json(j["retry"]);
  c.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("store")) {
    const auto& s = j["store"];
    c.store.commit_service_time = virtual_ms(s.value("commit_service_ms", 150.0));
    c.store.query_staleness_window = virtual_ms(s.value("staleness_ms", 500.0));
    c.store.max_groups_per_tx = s.value("max_groups_per_tx", 5);
    c.store.read_latency = virtual_ms(s.value("read_latency_ms", 5.0));
    c.store.commit_latency = virtual_ms(s.value("commit_latency_ms", 20.0));
  }
  c.validate();
  return c;
}

nlohmann::json WorkloadReport::to_json() const {
  nlohmann::json j;
  j["issued"] = issued;
  j["succeeded"] = succeeded;
  j["failed"] = failed;
  j["failure_rate"] = failure_rate;
  j["mean_tx_ms"] = mean_tx_ms;
  j["p50_ms"] = p50_ms;
  j["p95_ms"] = p95_ms;
  j["p99_ms"] = p99_ms;
  j["per_question_final"] = per_question_final;
  j["config"] = config_echo.to_json();
  return j;
}

std::string WorkloadReport::csv_header() {
  return "strategy,n,retry,issued,succeeded,failed,failure_rate,mean_ms,p50,"
         "p95,p99,seed";
}

std::string WorkloadReport::csv_row() const {
  const auto& c = config_echo;
  std::string retry =
      c.retry.mode == RetryPolicy::Mode::none ? "none" : "until_success";
  return strategy_name(c.strategy) + "," + std::to_string(c.shards) + "," +
         retry + "," + std::to_string(issued) + "," +
         std::to_string(succeeded) + "," + std::to_string(failed) + "," +
         fmt3(failure_rate) + "," + fmt3(mean_tx_ms) + "," + fmt3(p50_ms) +
         "," + fmt3(p95_ms) + "," + fmt3(p99_ms) + "," + std::to_string(c.seed);
}

WorkloadReport run_workload(const WorkloadConfig& config) {
  config.validate();

  StoreConfig store_cfg = config.store;
  store_cfg.rng_seed = config.seed;
  Store store(store_cfg);
  Mapper mapper(store);
  mapper.register_mapping(question_mapping(config));

  seed_questions(store, config);
  const VirtualUs quiesce =
      store.config().query_staleness_window + store.config().commit_service_time;
  store.advance_time(quiesce);

  // Poisson arrivals, spread uniformly across questions. All randomness
  // below flows from the seeded generator, so runs are reproducible.
  std::mt19937_64 rng(config.seed);
  struct Vote {
    VirtualUs arrival = 0;
    int question = 0;
    int attempts = 0;
  };
  std::vector<Vote> votes(config.total_votes);
  const double rate_per_us = config.arrival_rate / 1e6;
  VirtualUs t = store.now();
  for (auto& v : votes) {
    t += static_cast<VirtualUs>(-std::log(1.0 - uniform01(rng)) / rate_per_us);
    v.arrival = t;
    v.question = 1 + static_cast<int>(rng() % config.questions);
  }

  struct Event {
    VirtualUs time;
    std::int64_t seq;
    int vote;
  };
  auto later = [](const Event& a, const Event& b) {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  };
  std::priority_queue<Event, std::vector<Event>, decltype(later)> events(later);
  std::int64_t seq = 0;
  for (int i = 0; i < config.total_votes; ++i)
    events.push(Event{votes[i].arrival, seq++, i});

  std::vector<double> tx_times_ms;
  int failed = 0;
  while (!events.empty()) {
    Event ev = events.top();
    events.pop();
    store.clock().advance_to(ev.time);
    Vote& vote = votes[ev.vote];
    ++vote.attempts;

    const VirtualUs cost_before = store.op_cost_accum();
    bool ok = true;
    try {
      do_vote(store, mapper, config,
              Key::root("Question", std::to_string(vote.question)), rng);
    } catch (const ContentionError&) {
      ok = false;
    }
    const VirtualUs cost = store.op_cost_accum() - cost_before;

    if (ok) {
      tx_times_ms.push_back(to_ms(ev.time + cost - vote.arrival));
    } else if (config.retry.retry_allowed(vote.attempts)) {
      VirtualUs delay = config.retry.delay_for(vote.attempts - 1, rng);
      events.push(Event{ev.time + cost + delay, seq++, ev.vote});
    } else {
      ++failed;
    }
  }

  store.advance_time(quiesce);

  WorkloadReport report;
  report.config_echo = config;
  report.issued = config.total_votes;
  report.succeeded = static_cast<int>(tx_times_ms.size());
  report.failed = failed;
  report.failure_rate =
      config.total_votes > 0
          ? static_cast<double>(failed) / static_cast<double>(config.total_votes)
          : 0.0;
  if (!tx_times_ms.empty()) {
    double sum = 0.0;
    for (double v : tx_times_ms) sum += v;
    report.mean_tx_ms = sum / static_cast<double>(tx_times_ms.size());
    std::sort(tx_times_ms.begin(), tx_times_ms.end());
    report.p50_ms = percentile(tx_times_ms, 0.50);
    report.p95_ms = percentile(tx_times_ms, 0.95);
    report.p99_ms = percentile(tx_times_ms, 0.99);
  }
  for (int q = 1; q <= config.questions; ++q) {
    Key key = Key::root("Question", std::to_string(q));
    report.per_question_final[key.id] = final_count(store, mapper, config, key);
  }
  return report;
}

std::vector<WorkloadReport> sweep(const std::vector<WorkloadConfig>& configs) {
  std::vector<WorkloadReport> reports;
  reports.reserve(configs.size());
  for (const auto& cfg : configs) reports.push_back(run_workload(cfg));
  return reports;
}

}  // namespace shardmap
