#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shardmap/docstore.hpp"
#include "shardmap/txretry.hpp"

namespace shardmap {

enum class Strategy { naive, static_n, dynamic, group };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

// One experiment arm: a population of voters hitting a set of questions
// at a Poisson arrival rate, under one sharding strategy and retry policy.
struct WorkloadConfig {
  int questions = 16;
  int total_votes = 2000;
  double arrival_rate = 75.0;  // votes per virtual second
  Strategy strategy = Strategy::naive;
  int shards = 16;  // static / group strategies
  RetryPolicy retry;
  std::uint64_t seed = 1;
  StoreConfig store;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static WorkloadConfig from_json(const nlohmann::json& j);
};

struct WorkloadReport {
  int issued = 0;
  int succeeded = 0;
  int failed = 0;
  double failure_rate = 0.0;
  double mean_tx_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  std::map<std::string, std::int64_t> per_question_final;
  WorkloadConfig config_echo;

  nlohmann::json to_json() const;
  std::string csv_row() const;
  static std::string csv_header();
};

// Runs one arm on a fresh store: seeds the questions, replays Poisson
// vote arrivals through load -> voteUp -> save on the discrete-event
// loop, and collects metrics plus per-question final counts.
WorkloadReport run_workload(const WorkloadConfig& config);

// Runs each config on an isolated store.
std::vector<WorkloadReport> sweep(const std::vector<WorkloadConfig>& configs);

}  // namespace shardmap
