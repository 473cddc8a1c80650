#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>

#include "shardmap/entity.hpp"
#include "shardmap/time.hpp"

namespace shardmap {

// Retry policy for transactional closures that fail with ContentionError.
// Policy config JSON: {"mode":"until_success","backoff":{"fixed_ms":50},
//                      "jitter":0.5}.
struct RetryPolicy {
  enum class Mode { none, until_success };
  enum class Backoff { none, fixed, exponential };

  Mode mode = Mode::none;
  std::optional<int> max_attempts;  // until_success only; empty = unbounded
  Backoff backoff = Backoff::none;
  VirtualUs backoff_base = 0;
  double backoff_factor = 2.0;
  VirtualUs backoff_cap = std::numeric_limits<VirtualUs>::max();
  double jitter = 0.0;  // fraction in [0,1]

  static RetryPolicy none() { return {}; }
  static RetryPolicy until_success_fixed(VirtualUs delay, double jitter = 0.0);

  // Backoff wait after failed attempt `attempt_index` (0-based):
  // min(cap, base*factor^i) * (1 +- jitter*u).
  VirtualUs delay_for(int attempt_index, std::mt19937_64& rng) const;

  bool retry_allowed(int attempts_so_far) const;

  nlohmann::json to_json() const;
  static RetryPolicy from_json(const nlohmann::json& j);
};

struct RetryOutcome {
  bool success = false;
  int attempts = 0;
  VirtualUs total_time = 0;  // attempt service times plus backoff waits
};

// Runs `work` under `policy`, advancing `clock` by each backoff wait.
// Only ContentionError is retryable; other exceptions propagate.
RetryOutcome with_retry(const std::function<void()>& work,
                        const RetryPolicy& policy, VirtualClock& clock,
                        std::mt19937_64& rng);

}  // namespace shardmap
