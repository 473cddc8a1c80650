#include "shardmap/txretry.hpp"

#include <algorithm>
#include <cmath>

#include "shardmap/errors.hpp"

namespace shardmap {

RetryPolicy RetryPolicy::until_success_fixed(VirtualUs delay, double jitter) {
  RetryPolicy p;
  p.mode = Mode::until_success;
  p.backoff = Backoff::fixed;
  p.backoff_base = delay;
  p.jitter = jitter;
  return p;
}

VirtualUs RetryPolicy::delay_for(int attempt_index,
                                 std::mt19937_64& rng) const {
  double base = 0.0;
  switch (backoff) {
    case Backoff::none:
      return 0;
    case Backoff::fixed:
      base = static_cast<double>(backoff_base);
      break;
    case Backoff::exponential:
      base = std::min(static_cast<double>(backoff_cap),
                      static_cast<double>(backoff_base) *
                          std::pow(backoff_factor, attempt_index));
      break;
  }
  if (jitter > 0.0) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    base *= 1.0 + jitter * (2.0 * u - 1.0);
  }
  return static_cast<VirtualUs>(base);
}

bool RetryPolicy::retry_allowed(int attempts_so_far) const {
  if (mode == Mode::none) return false;
  return !max_attempts || attempts_so_far < *max_attempts;
}

nlohmann::json RetryPolicy::to_json() const {
  nlohmann::json j;
  j["mode"] = mode == Mode::none ? "none" : "until_success";
  if (max_attempts) j["max_attempts"] = *max_attempts;
  switch (backoff) {
    case Backoff::none:
      j["backoff"] = "none";
      break;
    case Backoff::fixed:
      j["backoff"] = {{"fixed_ms", to_ms(backoff_base)}};
      break;
    case Backoff::exponential:
      j["backoff"] = {{"exponential_base_ms", to_ms(backoff_base)},
                      {"factor", backoff_factor},
                      {"cap_ms", to_ms(backoff_cap)}};
      break;
  }
  j["jitter"] = jitter;
  return j;
}

RetryPolicy RetryPolicy::from_json(const nlohmann::json& j) {
  RetryPolicy p;
  const std::string mode = j.value("mode", std::string("none"));
  if (mode == "none")
    p.mode = Mode::none;
  else if (mode == "until_success")
    p.mode = Mode::until_success;
  else
    throw ConfigError("retry mode must be none or until_success");
  if (j.contains("max_attempts")) p.max_attempts = j["max_attempts"].get<int>();
  if (j.contains("backoff")) {
    const auto& b = j["backoff"];
    if (b == "none") {
      p.backoff = Backoff::none;
    } else if (b.is_object() && b.contains("fixed_ms")) {
      p.backoff = Backoff::fixed;
      p.backoff_base = virtual_ms(b["fixed_ms"].get<double>());
    } else if (b.is_object() && b.contains("exponential_base_ms")) {
      p.backoff = Backoff::exponential;
      p.backoff_base = virtual_ms(b["exponential_base_ms"].get<double>());
      p.backoff_factor = b.value("factor", 2.0);
      if (b.contains("cap_ms")) p.backoff_cap = virtual_ms(b["cap_ms"].get<double>());
    } else {
      throw ConfigError("unrecognized backoff spec: " + b.dump());
    }
  }
  p.jitter = j.value("jitter", 0.0);
  if (p.jitter < 0.0 || p.jitter > 1.0)
    throw ConfigError("jitter must lie in [0,1]");
  return p;
}

RetryOutcome with_retry(const std::function<void()>& work,
                        const RetryPolicy& policy, VirtualClock& clock,
                        std::mt19937_64& rng) {
  const VirtualUs start = clock.now();
  RetryOutcome out;
  for (;;) {
    ++out.attempts;
    try {
      work();
      out.success = true;
      out.total_time = clock.now() - start;
      return out;
    } catch (const ContentionError&) {
      if (!policy.retry_allowed(out.attempts)) {
        out.total_time = clock.now() - start;
        return out;
      }
      clock.advance(policy.delay_for(out.attempts - 1, rng));
    }
  }
}

}  // namespace shardmap
