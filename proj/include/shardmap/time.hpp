#pragma once

#include <cstdint>
#include <stdexcept>

namespace shardmap {

// Virtual time in microseconds. All store latencies and experiment
// durations are virtual; nothing in the core blocks on wall-clock time.
using VirtualUs = std::int64_t;

constexpr VirtualUs virtual_ms(double ms) {
  return static_cast<VirtualUs>(ms * 1000.0);
}

constexpr double to_ms(VirtualUs t) { return static_cast<double>(t) / 1000.0; }

class VirtualClock {
 public:
  VirtualUs now() const { return now_; }

  void advance(VirtualUs delta) {
    if (delta < 0) throw std::invalid_argument("VirtualClock: negative advance");
    now_ += delta;
  }

  // Jump forward to an absolute instant; no-op if already past it.
  void advance_to(VirtualUs t) {
    if (t > now_) now_ = t;
  }

 private:
  VirtualUs now_ = 0;
};

}  // namespace shardmap
