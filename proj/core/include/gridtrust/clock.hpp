#pragma once

#include <atomic>
#include <cstdint>

namespace gridtrust {

// Logical milliseconds. Every time-dependent rule (challenge deadlines,
// protocol timeouts, inverter ticks) reads this instead of the wall clock.
using Millis = std::uint64_t;

class LogicalClock {
 public:
  explicit LogicalClock(Millis start = 0) : now_(start) {}

  Millis now() const { return now_.load(std::memory_order_acquire); }
  void advance(Millis delta) { now_.fetch_add(delta, std::memory_order_acq_rel); }
  void set(Millis t) { now_.store(t, std::memory_order_release); }

 private:
  std::atomic<Millis> now_;
};

}  // namespace gridtrust
