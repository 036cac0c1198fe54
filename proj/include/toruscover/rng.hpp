#pragma once

// Deterministic counter-based random streams.
//
// Wire format (frozen; changing any constant is a breaking change):
//   state0  = avalanche(avalanche(master_seed ^ GOLDEN) + trial_index)
//   draw k  = avalanche(state0 + (k + 1) * GOLDEN)
// where avalanche is the SplitMix64 finalizer and GOLDEN = 0x9E3779B97F4A7C15.
// Every draw is a pure function of (master_seed, trial_index, k), so trials
// can run on any thread in any order and still reproduce bit-identically;
// no generator state is ever shared between trials.

#include <cmath>
#include <cstdint>

#include "toruscover/common.hpp"

namespace toruscover {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t avalanche(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Names one reproducible stream: a master seed plus the trial it drives.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
};

/// Sequential view of one stream. Cheap to construct; not thread-safe.
class Stream {
 public:
  explicit Stream(SeedSpec s)
      : state_(avalanche(avalanche(s.master_seed ^ kGolden) + s.trial_index)) {}

  std::uint64_t next_u64() {
    state_ += kGolden;
    return avalanche(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1); safe as a log() argument.
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; generates pairs, caches the second.
  double next_gauss() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(next_open()));
    const double t = 2.0 * kPi * next_unit();
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

  /// Exponential with mean 1.
  double next_exp() { return -std::log(next_open()); }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace toruscover
