// Counter-based splittable random source.
//
// Every draw is a pure function of (key, counter), so a generator's position
// is fully described by its draw count and can be persisted and restored.
#pragma once

#include <cstdint>
#include <limits>

namespace difftune {

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t draws = 0);

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  // True with probability p (p <= 0 never, p >= 1 always).
  bool bernoulli(double p);

  // Independent generator for a named sub-stream; does not advance *this.
  CounterRng split(std::uint64_t stream) const;

  std::uint64_t draws() const { return counter_; }
  void seek(std::uint64_t draws) { counter_ = draws; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  struct KeyTag {};
  CounterRng(KeyTag, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace difftune
