#include "difftune/rng.h"

namespace difftune {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t draws)
    : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)), counter_(draws) {}

std::uint64_t CounterRng::next() {
  std::uint64_t c = ++counter_;
  return mix64(key_ + c * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  // Rejection keeps the result exactly uniform.
  std::uint64_t limit = max() - max() % bound;
  for (;;) {
    std::uint64_t v = next();
    if (v < limit) return v % bound;
  }
}

bool CounterRng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

CounterRng CounterRng::split(std::uint64_t stream) const {
  return CounterRng(KeyTag{}, mix64(key_ ^ mix64(stream + kGolden)));
}

}  // namespace difftune
