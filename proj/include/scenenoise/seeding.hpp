#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace scenenoise {

// 64-bit FNV-1a. Stable across platforms and runs; used for cache keys and
// seed derivation, never for security.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Child seed from a parent seed and an ordered list of integer coordinates.
// Depends only on its arguments, so work can be scheduled in any order.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

// Mixes a label into a seed, e.g. to give each decision its own stream.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

// Portable random stream. The std distributions are implementation-defined,
// so conversions to reals and bounded integers are done here explicitly to
// keep outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  // Uniform in [0, n); n must be > 0. Rejection sampling avoids modulo bias.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace scenenoise
