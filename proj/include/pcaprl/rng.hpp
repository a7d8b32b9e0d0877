#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pcaprl {

// splitmix64 finalizer; whitens seeds and derives independent streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, for deriving per-benchmark streams from names.
inline std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic RNG. The mt19937_64 engine is bit-stable by standard; the
// distributions are hand-rolled because the std:: ones are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Standard normal (Box-Muller; the spare of each pair is cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// One independent stream per (seed, label, index) work item; label and index
// identify the item (e.g. benchmark name hash and repeat number), so results
// do not depend on scheduling order.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t label, std::uint64_t index = 0) {
  return Rng(mix64(seed ^ mix64(label ^ mix64(index))));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label, std::uint64_t index = 0) {
  return mix64(seed ^ mix64(label ^ mix64(index)));
}

}  // namespace pcaprl
