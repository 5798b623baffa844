#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace crsynth {

// xoshiro256** with splitmix64 seeding. All distributions are implemented
// here so that streams are bit-reproducible across platforms and standard
// library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0x9E3779B97F4A7C15ull);

  uint64_t next_u64();

  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  double normal();                           // standard normal, Box-Muller
  double gamma(double shape_k);              // shape >= 1, unit scale (Marsaglia-Tsang)
  int64_t uniform_int(int64_t lo, int64_t hi);  // inclusive bounds
  bool bernoulli(double p);

  std::vector<int64_t> permutation(int64_t n);  // Fisher-Yates

  // Independent child stream derived from this one's output.
  Rng fork();

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& st) { s_ = st; }

 private:
  std::array<uint64_t, 4> s_{};
};

}  // namespace crsynth
