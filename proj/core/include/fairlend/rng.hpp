#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace fairlend {

// splitmix64 finalizer. Full-avalanche mix of a 64-bit word.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t seed, uint64_t tag) {
  return mix64(seed ^ mix64(tag));
}

// FNV-1a, used to derive stream tags from names.
inline uint64_t hash_str(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic counter-based generator: draw n is a pure function of
// (seed, n). There is no global state; every consumer owns its stream and
// independent streams are derived with fork().
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed) : seed_(seed) {}

  uint64_t next_u64() { return mix64(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // integer in [0, n)
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  // integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) { return lo + uniform_int(hi - lo + 1); }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller without a cached spare: every call consumes exactly two draws.
  double normal() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_u64() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  CounterRng fork(uint64_t tag) const { return CounterRng(hash_combine(seed_, tag)); }
  CounterRng fork(std::string_view tag) const { return fork(hash_str(tag)); }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t counter_ = 0;
};

// Reusable inverted-scaling dropout mask: every entry is exactly 0 or
// 1/keep_prob, and the mask is a pure function of (seed, shape, keep_prob).
struct DropoutMask {
  double keep_prob = 1.0;
  uint64_t seed = 0;
  std::vector<int> shape;
  std::vector<double> values;

  static DropoutMask build(uint64_t seed, const std::vector<int>& shape, double keep_prob);
};

}  // namespace fairlend
