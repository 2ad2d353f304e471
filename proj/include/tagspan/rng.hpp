#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace tagspan {

// splitmix64. Self-contained so that seeded draws are identical across
// compilers and standard libraries (std::shuffle and the std distributions
// are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [-a, a]
  double next_symmetric(double a) { return (2.0 * next_double() - 1.0) * a; }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Sample k distinct indices from [0, n) via partial Fisher-Yates,
  // returned in draw order. k > n yields all n indices.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
    std::vector<size_t> pool(n);
    for (size_t i = 0; i < n; ++i) pool[i] = i;
    if (k > n) k = n;
    for (size_t i = 0; i < k; ++i) {
      size_t j = i + static_cast<size_t>(next_below(n - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  uint64_t state_;
};

// FNV-1a over bytes, mixed with a seed. Stable across platforms.
inline uint64_t hash_string(std::string_view s, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tagspan
