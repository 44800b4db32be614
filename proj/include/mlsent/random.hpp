#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace mlsent {

// Seeded generator whose derived draws are specified here rather than by the
// standard library's distributions, so sequences match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for a (seed, stream) pair, e.g. (seed, epoch).
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n);
  // Uniform in [0, 1).
  double uniform01();
  double normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mlsent
