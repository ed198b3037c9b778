#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace poisonlab {

/// Reproducible random stream.
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All transforms (uniform reals, bounded integers, normals,
/// shuffles) are implemented here instead of using <random> distributions,
/// whose algorithms are implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, stream id) via splitmix64 mixing.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound), bias-free by rejection. bound > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Standard normal via the Box-Muller transform; the second variate of
  /// each pair is cached.
  double normal();

  /// In-place Fisher-Yates shuffle.
  void shuffle(std::span<std::size_t> values);

  /// Identity permutation of 0..n-1, shuffled.
  std::vector<std::size_t> permutation(std::size_t n);

  /// `count` distinct indices from [0, n), in draw order (partial
  /// Fisher-Yates). count <= n.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t count);

  /// `count` indices from [0, n) drawn independently. n > 0.
  std::vector<std::size_t> sample_with_replacement(std::size_t n,
                                                   std::size_t count);

private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace poisonlab
