// SPDX-License-Identifier: Apache-2.0
//
// Portable, fully specified pseudo-random numbers. Nothing here depends on
// the standard library's distributions, whose outputs differ across vendors,
// so a seed yields the same corpus, batches, masks and initial weights
// everywhere.
//
//   seeding:   state[i] = splitmix64 stream started at `seed`, i = 0..3
//   next():    xoshiro256** 1.0
//   uniform(): (next() >> 11) * 2^-53, in [0, 1)
//   gaussian():Box-Muller on u1 = 1 - uniform() (in (0, 1]) and u2 = uniform():
//              r = sqrt(-2 ln u1); returns r cos(2 pi u2), caches r sin(2 pi u2)
//              for the following call.
//   below(n):  rejection sampling on next() to remove modulo bias.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace gatsv {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Stateless mixing of a seed with a stream tag, used to give each purpose
// (init, batching, dropout step k, ...) an independent stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double gaussian() noexcept;
  double gaussian(double mean, double stddev) noexcept { return mean + stddev * gaussian(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gatsv
