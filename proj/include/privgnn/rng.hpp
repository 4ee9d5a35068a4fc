// Copyright 2026 The privgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVGNN_RNG_HPP_
#define PRIVGNN_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace privgnn {

// Stateless 64-bit mixer (splitmix64). Used to derive child stream seeds so
// that parallel jobs get independent, schedule-free randomness.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

// Deterministic random stream. All distributions are implemented on top of
// the mt19937_64 output sequence, which the standard pins down bit-for-bit,
// so results are reproducible across platforms and standard libraries.
//
// Streams form a tree: child(tag, index) derives an independent stream whose
// seed depends only on (parent seed, tag, index), never on draw order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  RngStream child(std::uint64_t tag, std::uint64_t index = 0) const {
    return RngStream(mix64(mix64(seed_, tag), index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe to feed into log().
  double uniform_open01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Laplace(0, scale) via inverse CDF.
  double laplace(double scale) {
    const double u = uniform_open01() - 0.5;
    return u < 0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
  }

  // Box-Muller without caching, so the draw count per call is fixed.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_below(i)]);
    }
  }

  // k distinct values from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::int32_t> sample_without_replacement(std::int32_t n, std::int32_t k) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
    std::vector<std::int32_t> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::int32_t i = 0; i < k; ++i) {
      const auto j = static_cast<std::int32_t>(uniform_below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(i + j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Stream tags used across the pipeline. Kept in one place so independent
// phases can never collide.
namespace stream_tag {
inline constexpr std::uint64_t kQuerySelect = 1;
inline constexpr std::uint64_t kPoisson = 2;
inline constexpr std::uint64_t kQueryJob = 3;
inline constexpr std::uint64_t kStudent = 4;
inline constexpr std::uint64_t kPartition = 5;
inline constexpr std::uint64_t kTeacherJob = 6;
inline constexpr std::uint64_t kSbm = 7;
}  // namespace stream_tag

}  // namespace privgnn

#endif  // PRIVGNN_RNG_HPP_
