/*
 * Copyright 2026 The cafr-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace cafr {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mixes a base seed with stream tags so every (seed, round, vehicle, purpose)
/// tuple gets its own reproducible generator.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(base);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(base, tags));
}

// Stream tags for derive_seed; keep values stable, they define reproducibility.
namespace stream {
inline constexpr std::uint64_t kMobility = 1;
inline constexpr std::uint64_t kChannel = 2;
inline constexpr std::uint64_t kPartition = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kRequests = 5;
inline constexpr std::uint64_t kModelInit = 6;
inline constexpr std::uint64_t kTraining = 7;
inline constexpr std::uint64_t kCompletion = 8;
inline constexpr std::uint64_t kDrl = 9;
inline constexpr std::uint64_t kScheme = 10;
inline constexpr std::uint64_t kPadding = 11;
}  // namespace stream

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

/// k distinct elements of `items` drawn uniformly without replacement.
template <typename T>
std::vector<T> sample_without_replacement(Rng& rng, const std::vector<T>& items, std::size_t k) {
  std::vector<T> out;
  for (auto idx : sample_indices(rng, items.size(), k)) out.push_back(items[idx]);
  return out;
}

}  // namespace cafr
