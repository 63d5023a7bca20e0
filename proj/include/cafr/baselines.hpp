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
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "cafr/cache_state.hpp"
#include "cafr/errors.hpp"
#include "cafr/log.hpp"
#include "cafr/popularity.hpp"
#include "cafr/random.hpp"

namespace cafr {

namespace detail {

/// Indices of the k largest scores; ties by ascending index.
inline std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
  idx.resize(k);
  return idx;
}

/// c random contents from the catalog outside `local`.
inline std::vector<ContentId> random_remainder(std::size_t catalog_size, const std::vector<ContentId>& local,
                                               std::size_t c, Rng& rng) {
  std::vector<bool> taken(catalog_size, false);
  for (ContentId id : local) taken.at(id) = true;
  std::vector<ContentId> pool;
  pool.reserve(catalog_size - local.size());
  for (std::size_t i = 0; i < catalog_size; ++i)
    if (!taken[i]) pool.push_back(static_cast<ContentId>(i));
  return sample_without_replacement(rng, pool, c);
}

inline std::vector<ContentId> to_ids(const std::vector<std::size_t>& idx) {
  return {idx.begin(), idx.end()};
}

inline void require_catalog(std::size_t catalog_size, std::size_t c, const char* who) {
  if (c < 1 || catalog_size < 2 * c) throw ConfigError(std::string(who) + ": catalog must hold at least 2c contents");
}

}  // namespace detail

/// c uniform contents locally, c more from the remainder at the neighbor.
inline CacheState random_policy(std::size_t catalog_size, std::size_t c, Rng& rng) {
  detail::require_catalog(catalog_size, c, "random_policy");
  CacheState cs;
  cs.local = detail::to_ids(sample_indices(rng, catalog_size, c));
  cs.neighbor = detail::random_remainder(catalog_size, cs.local, c, rng);
  return cs;
}

/// Cumulative request counters over all past rounds.
class RequestHistory {
 public:
  explicit RequestHistory(std::size_t catalog_size) : counts_(catalog_size, 0.0) {}

  void record(std::span<const VehicleRequests> requests) {
    for (const auto& vr : requests)
      for (ContentId id : vr.contents) counts_.at(id) += 1.0;
  }

  std::span<const double> counts() const noexcept { return counts_; }

 private:
  std::vector<double> counts_;
};

/// Top-c contents by request count with probability 1 - eps, otherwise c random contents.
/// `explored` reports which branch was taken.
inline CacheState c_eps_greedy(std::span<const double> counts, std::size_t c, double eps, Rng& rng,
                               bool* explored = nullptr) {
  detail::require_catalog(counts.size(), c, "c_eps_greedy");
  const bool explore = uniform01(rng) < eps;
  if (explored) *explored = explore;
  CacheState cs;
  cs.local = explore ? detail::to_ids(sample_indices(rng, counts.size(), c)) : detail::to_ids(detail::top_k(counts, c));
  cs.neighbor = detail::random_remainder(counts.size(), cs.local, c, rng);
  return cs;
}

/// Per-content Beta(hits + 1, misses + 1) posteriors.
class BetaPosteriors {
 public:
  explicit BetaPosteriors(std::size_t catalog_size) : hits_(catalog_size, 0.0), misses_(catalog_size, 0.0) {}

  std::size_t size() const noexcept { return hits_.size(); }
  double alpha(ContentId id) const { return hits_.at(id) + 1.0; }
  double beta(ContentId id) const { return misses_.at(id) + 1.0; }

  void add(ContentId id, double hits, double misses) {
    hits_.at(id) += hits;
    misses_.at(id) += misses;
  }

  /// Each request of the round counts as a hit for its content when served locally, else a miss.
  void update(const CacheState& served, std::span<const VehicleRequests> requests) {
    for (const auto& vr : requests)
      for (ContentId id : vr.contents) {
        if (served.holds_local(id))
          add(id, 1.0, 0.0);
        else
          add(id, 0.0, 1.0);
      }
  }

  double sample(ContentId id, Rng& rng) const {
    const double x = std::gamma_distribution<double>(alpha(id), 1.0)(rng);
    const double y = std::gamma_distribution<double>(beta(id), 1.0)(rng);
    return x / (x + y);
  }

 private:
  std::vector<double> hits_;
  std::vector<double> misses_;
};

/// Caches the c contents with the largest posterior samples; the neighbor is random.
inline CacheState thompson_sampling(const BetaPosteriors& posteriors, std::size_t c, Rng& rng) {
  detail::require_catalog(posteriors.size(), c, "thompson_sampling");
  std::vector<double> theta(posteriors.size());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = posteriors.sample(static_cast<ContentId>(i), rng);
  CacheState cs;
  cs.local = detail::to_ids(detail::top_k(theta, c));
  cs.neighbor = detail::random_remainder(posteriors.size(), cs.local, c, rng);
  return cs;
}

/// Random placement within the predicted popular contents. When fewer than 2c are predicted the
/// list is padded with random catalog contents.
inline CacheState cafr_no_drl(const PopularContents& popular, std::size_t catalog_size, std::size_t c, Rng& rng) {
  detail::require_catalog(catalog_size, c, "cafr_no_drl");
  std::vector<ContentId> pool = popular.ids();
  if (pool.size() < 2 * c) {
    logger()->warn("cafr_no_drl: {} popular contents for capacity {}, padding with random contents", pool.size(), c);
    for (ContentId id : detail::random_remainder(catalog_size, pool, 2 * c - pool.size(), rng)) pool.push_back(id);
  }
  CacheState cs;
  cs.local = sample_without_replacement(rng, pool, c);
  std::vector<ContentId> rest;
  for (ContentId id : pool)
    if (std::find(cs.local.begin(), cs.local.end(), id) == cs.local.end()) rest.push_back(id);
  cs.neighbor = sample_without_replacement(rng, rest, c);
  return cs;
}

}  // namespace cafr
