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
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "cafr/dataset.hpp"
#include "cafr/errors.hpp"
#include "cafr/log.hpp"
#include "cafr/mobility.hpp"

namespace cafr {

/// Contents held by the local RSU (in placement order) and by its neighboring RSU.
struct CacheState {
  std::vector<ContentId> local;
  std::vector<ContentId> neighbor;

  bool holds_local(ContentId id) const { return std::find(local.begin(), local.end(), id) != local.end(); }
  bool holds_neighbor(ContentId id) const { return std::find(neighbor.begin(), neighbor.end(), id) != neighbor.end(); }

  /// Both lists of size c, duplicate-free and disjoint.
  bool valid(std::size_t c) const {
    if (local.size() != c || neighbor.size() != c) return false;
    std::vector<ContentId> all(local);
    all.insert(all.end(), neighbor.begin(), neighbor.end());
    std::sort(all.begin(), all.end());
    return std::adjacent_find(all.begin(), all.end()) == all.end();
  }

  friend bool operator==(const CacheState&, const CacheState&) = default;
};

enum class Tier { Local, Neighbor, Mbs };

inline const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Local: return "local";
    case Tier::Neighbor: return "neighbor";
    case Tier::Mbs: return "mbs";
  }
  return "?";
}

/// Local if cached locally, else neighbor if cached there, else the macro base station.
inline Tier fetch_tier(ContentId id, const CacheState& cs) {
  if (cs.holds_local(id)) return Tier::Local;
  if (cs.holds_neighbor(id)) return Tier::Neighbor;
  return Tier::Mbs;
}

struct DeliveryParams {
  double content_bits = 800.0;
  double wired_rate_bps = 15e6;
};

struct Delivery {
  Tier tier = Tier::Mbs;
  double local_hop_s = 0.0;  // RSU-to-vehicle leg, used by local and neighbor tiers
  double delay_s = 0.0;      // total delay of the tier
};

namespace detail {

inline double hop_delay(double bits, double rate_bps, const char* what) {
  if (rate_bps > 0.0) return bits / rate_bps;
  logger()->warn("transmission_delay: zero {} rate, delay is infinite", what);
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline Delivery transmission_delay(Tier tier, const LinkRates& rates, const DeliveryParams& p) {
  Delivery d;
  d.tier = tier;
  switch (tier) {
    case Tier::Local:
      d.local_hop_s = detail::hop_delay(p.content_bits, rates.rsu_bps, "V2R");
      d.delay_s = d.local_hop_s;
      break;
    case Tier::Neighbor:
      d.local_hop_s = detail::hop_delay(p.content_bits, rates.rsu_bps, "V2R");
      d.delay_s = d.local_hop_s + detail::hop_delay(p.content_bits, p.wired_rate_bps, "wired");
      break;
    case Tier::Mbs:
      d.delay_s = detail::hop_delay(p.content_bits, rates.mbs_bps, "V2B");
      break;
  }
  return d;
}

inline Delivery transmission_delay(ContentId id, const CacheState& cs, const LinkRates& rates,
                                   const DeliveryParams& p) {
  return transmission_delay(fetch_tier(id, cs), rates, p);
}

struct RewardWeights {
  double lambda1 = 0.0001;
  double lambda2 = 0.4;
  double lambda3 = 0.5999;

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0 || std::abs(lambda1 + lambda2 + lambda3 - 1.0) > 1e-9)
      throw ConfigError("reward weights must be nonnegative and sum to 1");
  }
};

/// Reward of one served request.
inline double request_reward(const Delivery& d, const RewardWeights& w) {
  switch (d.tier) {
    case Tier::Local: return std::exp(-w.lambda1 * d.delay_s);
    case Tier::Neighbor: return std::exp(-(w.lambda1 * d.local_hop_s + w.lambda2 * d.delay_s));
    case Tier::Mbs: return std::exp(-w.lambda3 * d.delay_s);
  }
  return 0.0;
}

/// The requests of one vehicle in a round, with the vehicle's link rates.
struct VehicleRequests {
  VehicleId vehicle = 0;
  LinkRates rates;
  std::vector<ContentId> contents;
};

inline std::size_t request_count(std::span<const VehicleRequests> requests) {
  std::size_t n = 0;
  for (const auto& r : requests) n += r.contents.size();
  return n;
}

/// Sum of request rewards over every vehicle's requests.
inline double slot_reward(const CacheState& cs, std::span<const VehicleRequests> requests, const DeliveryParams& p,
                          const RewardWeights& w) {
  double total = 0.0;
  for (const auto& vr : requests)
    for (ContentId id : vr.contents) total += request_reward(transmission_delay(id, cs, vr.rates, p), w);
  return total;
}

/// Per-content reward totals for each tier, so slot_reward of any placement is a sum over the
/// cached contents only.
class RewardTable {
 public:
  RewardTable(std::span<const VehicleRequests> requests, const DeliveryParams& p, const RewardWeights& w) {
    for (const auto& vr : requests) {
      const double local = request_reward(transmission_delay(Tier::Local, vr.rates, p), w);
      const double neighbor = request_reward(transmission_delay(Tier::Neighbor, vr.rates, p), w);
      const double mbs = request_reward(transmission_delay(Tier::Mbs, vr.rates, p), w);
      for (ContentId id : vr.contents) {
        auto& e = entries_[id];
        e.local += local;
        e.neighbor += neighbor;
        e.mbs += mbs;
        ++e.requests;
        all_mbs_ += mbs;
        all_local_ += local;
        ++requests_;
      }
    }
  }

  double reward(const CacheState& cs) const {
    double r = all_mbs_;
    for (ContentId id : cs.local)
      if (auto it = entries_.find(id); it != entries_.end()) r += it->second.local - it->second.mbs;
    for (ContentId id : cs.neighbor)
      if (auto it = entries_.find(id); it != entries_.end()) r += it->second.neighbor - it->second.mbs;
    return r;
  }

  /// Requests served from the local RSU under `cs`.
  std::size_t local_hits(const CacheState& cs) const {
    std::size_t hits = 0;
    for (ContentId id : cs.local)
      if (auto it = entries_.find(id); it != entries_.end()) hits += it->second.requests;
    return hits;
  }

  double hit_rate(const CacheState& cs) const {
    return requests_ == 0 ? 0.0 : static_cast<double>(local_hits(cs)) / static_cast<double>(requests_);
  }

  /// Reward rescaled so that serving everything from the MBS is 0 and everything locally is 1.
  double normalized(double reward) const {
    const double span = all_local_ - all_mbs_;
    return span == 0.0 ? 0.0 : (reward - all_mbs_) / span;
  }

  std::size_t requests() const noexcept { return requests_; }
  double all_mbs_reward() const noexcept { return all_mbs_; }
  double all_local_reward() const noexcept { return all_local_; }

 private:
  struct Entry {
    double local = 0.0;
    double neighbor = 0.0;
    double mbs = 0.0;
    std::size_t requests = 0;
  };
  std::unordered_map<ContentId, Entry> entries_;
  double all_mbs_ = 0.0;
  double all_local_ = 0.0;
  std::size_t requests_ = 0;
};

}  // namespace cafr
