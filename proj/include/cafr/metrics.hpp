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

#include <cstddef>
#include <span>
#include <vector>

#include "cafr/cache_state.hpp"
#include "cafr/errors.hpp"

namespace cafr {

struct FetchEvent {
  int round = 0;
  VehicleId vehicle = 0;
  ContentId content = 0;
  Tier tier = Tier::Mbs;
  double delay_s = 0.0;
};

/// Percentage of requests served by the local RSU.
inline double cache_hit_ratio(std::span<const FetchEvent> events) {
  if (events.empty()) return 0.0;
  std::size_t local = 0;
  for (const auto& e : events)
    if (e.tier == Tier::Local) ++local;
  return 100.0 * static_cast<double>(local) / static_cast<double>(events.size());
}

/// Total delay of all fetches divided by the number of vehicles.
inline double avg_transmission_delay(std::span<const FetchEvent> events, std::size_t n_vehicles) {
  if (n_vehicles == 0) throw DomainError("avg_transmission_delay: no vehicles");
  double total = 0.0;
  for (const auto& e : events) total += e.delay_s;
  return total / static_cast<double>(n_vehicles);
}

/// Mean delay per fetch.
inline double per_request_delay(std::span<const FetchEvent> events) {
  if (events.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : events) total += e.delay_s;
  return total / static_cast<double>(events.size());
}

/// Serves every request through the tier rule and records one event per fetch.
inline std::vector<FetchEvent> serve_requests(int round, const CacheState& cs, std::span<const VehicleRequests> requests,
                                              const DeliveryParams& p) {
  std::vector<FetchEvent> events;
  events.reserve(request_count(requests));
  for (const auto& vr : requests)
    for (ContentId id : vr.contents) {
      const auto d = transmission_delay(id, cs, vr.rates, p);
      events.push_back({round, vr.vehicle, id, d.tier, d.delay_s});
    }
  return events;
}

}  // namespace cafr
