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

#include <vector>

#include <gtest/gtest.h>

#include "cafr/metrics.hpp"

namespace cafr {
namespace {

std::vector<FetchEvent> events_with(std::size_t local, std::size_t other) {
  std::vector<FetchEvent> out;
  for (std::size_t i = 0; i < local; ++i) out.push_back({1, 0, 0, Tier::Local, 0.1});
  for (std::size_t i = 0; i < other; ++i) out.push_back({1, 0, 1, i % 2 ? Tier::Neighbor : Tier::Mbs, 0.2});
  return out;
}

TEST(CacheHitRatio, DocumentedExamples) {
  EXPECT_DOUBLE_EQ(cache_hit_ratio(events_with(30, 70)), 30.0);
  EXPECT_DOUBLE_EQ(cache_hit_ratio(events_with(5, 0)), 100.0);
  EXPECT_DOUBLE_EQ(cache_hit_ratio(events_with(0, 4)), 0.0);
  EXPECT_DOUBLE_EQ(cache_hit_ratio(std::vector<FetchEvent>{}), 0.0);
}

TEST(AvgTransmissionDelay, DividesByVehicles) {
  const std::vector<FetchEvent> one{{1, 0, 0, Tier::Local, 0.1}, {1, 0, 1, Tier::Mbs, 0.3}};
  EXPECT_DOUBLE_EQ(avg_transmission_delay(one, 1), 0.4);
  const std::vector<FetchEvent> two{{1, 0, 0, Tier::Local, 0.2}, {1, 1, 1, Tier::Local, 0.2}};
  EXPECT_DOUBLE_EQ(avg_transmission_delay(two, 2), 0.2);
  EXPECT_DOUBLE_EQ(avg_transmission_delay(std::vector<FetchEvent>{}, 3), 0.0);
  EXPECT_THROW((void)avg_transmission_delay(one, 0), DomainError);
  EXPECT_DOUBLE_EQ(per_request_delay(one), 0.2);
}

TEST(ServeRequests, TierRuleAndDelayRecomputation) {
  Rng rng(1);
  const DeliveryParams p;
  for (int trial = 0; trial < 50; ++trial) {
    CacheState cs;
    const auto idx = sample_indices(rng, 30, 10);
    for (std::size_t i = 0; i < 5; ++i) cs.local.push_back(static_cast<ContentId>(idx[i]));
    for (std::size_t i = 5; i < 10; ++i) cs.neighbor.push_back(static_cast<ContentId>(idx[i]));
    std::vector<VehicleRequests> requests;
    for (VehicleId v = 0; v < 4; ++v) {
      VehicleRequests vr{v, {1e3 + 1e6 * uniform01(rng), 1e3 + 1e6 * uniform01(rng)}, {}};
      for (auto c : sample_indices(rng, 30, 6)) vr.contents.push_back(static_cast<ContentId>(c));
      requests.push_back(vr);
    }
    const auto events = serve_requests(trial, cs, requests, p);
    ASSERT_EQ(events.size(), 24u);

    // Independent recomputation of each tier and its delay formula.
    double total = 0.0;
    std::size_t k = 0;
    for (const auto& vr : requests)
      for (auto id : vr.contents) {
        const bool local = std::find(cs.local.begin(), cs.local.end(), id) != cs.local.end();
        const bool neighbor = std::find(cs.neighbor.begin(), cs.neighbor.end(), id) != cs.neighbor.end();
        const Tier tier = local ? Tier::Local : neighbor ? Tier::Neighbor : Tier::Mbs;
        const double d = tier == Tier::Local      ? 800.0 / vr.rates.rsu_bps
                         : tier == Tier::Neighbor ? 800.0 / vr.rates.rsu_bps + 800.0 / 15e6
                                                  : 800.0 / vr.rates.mbs_bps;
        EXPECT_EQ(events[k].tier, tier);
        EXPECT_EQ(events[k].vehicle, vr.vehicle);
        EXPECT_EQ(events[k].round, trial);
        EXPECT_NEAR(events[k].delay_s, d, 1e-15);
        EXPECT_GT(events[k].delay_s, 0.0);
        total += d;
        ++k;
      }
    EXPECT_NEAR(avg_transmission_delay(events, requests.size()), total / 4.0, 1e-12);
    const double ratio = cache_hit_ratio(events);
    EXPECT_GE(ratio, 0.0);
    EXPECT_LE(ratio, 100.0);
  }
}

}  // namespace
}  // namespace cafr
