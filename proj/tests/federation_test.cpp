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

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "cafr/federation.hpp"

namespace cafr {
namespace {

constexpr double kCoverage = 1000.0;

AEModel scalar_model(double value) {
  AEModel m = AEModel::zeros({1, 1});
  m.enc_w.setConstant(value);
  m.enc_b.setConstant(value);
  m.dec_w.setConstant(value);
  m.dec_b.setConstant(value);
  return m;
}

struct Fixture {
  AEModel global;
  std::vector<TrainingShard> shards;
  std::vector<VehicleState> vehicles;
  FederationConfig cfg;

  explicit Fixture(std::size_t n_vehicles) {
    Rng rng(17);
    global = init_model({6, 3}, rng);
    for (std::size_t i = 0; i < n_vehicles; ++i) {
      TrainingShard s;
      const auto cols = 2 + static_cast<Eigen::Index>(i);
      s.samples.resize(6, cols);
      for (Eigen::Index k = 0; k < s.samples.size(); ++k) s.samples.data()[k] = uniform01(rng);
      s.data_size = static_cast<std::size_t>(3 * cols);
      shards.push_back(std::move(s));
      VehicleState v;
      v.id = 100 + i;
      v.position_m = 50.0 * static_cast<double>(i);
      v.velocity_mps = 15.0;
      v.partition = i;
      v.rates = {1e6 * static_cast<double>(i + 1), 2e6};
      vehicles.push_back(std::move(v));
    }
    cfg.train.epochs = 2;
  }
};

TEST(AggregationWeight, DocumentedCorners) {
  const std::vector<double> rates{1.0, 4.0, 2.0};
  EXPECT_DOUBLE_EQ(aggregation_weight(0.0, 4.0, rates, kCoverage, 0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(aggregation_weight(kCoverage, 4.0, rates, kCoverage, 0.5, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(aggregation_weight(250.0, 1.0, rates, kCoverage, 0.5, 0.5), 0.5 * 0.75 + 0.5 * 0.25);
}

TEST(AggregationWeight, StaysInUnitInterval) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> rates(1 + uniform_index(rng, 5));
    for (auto& r : rates) r = 1e6 * uniform01(rng) + 1.0;
    const double mu1 = uniform01(rng);
    const double chi = aggregation_weight(kCoverage * uniform01(rng), rates[0], rates, kCoverage, mu1, 1.0 - mu1);
    EXPECT_GE(chi, 0.0);
    EXPECT_LE(chi, 1.0);
  }
}

TEST(AggregationWeight, RejectsDegenerateRates) {
  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_THROW((void)aggregation_weight(0.0, 0.0, zeros, kCoverage, 0.5, 0.5), DegenerateInputError);
  EXPECT_THROW((void)aggregation_weight(0.0, 0.0, std::vector<double>{}, kCoverage, 0.5, 0.5), DegenerateInputError);
}

TEST(AsyncAggregate, DocumentedExamples) {
  const auto prev = scalar_model(1.0), local = scalar_model(2.0);
  EXPECT_EQ(async_aggregate(prev, local, 5.0, 10.0, 0.0), prev);
  EXPECT_EQ(async_aggregate(prev, local, 10.0, 10.0, 1.0), local);
  EXPECT_DOUBLE_EQ(async_aggregate(prev, local, 5.0, 10.0, 0.8).enc_w(0, 0), 1.4);
  EXPECT_DOUBLE_EQ(async_aggregate(prev, local, 5.0, 10.0, 0.8, AggregationRule::Literal).dec_b(0), 1.8);
}

TEST(AsyncAggregate, ConvexModePreservesBounds) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = init_model({4, 2}, rng), b = init_model({4, 2}, rng);
    const double d = 1.0 + 9.0 * uniform01(rng);
    const auto out = async_aggregate(a, b, d * (0.01 + 0.99 * uniform01(rng)), d, uniform01(rng));
    auto check = [](const auto& o, const auto& x, const auto& y) {
      for (Eigen::Index i = 0; i < o.size(); ++i) {
        EXPECT_GE(o.data()[i], std::min(x.data()[i], y.data()[i]) - 1e-15);
        EXPECT_LE(o.data()[i], std::max(x.data()[i], y.data()[i]) + 1e-15);
      }
    };
    check(out.enc_w, a.enc_w, b.enc_w);
    check(out.enc_b, a.enc_b, b.enc_b);
    check(out.dec_w, a.dec_w, b.dec_w);
    check(out.dec_b, a.dec_b, b.dec_b);
  }
}

TEST(AsyncAggregate, ValidatesArguments) {
  const auto m = scalar_model(1.0);
  EXPECT_THROW((void)async_aggregate(m, AEModel::zeros({2, 1}), 1.0, 2.0, 0.5), DimensionError);
  EXPECT_THROW((void)async_aggregate(m, m, 0.0, 2.0, 0.5), DomainError);
  EXPECT_THROW((void)async_aggregate(m, m, 3.0, 2.0, 0.5), DomainError);
  EXPECT_THROW((void)async_aggregate(m, m, 1.0, 2.0, 1.5), DomainError);
}

TEST(FedAvg, DocumentedExamples) {
  const auto one = scalar_model(1.0), three = scalar_model(3.0), zero = scalar_model(0.0), four = scalar_model(4.0);
  std::vector<WeightedModel> same{{&one, 2.0}, {&one, 5.0}};
  EXPECT_EQ(fedavg_aggregate(same), one);
  std::vector<WeightedModel> equal{{&one, 1.0}, {&three, 1.0}};
  EXPECT_DOUBLE_EQ(fedavg_aggregate(equal).enc_w(0, 0), 2.0);
  std::vector<WeightedModel> weighted{{&zero, 1.0}, {&four, 3.0}};
  EXPECT_DOUBLE_EQ(fedavg_aggregate(weighted).dec_b(0), 3.0);
  EXPECT_THROW((void)fedavg_aggregate(std::vector<WeightedModel>{}), DomainError);
}

TEST(FedAvg, PermutationInvariant) {
  Rng rng(3);
  std::vector<AEModel> models;
  for (int i = 0; i < 5; ++i) models.push_back(init_model({5, 2}, rng));
  std::vector<WeightedModel> locals;
  for (int i = 0; i < 5; ++i) locals.push_back({&models[static_cast<std::size_t>(i)], 1.0 + i});
  const auto base = fedavg_aggregate(locals);
  std::reverse(locals.begin(), locals.end());
  EXPECT_LT(squared_distance(base, fedavg_aggregate(locals)), 1e-28);
  std::rotate(locals.begin(), locals.begin() + 2, locals.end());
  EXPECT_LT(squared_distance(base, fedavg_aggregate(locals)), 1e-28);
}

TEST(CompletionTime, ComputeJitterAndUpload) {
  FederationConfig cfg;
  cfg.jitter_frac = 0.0;
  Rng rng(4);
  EXPECT_DOUBLE_EQ(completion_time(30.0, 20.0, 1e6, 2e6, cfg, rng), 2.0 * 1.5 + 2.0);
  cfg.jitter_frac = 0.1;
  for (int i = 0; i < 100; ++i) {
    const double t = completion_time(20.0, 20.0, 1e6, 0.0, cfg, rng);
    EXPECT_GE(t, 2.0);
    EXPECT_LE(t, 2.2);
  }
}

TEST(RunFlRound, SingleVehicleWinsAndMatchesFedAvg) {
  Fixture async_env(1), fedavg_env(1);
  fedavg_env.cfg.mode = FlMode::FedAvg;
  const auto a = run_fl_round(async_env.global, async_env.vehicles, async_env.shards, async_env.cfg, 1, kCoverage, 7);
  const auto f = run_fl_round(fedavg_env.global, fedavg_env.vehicles, fedavg_env.shards, fedavg_env.cfg, 1, kCoverage, 7);
  ASSERT_TRUE(a.winner.has_value());
  EXPECT_EQ(*a.winner, 100u);
  EXPECT_TRUE(a.stragglers.empty());
  EXPECT_DOUBLE_EQ(a.chi, 1.0);
  EXPECT_EQ(a.new_global, f.new_global);
  EXPECT_DOUBLE_EQ(a.wall_time_s, f.wall_time_s);
}

TEST(RunFlRound, AsyncAggregatesOnlyTheFirstArrival) {
  Fixture env(4);
  const auto out = run_fl_round(env.global, env.vehicles, env.shards, env.cfg, 3, kCoverage, 11);
  ASSERT_EQ(out.participants.size(), 4u);
  ASSERT_TRUE(out.winner.has_value());
  const auto first = static_cast<std::size_t>(std::min_element(out.completion_times_s.begin(), out.completion_times_s.end()) -
                                              out.completion_times_s.begin());
  EXPECT_EQ(*out.winner, out.participants[first]);
  EXPECT_DOUBLE_EQ(out.wall_time_s, out.completion_times_s[first]);
  EXPECT_EQ(out.stragglers.size(), 3u);

  // Recompute the winner's update from its own rng stream and fold it in by hand.
  const auto& w = env.vehicles[first];
  Rng train_rng = make_rng(11, {stream::kTraining, 3, w.id});
  const auto local = vehicle_update(env.global, env.shards[w.partition].samples, env.cfg.train, 3, nullptr, train_rng);
  std::vector<double> rates;
  for (const auto& v : env.vehicles) rates.push_back(v.rates.rsu_bps);
  const double chi = aggregation_weight(w.position_m, w.rates.rsu_bps, rates, kCoverage, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(out.chi, chi);
  const auto expected = async_aggregate(env.global, local.model, static_cast<double>(out.data_sizes[first]),
                                        static_cast<double>(out.total_data), chi);
  EXPECT_EQ(out.new_global, expected);

  for (std::size_t i = 0; i < env.vehicles.size(); ++i) EXPECT_EQ(env.vehicles[i].delayed_gradient != nullptr, i != first);
}

TEST(RunFlRound, FedAvgWaitsForSlowestParticipant) {
  Fixture env(4);
  env.cfg.mode = FlMode::FedAvg;
  const auto out = run_fl_round(env.global, env.vehicles, env.shards, env.cfg, 2, kCoverage, 5);
  EXPECT_FALSE(out.winner.has_value());
  EXPECT_TRUE(out.stragglers.empty());
  EXPECT_DOUBLE_EQ(out.wall_time_s, *std::max_element(out.completion_times_s.begin(), out.completion_times_s.end()));
  for (const auto& v : env.vehicles) EXPECT_EQ(v.delayed_gradient, nullptr);
}

TEST(RunFlRound, DelayedGradientsAreConsumedNextRound) {
  Fixture env(3);
  (void)run_fl_round(env.global, env.vehicles, env.shards, env.cfg, 1, kCoverage, 9);
  std::vector<bool> had(3);
  for (std::size_t i = 0; i < 3; ++i) had[i] = env.vehicles[i].delayed_gradient != nullptr;
  ASSERT_EQ(std::count(had.begin(), had.end(), true), 2);

  auto straggler = std::find(had.begin(), had.end(), true) - had.begin();
  auto with = env;
  auto without = env;
  without.vehicles[static_cast<std::size_t>(straggler)].delayed_gradient.reset();
  const auto a = run_fl_round(with.global, with.vehicles, with.shards, with.cfg, 2, kCoverage, 9);
  const auto b = run_fl_round(without.global, without.vehicles, without.shards, without.cfg, 2, kCoverage, 9);
  if (a.winner == env.vehicles[static_cast<std::size_t>(straggler)].id) EXPECT_NE(a.new_global, b.new_global);
  else EXPECT_EQ(a.new_global, b.new_global);
}

TEST(RunFlRound, SkipsIneligibleAndEmptyShards) {
  Fixture env(3);
  env.vehicles[0].position_m = kCoverage - 1.0;
  env.shards[1].samples.resize(6, 0);
  env.shards[1].data_size = 0;
  const auto out = run_fl_round(env.global, env.vehicles, env.shards, env.cfg, 1, kCoverage, 3);
  ASSERT_EQ(out.participants.size(), 1u);
  EXPECT_EQ(out.participants[0], 102u);

  env.vehicles[2].position_m = kCoverage - 1.0;
  const auto none = run_fl_round(env.global, env.vehicles, env.shards, env.cfg, 2, kCoverage, 3);
  EXPECT_TRUE(none.participants.empty());
  EXPECT_EQ(none.new_global, env.global);
  EXPECT_FALSE(none.winner.has_value());
}

TEST(RunFlRound, DeterministicGivenSeed) {
  Fixture a(5), b(5);
  EXPECT_EQ(run_fl_round(a.global, a.vehicles, a.shards, a.cfg, 4, kCoverage, 21).new_global,
            run_fl_round(b.global, b.vehicles, b.shards, b.cfg, 4, kCoverage, 21).new_global);
}

TEST(FederationConfig, Validation) {
  FederationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.mu1 = 0.7;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = FederationConfig{};
  cfg.t_training_s = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace cafr
