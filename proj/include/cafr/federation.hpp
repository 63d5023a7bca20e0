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
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cafr/autoencoder.hpp"
#include "cafr/errors.hpp"
#include "cafr/log.hpp"
#include "cafr/mobility.hpp"
#include "cafr/random.hpp"

namespace cafr {

enum class FlMode { Async, FedAvg };
enum class AggregationRule {
  Convex,   // (1 - gamma) * prev + gamma * local
  Literal,  // prev + gamma * local
};

struct FederationConfig {
  FlMode mode = FlMode::Async;
  AggregationRule aggregation = AggregationRule::Convex;
  double mu1 = 0.5;  // remaining-distance weight
  double mu2 = 0.5;  // channel-rate weight
  double t_training_s = 2.0;
  double t_inference_s = 0.5;
  double jitter_frac = 0.1;        // completion jitter ~ U(0, jitter_frac * t_training)
  double bits_per_parameter = 32;  // upload payload per model parameter
  TrainConfig train;

  void validate() const {
    if (mu1 < 0.0 || mu2 < 0.0 || std::abs(mu1 + mu2 - 1.0) > 1e-9) throw ConfigError("fl: mu1, mu2 >= 0 with mu1 + mu2 = 1");
    if (!(t_training_s > 0.0) || t_inference_s < 0.0) throw ConfigError("fl: t_training > 0, t_inference >= 0");
    if (jitter_frac < 0.0) throw ConfigError("fl.jitter_frac must be >= 0");
    if (!(bits_per_parameter > 0.0)) throw ConfigError("fl.bits_per_parameter must be > 0");
    train.validate();
  }
};

/// Mobility/rate weight of one vehicle: mu1 * remaining-distance share + mu2 * rate share.
inline double aggregation_weight(double position_m, double rsu_rate_bps, std::span<const double> all_rates,
                                 double coverage_m, double mu1, double mu2) {
  if (all_rates.empty()) throw DegenerateInputError("aggregation_weight: no rates");
  const double max_rate = *std::max_element(all_rates.begin(), all_rates.end());
  if (!(max_rate > 0.0)) throw DegenerateInputError("aggregation_weight: maximum rate is zero");
  const double remaining = std::clamp((coverage_m - position_m) / coverage_m, 0.0, 1.0);
  return mu1 * remaining + mu2 * rsu_rate_bps / max_rate;
}

/// Folds one local model into the global model with weight (d_i / d) * chi.
inline AEModel async_aggregate(const AEModel& previous, const AEModel& local, double d_i, double d, double chi,
                               AggregationRule rule = AggregationRule::Convex) {
  if (!previous.same_shape(local)) throw DimensionError("async_aggregate: shape mismatch");
  if (!(d_i > 0.0) || d_i > d) throw DomainError("async_aggregate: need 0 < d_i <= d");
  if (chi < 0.0 || chi > 1.0) throw DomainError("async_aggregate: chi must be in [0, 1]");
  const double gamma = d_i / d * chi;
  AEModel out = previous;
  if (rule == AggregationRule::Convex) out.scale(1.0 - gamma);
  out.add_scaled(local, gamma);
  return out;
}

struct WeightedModel {
  const AEModel* model = nullptr;
  double data_size = 0.0;
};

/// Data-size weighted average of the local models.
inline AEModel fedavg_aggregate(std::span<const WeightedModel> locals) {
  if (locals.empty()) throw DomainError("fedavg_aggregate: no local models");
  double total = 0.0;
  for (const auto& l : locals) total += l.data_size;
  if (!(total > 0.0)) throw DomainError("fedavg_aggregate: total data size must be positive");
  AEModel out = *locals.front().model;
  static_cast<AEBlocks&>(out).resize_zero(out.shape());
  for (const auto& l : locals) out.add_scaled(*l.model, l.data_size / total);
  return out;
}

/// Training input of one vehicle's partition.
struct TrainingShard {
  Eigen::MatrixXd samples;     // C x n, one VU rating vector per column
  std::size_t data_size = 0;   // number of rating records
};

/// Finish time of a local training: data-proportional compute, jitter and model upload.
inline double completion_time(double d_i, double mean_d, double rsu_rate_bps, double model_bits,
                              const FederationConfig& cfg, Rng& rng) {
  const double jitter = cfg.jitter_frac > 0.0 ? uniform01(rng) * cfg.jitter_frac * cfg.t_training_s : 0.0;
  const double upload = rsu_rate_bps > 0.0 ? model_bits / rsu_rate_bps : std::numeric_limits<double>::infinity();
  return cfg.t_training_s * (d_i / mean_d) + jitter + upload;
}

struct RoundOutcome {
  AEModel new_global;
  std::optional<VehicleId> winner;
  std::vector<VehicleId> participants;
  std::vector<VehicleId> stragglers;
  std::vector<double> completion_times_s;  // aligned with participants
  std::vector<std::size_t> data_sizes;     // aligned with participants
  std::size_t total_data = 0;
  double chi = 0.0;          // weight of the aggregated model (async)
  double wall_time_s = 0.0;  // winner's finish (async) or last finish (fedavg)
};

/// One federated round over the vehicles in coverage. Delayed gradients on `vehicles` are
/// consumed by participants and refreshed for stragglers.
inline RoundOutcome run_fl_round(const AEModel& global, std::vector<VehicleState>& vehicles,
                                 std::span<const TrainingShard> shards, const FederationConfig& cfg, int round,
                                 double coverage_m, std::uint64_t seed) {
  RoundOutcome out;
  out.new_global = global;

  std::vector<std::size_t> selected;
  for (std::size_t idx : select_participants(vehicles, coverage_m, cfg.t_training_s, cfg.t_inference_s)) {
    const auto& shard = shards[vehicles[idx].partition];
    if (shard.samples.cols() == 0 || shard.data_size == 0) {
      logger()->warn("fl round {}: vehicle {} has no training data, skipped", round, vehicles[idx].id);
      continue;
    }
    selected.push_back(idx);
  }
  if (selected.empty()) {
    logger()->info("fl round {}: no eligible vehicles, global model unchanged", round);
    return out;
  }

  std::vector<double> rates;
  double mean_d = 0.0;
  for (std::size_t idx : selected) {
    rates.push_back(vehicles[idx].rates.rsu_bps);
    out.total_data += shards[vehicles[idx].partition].data_size;
  }
  mean_d = static_cast<double>(out.total_data) / static_cast<double>(selected.size());
  const double model_bits = static_cast<double>(global.parameter_count()) * cfg.bits_per_parameter;

  std::vector<LocalUpdate> updates;
  updates.reserve(selected.size());
  for (std::size_t idx : selected) {
    auto& v = vehicles[idx];
    const auto& shard = shards[v.partition];
    Rng train_rng = make_rng(seed, {stream::kTraining, static_cast<std::uint64_t>(round), v.id});
    Rng clock_rng = make_rng(seed, {stream::kCompletion, static_cast<std::uint64_t>(round), v.id});
    updates.push_back(vehicle_update(global, shard.samples, cfg.train, round, v.delayed_gradient.get(), train_rng));
    out.participants.push_back(v.id);
    out.data_sizes.push_back(shard.data_size);
    out.completion_times_s.push_back(
        completion_time(static_cast<double>(shard.data_size), mean_d, v.rates.rsu_bps, model_bits, cfg, clock_rng));
    v.delayed_gradient.reset();
  }

  const auto d = static_cast<double>(out.total_data);
  if (cfg.mode == FlMode::FedAvg) {
    std::vector<WeightedModel> locals;
    for (std::size_t i = 0; i < updates.size(); ++i)
      locals.push_back({&updates[i].model, static_cast<double>(out.data_sizes[i])});
    out.new_global = fedavg_aggregate(locals);
    out.wall_time_s = *std::max_element(out.completion_times_s.begin(), out.completion_times_s.end());
    return out;
  }

  // First arrival wins; ties go to the earlier vehicle in coverage order.
  const auto first = static_cast<std::size_t>(
      std::min_element(out.completion_times_s.begin(), out.completion_times_s.end()) - out.completion_times_s.begin());
  const auto& winner = vehicles[selected[first]];
  out.winner = winner.id;
  out.wall_time_s = out.completion_times_s[first];
  out.chi = aggregation_weight(winner.position_m, winner.rates.rsu_bps, rates, coverage_m, cfg.mu1, cfg.mu2);
  out.new_global = async_aggregate(global, updates[first].model, static_cast<double>(out.data_sizes[first]), d,
                                   out.chi, cfg.aggregation);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (i == first) continue;
    out.stragglers.push_back(vehicles[selected[i]].id);
    vehicles[selected[i]].delayed_gradient = std::make_shared<const AEGradient>(std::move(updates[i].last_gradient));
  }
  return out;
}

}  // namespace cafr
