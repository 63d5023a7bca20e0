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

#include <cmath>
#include <random>

#include "cafr/errors.hpp"
#include "cafr/mobility.hpp"
#include "cafr/random.hpp"

namespace cafr {

/// Log-distance path loss, PL(d) = intercept + slope * log10(d_km), plus log-normal shadowing.
struct PathLossModel {
  double intercept_db = 0.0;
  double slope = 0.0;
  double shadow_sigma_db = 0.0;

  double path_loss_db(double distance_m) const { return intercept_db + slope * std::log10(distance_m / 1000.0); }
};

struct ChannelParams {
  double bandwidth_hz = 540e3;
  double p_rsu_dbm = 30.0;
  double p_mbs_dbm = 43.0;
  double noise_dbm = -114.0;  // total noise power over the band
  double wired_rate_bps = 15e6;
  PathLossModel v2r{103.8, 20.9, 4.0};
  PathLossModel v2b{128.1, 37.6, 8.0};
  double rsu_offset_m = 10.0;
  double mbs_offset_m = 25.0;

  void validate() const {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("channel.bandwidth_hz must be positive");
    if (!(wired_rate_bps > 0.0)) throw ConfigError("channel.wired_rate_bps must be positive");
    if (v2r.shadow_sigma_db < 0.0 || v2b.shadow_sigma_db < 0.0)
      throw ConfigError("channel shadowing sigma must be >= 0");
    if (!(rsu_offset_m > 0.0) || !(mbs_offset_m > 0.0)) throw ConfigError("geometry offsets must be positive");
  }
};

enum class Endpoint { LocalRsu, Mbs };
enum class Link { V2R, V2B };

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

/// Euclidean distance from a road position to the RSU or MBS. Both sit abeam the
/// coverage midpoint, set back by their configured offsets.
inline double distance(Endpoint endpoint, double position_m, const ChannelParams& params, double coverage_m) {
  const double along = position_m - coverage_m / 2.0;
  const double offset = endpoint == Endpoint::LocalRsu ? params.rsu_offset_m : params.mbs_offset_m;
  return std::hypot(along, offset);
}

inline double distance(Endpoint endpoint, const VehicleState& v, const ChannelParams& params, double coverage_m) {
  return distance(endpoint, v.position_m, params, coverage_m);
}

/// Gain with a fixed shadowing term in dB (no randomness).
inline double channel_gain_with_shadowing(double distance_m, const PathLossModel& model, double shadowing_db) {
  if (!(distance_m > 0.0)) throw DomainError("channel_gain: distance must be positive");
  return std::pow(10.0, -(model.path_loss_db(distance_m) + shadowing_db) / 10.0);
}

/// Linear power gain: path loss times a log-normal shadowing draw.
inline double channel_gain(Rng& rng, double distance_m, Link link, const ChannelParams& params) {
  if (!(distance_m > 0.0)) throw DomainError("channel_gain: distance must be positive");
  const PathLossModel& model = link == Link::V2R ? params.v2r : params.v2b;
  double shadow = 0.0;
  if (model.shadow_sigma_db > 0.0) shadow = std::normal_distribution<double>(0.0, model.shadow_sigma_db)(rng);
  return channel_gain_with_shadowing(distance_m, model, shadow);
}

/// Shannon rate B log2(1 + p h / noise) in bits/s.
inline double shannon_rate(double gain, double tx_power_dbm, const ChannelParams& params) {
  const double snr = dbm_to_mw(tx_power_dbm) * gain / dbm_to_mw(params.noise_dbm);
  return params.bandwidth_hz * std::log2(1.0 + snr);
}

/// Draws this round's V2R and V2B rates for a vehicle at `position_m`.
inline LinkRates draw_link_rates(Rng& rng, double position_m, const ChannelParams& params, double coverage_m) {
  LinkRates r;
  const double d_rsu = distance(Endpoint::LocalRsu, position_m, params, coverage_m);
  const double d_mbs = distance(Endpoint::Mbs, position_m, params, coverage_m);
  r.rsu_bps = shannon_rate(channel_gain(rng, d_rsu, Link::V2R, params), params.p_rsu_dbm, params);
  r.mbs_bps = shannon_rate(channel_gain(rng, d_mbs, Link::V2B, params), params.p_mbs_dbm, params);
  return r;
}

}  // namespace cafr
