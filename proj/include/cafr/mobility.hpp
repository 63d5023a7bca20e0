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
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cafr/errors.hpp"
#include "cafr/random.hpp"

namespace cafr {

struct AEGradient;

using VehicleId = std::uint64_t;

enum class ArrivalMode { Density, Rate };

/// Road and traffic parameters. Velocities are configured in km/h.
struct MobilityParams {
  double mean_kmh = 55.0;
  double sigma_kmh = 2.5;
  double min_kmh = 50.0;
  double max_kmh = 60.0;
  double coverage_m = 1000.0;
  ArrivalMode arrival_mode = ArrivalMode::Density;
  double density_per_km = 15.0;
  double arrival_rate_per_s = 0.0;
  double round_duration_s = 10.0;

  void validate() const {
    if (!(min_kmh < max_kmh)) throw ConfigError("mobility: u_min must be < u_max");
    if (!(sigma_kmh > 0.0)) throw ConfigError("mobility: sigma must be positive");
    if (!(min_kmh > 0.0)) throw ConfigError("mobility: u_min must be positive");
    if (!(coverage_m > 0.0)) throw ConfigError("sim.coverage_m must be positive");
    if (!(density_per_km >= 0.0)) throw ConfigError("mobility.density must be >= 0");
    if (!(arrival_rate_per_s >= 0.0)) throw ConfigError("mobility.arrival_rate must be >= 0");
    if (!(round_duration_s > 0.0)) throw ConfigError("sim.round_duration_s must be positive");
  }
};

/// Per-round V2R / V2B link budget of one vehicle.
struct LinkRates {
  double rsu_bps = 0.0;
  double mbs_bps = 0.0;
};

struct VehicleState {
  VehicleId id = 0;
  double position_m = 0.0;    // distance traversed inside local RSU coverage
  double velocity_mps = 0.0;
  std::size_t partition = 0;  // index of the vehicle's LocalData
  std::shared_ptr<const AEGradient> delayed_gradient;
  LinkRates rates;
};

constexpr double kmh_to_mps(double kmh) noexcept { return kmh * (1000.0 / 3600.0); }
constexpr double mps_to_kmh(double mps) noexcept { return mps * (3600.0 / 1000.0); }

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double truncation_mass(const MobilityParams& p) {
  const double s = p.sigma_kmh * std::numbers::sqrt2;
  return 0.5 * (std::erf((p.max_kmh - p.mean_kmh) / s) - std::erf((p.min_kmh - p.mean_kmh) / s));
}

}  // namespace detail

/// Density of the truncated Gaussian velocity law (km/h domain).
inline double truncated_gaussian_pdf(double u_kmh, const MobilityParams& p) {
  if (u_kmh < p.min_kmh || u_kmh > p.max_kmh) return 0.0;
  const double norm = p.sigma_kmh * std::sqrt(2.0 * std::numbers::pi) * detail::truncation_mass(p);
  const double d = u_kmh - p.mean_kmh;
  return std::exp(-d * d / (2.0 * p.sigma_kmh * p.sigma_kmh)) / norm;
}

inline double truncated_gaussian_cdf(double u_kmh, const MobilityParams& p) {
  if (u_kmh <= p.min_kmh) return 0.0;
  if (u_kmh >= p.max_kmh) return 1.0;
  const double a = (p.min_kmh - p.mean_kmh) / p.sigma_kmh;
  const double z = (u_kmh - p.mean_kmh) / p.sigma_kmh;
  return (detail::std_normal_cdf(z) - detail::std_normal_cdf(a)) / detail::truncation_mass(p);
}

inline double truncated_gaussian_mean(const MobilityParams& p) {
  const double a = (p.min_kmh - p.mean_kmh) / p.sigma_kmh;
  const double b = (p.max_kmh - p.mean_kmh) / p.sigma_kmh;
  const double z = detail::std_normal_cdf(b) - detail::std_normal_cdf(a);
  return p.mean_kmh + p.sigma_kmh * (detail::std_normal_pdf(a) - detail::std_normal_pdf(b)) / z;
}

inline double truncated_gaussian_variance(const MobilityParams& p) {
  const double a = (p.min_kmh - p.mean_kmh) / p.sigma_kmh;
  const double b = (p.max_kmh - p.mean_kmh) / p.sigma_kmh;
  const double z = detail::std_normal_cdf(b) - detail::std_normal_cdf(a);
  const double pa = detail::std_normal_pdf(a), pb = detail::std_normal_pdf(b);
  const double t = (pa - pb) / z;
  return p.sigma_kmh * p.sigma_kmh * (1.0 + (a * pa - b * pb) / z - t * t);
}

/// Draws a velocity from the truncated Gaussian by rejection and returns it in m/s.
inline double sample_velocity(Rng& rng, const MobilityParams& p) {
  std::normal_distribution<double> gauss(p.mean_kmh, p.sigma_kmh);
  for (;;) {
    const double u = gauss(rng);
    if (u >= p.min_kmh && u <= p.max_kmh) return kmh_to_mps(u);
  }
}

/// Remaining time in coverage, (L_s - P) / U.
inline double staying_time(const VehicleState& v, double coverage_m) {
  if (!(v.velocity_mps > 0.0)) throw DomainError("staying_time: velocity must be positive");
  return (coverage_m - v.position_m) / v.velocity_mps;
}

/// Indices of vehicles whose staying time strictly exceeds training + inference time.
inline std::vector<std::size_t> select_participants(std::span<const VehicleState> vehicles, double coverage_m,
                                                    double t_training_s, double t_inference_s) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (staying_time(vehicles[i], coverage_m) > t_training_s + t_inference_s) picked.push_back(i);
  }
  return picked;
}

/// Probability that a vehicle entering at P = 0 is still in coverage at the start of its k-th
/// subsequent round, i.e. P(duration * (U_1 + ... + U_k) < L_s). Exact for k = 1, normal
/// approximation of the velocity sum beyond.
inline double residency_probability(const MobilityParams& p, int k) {
  if (k <= 0) return 1.0;
  const double limit_mps = p.coverage_m / (p.round_duration_s * k);
  if (k == 1) return truncated_gaussian_cdf(mps_to_kmh(limit_mps), p);
  const double mean = kmh_to_mps(truncated_gaussian_mean(p));
  const double sd = kmh_to_mps(std::sqrt(truncated_gaussian_variance(p))) / std::sqrt(static_cast<double>(k));
  return detail::std_normal_cdf((limit_mps - mean) / sd);
}

/// Expected number of rounds a new arrival spends in coverage, counting its arrival round.
inline double expected_residency_rounds(const MobilityParams& p) {
  double total = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double q = residency_probability(p, k);
    total += q;
    if (q < 1e-15) break;
  }
  return total;
}

/// Mean number of new arrivals per round. In density mode the arrival rate is chosen so the
/// stationary population is Poisson with mean density * coverage_km (thinned Poisson arrivals).
inline double arrivals_per_round(const MobilityParams& p) {
  if (p.arrival_mode == ArrivalMode::Rate) return p.arrival_rate_per_s * p.round_duration_s;
  return p.density_per_km * (p.coverage_m / 1000.0) / expected_residency_rounds(p);
}

inline double expected_population(const MobilityParams& p) {
  if (p.arrival_mode == ArrivalMode::Density) return p.density_per_km * (p.coverage_m / 1000.0);
  return arrivals_per_round(p) * expected_residency_rounds(p);
}

/// Advances survivors by one round, drops departed vehicles, admits Poisson arrivals at P = 0
/// and re-draws every velocity. New vehicles get ids from `next_id`.
inline std::vector<VehicleState> spawn_round(Rng& rng, const MobilityParams& p,
                                             std::span<const VehicleState> previous, VehicleId& next_id) {
  std::vector<VehicleState> out;
  out.reserve(previous.size() + 4);
  for (const auto& v : previous) {
    VehicleState moved = v;
    moved.position_m += v.velocity_mps * p.round_duration_s;
    if (moved.position_m >= p.coverage_m) continue;
    out.push_back(std::move(moved));
  }
  const double lambda = arrivals_per_round(p);
  const long arrivals = lambda > 0.0 ? std::poisson_distribution<long>(lambda)(rng) : 0;
  for (long i = 0; i < arrivals; ++i) {
    VehicleState v;
    v.id = next_id++;
    v.position_m = 0.0;
    out.push_back(std::move(v));
  }
  for (auto& v : out) v.velocity_mps = sample_velocity(rng, p);
  return out;
}

/// Rounds of spawning from an empty road needed to reach the stationary population.
inline int warm_up_rounds(const MobilityParams& p) {
  int k = 0;
  while (k < 100000 && residency_probability(p, k) > 1e-12) ++k;
  return k;
}

/// Stationary starting population: spawns from an empty road for warm_up_rounds().
inline std::vector<VehicleState> initial_population(Rng& rng, const MobilityParams& p, VehicleId& next_id) {
  std::vector<VehicleState> vehicles;
  const int rounds = warm_up_rounds(p);
  for (int i = 0; i < rounds; ++i) vehicles = spawn_round(rng, p, vehicles, next_id);
  return vehicles;
}

}  // namespace cafr
