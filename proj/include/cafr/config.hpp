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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cafr/autoencoder.hpp"
#include "cafr/cache_state.hpp"
#include "cafr/channel.hpp"
#include "cafr/drl_cache.hpp"
#include "cafr/errors.hpp"
#include "cafr/federation.hpp"
#include "cafr/mobility.hpp"

namespace cafr {

enum class Scheme { Cafr, Random, CEpsGreedy, Thompson, CafrNoDrl, FedAvgCafr };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Cafr: return "cafr";
    case Scheme::Random: return "random";
    case Scheme::CEpsGreedy: return "ceps";
    case Scheme::Thompson: return "thompson";
    case Scheme::CafrNoDrl: return "cafr_nodrl";
    case Scheme::FedAvgCafr: return "fedavg_cafr";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::Cafr, Scheme::Random, Scheme::CEpsGreedy, Scheme::Thompson, Scheme::CafrNoDrl,
                   Scheme::FedAvgCafr})
    if (name == scheme_name(s)) return s;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

/// Which records of a vehicle feed the rating matrix used for popularity prediction.
enum class RatingSource { Train, Test, All };

enum class CorpusSource {
  Synthetic,  // MovieLens-1M shaped corpus generated in memory
  Zipf,       // small Zipf workload
  Directory,  // MovieLens-format files under data.path
};

struct DataConfig {
  CorpusSource source = CorpusSource::Synthetic;
  std::filesystem::path path;
  std::uint64_t synthetic_seed = 1000209;
  std::size_t zipf_users = 600;
  std::size_t zipf_catalog = 500;
  std::size_t zipf_per_user = 40;
  double zipf_exponent = 0.9;
  double train_frac = 0.998;
  std::size_t requests_per_vehicle = 10;
  std::size_t catalog_cap = 0;  // 0 keeps the full catalog
  std::size_t partitions = 0;  // 0 selects the expected vehicle population
};

struct PopularityConfig {
  int m = 3;
  std::size_t k = 10;
  std::size_t f_c = 0;  // 0 selects 2c
  RatingSource rating_source = RatingSource::Test;
};

struct ModelConfig {
  Eigen::Index hidden = 0;  // 0 selects 100 for a full catalog, 16 for a capped one
  Activation encoder = Activation::Sigmoid;
  Activation decoder = Activation::Sigmoid;
};

struct ExperimentConfig {
  std::vector<std::uint64_t> seeds{1};
  int rounds = 30;
  Scheme scheme = Scheme::Cafr;
  std::size_t capacity = 100;
  double ceps_epsilon = 0.1;
  MobilityParams mobility;
  ChannelParams channel;
  FederationConfig fl;
  DqnConfig drl;
  RewardWeights reward;
  double content_bits = 800.0;
  DataConfig data;
  PopularityConfig popularity;
  ModelConfig model;

  std::size_t f_c() const { return popularity.f_c != 0 ? popularity.f_c : 2 * capacity; }

  Eigen::Index hidden_size() const {
    if (model.hidden != 0) return model.hidden;
    return data.catalog_cap == 0 ? 100 : 16;
  }

  /// Number of local datasets the corpus is divided into.
  std::size_t partition_count() const {
    if (data.partitions != 0) return data.partitions;
    return static_cast<std::size_t>(std::max(1.0, std::round(expected_population(mobility))));
  }

  DeliveryParams delivery() const { return {content_bits, channel.wired_rate_bps}; }

  void validate() const {
    if (seeds.empty()) throw ConfigError("sim.seeds must not be empty");
    if (rounds < 1) throw ConfigError("sim.rounds must be >= 1");
    if (capacity < 1) throw ConfigError("sim.capacity must be >= 1");
    if (ceps_epsilon < 0.0 || ceps_epsilon > 1.0) throw ConfigError("baseline.ceps_epsilon must be in [0, 1]");
    if (!(content_bits > 0.0)) throw ConfigError("content.size_bits must be > 0");
    if (!(data.train_frac > 0.0 && data.train_frac < 1.0)) throw ConfigError("data.train_frac must be in (0, 1)");
    if (data.source == CorpusSource::Directory && data.path.empty()) throw ConfigError("data.path is required");
    if (popularity.m < 1 || popularity.k < 1) throw ConfigError("popularity.m and popularity.k must be >= 1");
    if (f_c() < 2 * capacity) throw ConfigError("popularity.f_c must be >= 2 * capacity");
    mobility.validate();
    channel.validate();
    fl.validate();
    drl.validate(capacity);
    reward.validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError("bad value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

template <typename E>
E parse_choice(std::string_view key, std::string_view text, std::initializer_list<std::pair<std::string_view, E>> options) {
  for (const auto& [name, value] : options)
    if (text == name) return value;
  throw ConfigError("bad value '" + std::string(text) + "' for " + std::string(key));
}

}  // namespace detail

/// Comma separated list of seeds.
inline std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = detail::trim(text.substr(0, comma));
    if (!item.empty()) out.push_back(detail::parse_number<std::uint64_t>("sim.seeds", item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("sim.seeds: empty list");
  return out;
}

/// Sets one configuration key. Throws ConfigError for unknown keys or malformed values.
inline void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  using Setter = std::function<void(ExperimentConfig&, std::string_view)>;
  auto num = [](auto member) -> Setter {
    return [member](ExperimentConfig& cfg, std::string_view v) {
      auto& field = member(cfg);
      field = detail::parse_number<std::remove_reference_t<decltype(field)>>("", v);
    };
  };
#define CAFR_NUM(name, expr) {name, num([](ExperimentConfig& x) -> auto& { return x.expr; })}
  static const std::map<std::string_view, Setter> table{
      {"sim.seed", [](ExperimentConfig& x, std::string_view v) { x.seeds = {detail::parse_number<std::uint64_t>("sim.seed", v)}; }},
      {"sim.seeds", [](ExperimentConfig& x, std::string_view v) { x.seeds = parse_seed_list(v); }},
      {"sim.scheme", [](ExperimentConfig& x, std::string_view v) { x.scheme = parse_scheme(v); }},
      CAFR_NUM("sim.rounds", rounds),
      CAFR_NUM("sim.capacity", capacity),
      CAFR_NUM("sim.coverage_m", mobility.coverage_m),
      CAFR_NUM("sim.round_duration_s", mobility.round_duration_s),
      CAFR_NUM("mobility.mu", mobility.mean_kmh),
      CAFR_NUM("mobility.sigma", mobility.sigma_kmh),
      CAFR_NUM("mobility.u_min", mobility.min_kmh),
      CAFR_NUM("mobility.u_max", mobility.max_kmh),
      CAFR_NUM("mobility.density", mobility.density_per_km),
      CAFR_NUM("mobility.arrival_rate", mobility.arrival_rate_per_s),
      {"mobility.arrival_mode", [](ExperimentConfig& x, std::string_view v) {
         x.mobility.arrival_mode = detail::parse_choice<ArrivalMode>(
             "mobility.arrival_mode", v, {{"density", ArrivalMode::Density}, {"rate", ArrivalMode::Rate}});
       }},
      CAFR_NUM("channel.bandwidth_hz", channel.bandwidth_hz),
      CAFR_NUM("channel.p_rsu_dbm", channel.p_rsu_dbm),
      CAFR_NUM("channel.p_mbs_dbm", channel.p_mbs_dbm),
      CAFR_NUM("channel.noise_dbm", channel.noise_dbm),
      CAFR_NUM("channel.wired_rate_bps", channel.wired_rate_bps),
      CAFR_NUM("channel.pathloss.v2r.intercept_db", channel.v2r.intercept_db),
      CAFR_NUM("channel.pathloss.v2r.slope", channel.v2r.slope),
      CAFR_NUM("channel.pathloss.v2r.shadow_sigma_db", channel.v2r.shadow_sigma_db),
      CAFR_NUM("channel.pathloss.v2b.intercept_db", channel.v2b.intercept_db),
      CAFR_NUM("channel.pathloss.v2b.slope", channel.v2b.slope),
      CAFR_NUM("channel.pathloss.v2b.shadow_sigma_db", channel.v2b.shadow_sigma_db),
      CAFR_NUM("geometry.rsu_offset_m", channel.rsu_offset_m),
      CAFR_NUM("geometry.mbs_offset_m", channel.mbs_offset_m),
      CAFR_NUM("content.size_bits", content_bits),
      {"data.source", [](ExperimentConfig& x, std::string_view v) {
         x.data.source = detail::parse_choice<CorpusSource>(
             "data.source", v,
             {{"synthetic", CorpusSource::Synthetic}, {"zipf", CorpusSource::Zipf}, {"movielens", CorpusSource::Directory}});
       }},
      {"data.path", [](ExperimentConfig& x, std::string_view v) {
         x.data.path = std::string(v);
         x.data.source = CorpusSource::Directory;
       }},
      CAFR_NUM("data.synthetic_seed", data.synthetic_seed),
      CAFR_NUM("data.zipf_users", data.zipf_users),
      CAFR_NUM("data.zipf_catalog", data.zipf_catalog),
      CAFR_NUM("data.zipf_per_user", data.zipf_per_user),
      CAFR_NUM("data.zipf_exponent", data.zipf_exponent),
      CAFR_NUM("data.train_frac", data.train_frac),
      CAFR_NUM("data.requests_per_vehicle", data.requests_per_vehicle),
      CAFR_NUM("data.catalog_cap", data.catalog_cap),
      CAFR_NUM("data.partitions", data.partitions),
      CAFR_NUM("model.hidden", model.hidden),
      {"model.encoder", [](ExperimentConfig& x, std::string_view v) {
         x.model.encoder = detail::parse_choice<Activation>("model.encoder", v,
                                                            {{"sigmoid", Activation::Sigmoid}, {"tanh", Activation::Tanh}});
       }},
      {"model.decoder", [](ExperimentConfig& x, std::string_view v) {
         x.model.decoder = detail::parse_choice<Activation>("model.decoder", v,
                                                            {{"sigmoid", Activation::Sigmoid}, {"tanh", Activation::Tanh}});
       }},
      {"fl.mode", [](ExperimentConfig& x, std::string_view v) {
         x.fl.mode = detail::parse_choice<FlMode>("fl.mode", v, {{"async", FlMode::Async}, {"fedavg", FlMode::FedAvg}});
       }},
      {"fl.aggregation", [](ExperimentConfig& x, std::string_view v) {
         x.fl.aggregation = detail::parse_choice<AggregationRule>(
             "fl.aggregation", v, {{"convex", AggregationRule::Convex}, {"literal", AggregationRule::Literal}});
       }},
      {"fl.local_update", [](ExperimentConfig& x, std::string_view v) {
         x.fl.train.rule = detail::parse_choice<UpdateRule>(
             "fl.local_update", v, {{"cumulative", UpdateRule::Cumulative}, {"literal", UpdateRule::Literal}});
       }},
      CAFR_NUM("fl.mu1", fl.mu1),
      CAFR_NUM("fl.mu2", fl.mu2),
      CAFR_NUM("fl.rho", fl.train.rho),
      CAFR_NUM("fl.beta", fl.train.beta),
      CAFR_NUM("fl.eta_l", fl.train.eta_l),
      CAFR_NUM("fl.epochs", fl.train.epochs),
      CAFR_NUM("fl.batch_size", fl.train.batch_size),
      CAFR_NUM("fl.t_training_s", fl.t_training_s),
      CAFR_NUM("fl.t_inference_s", fl.t_inference_s),
      CAFR_NUM("fl.jitter_frac", fl.jitter_frac),
      CAFR_NUM("fl.bits_per_parameter", fl.bits_per_parameter),
      CAFR_NUM("popularity.m", popularity.m),
      CAFR_NUM("popularity.k", popularity.k),
      CAFR_NUM("popularity.f_c", popularity.f_c),
      {"popularity.rating_source", [](ExperimentConfig& x, std::string_view v) {
         x.popularity.rating_source = detail::parse_choice<RatingSource>(
             "popularity.rating_source", v,
             {{"train", RatingSource::Train}, {"test", RatingSource::Test}, {"all", RatingSource::All}});
       }},
      CAFR_NUM("drl.hidden", drl.hidden),
      CAFR_NUM("drl.replay_capacity", drl.replay_capacity),
      CAFR_NUM("drl.minibatch", drl.minibatch),
      CAFR_NUM("drl.gamma", drl.gamma),
      CAFR_NUM("drl.learning_rate", drl.learning_rate),
      CAFR_NUM("drl.target_sync", drl.target_sync_slots),
      CAFR_NUM("drl.episodes", drl.episodes),
      CAFR_NUM("drl.slots", drl.slots_per_episode),
      CAFR_NUM("drl.swap_size", drl.swap_size),
      CAFR_NUM("drl.eps_start", drl.eps_start),
      CAFR_NUM("drl.eps_end", drl.eps_end),
      CAFR_NUM("drl.eps_decay_fraction", drl.eps_decay_fraction),
      {"drl.reward_scale", [](ExperimentConfig& x, std::string_view v) {
         x.drl.reward_scale = detail::parse_choice<RewardScale>(
             "drl.reward_scale", v, {{"normalized", RewardScale::Normalized}, {"raw", RewardScale::Raw}});
       }},
      CAFR_NUM("reward.lambda1", reward.lambda1),
      CAFR_NUM("reward.lambda2", reward.lambda2),
      CAFR_NUM("reward.lambda3", reward.lambda3),
      CAFR_NUM("baseline.ceps_epsilon", ceps_epsilon),
  };
#undef CAFR_NUM
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  try {
    it->second(c, value);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

/// Parses `key = value` lines; `#` starts a comment.
inline void apply_config(ExperimentConfig& c, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = detail::trim(view.substr(0, eq));
    const auto value = detail::trim(view.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError("empty key or value", line_no);
    try {
      apply_setting(c, key, value);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  ExperimentConfig c;
  apply_config(c, in);
  return c;
}

inline ExperimentConfig parse_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  ExperimentConfig c;
  apply_config(c, in);
  return c;
}

}  // namespace cafr
