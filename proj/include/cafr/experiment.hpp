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

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cafr/autoencoder.hpp"
#include "cafr/baselines.hpp"
#include "cafr/cache_state.hpp"
#include "cafr/channel.hpp"
#include "cafr/config.hpp"
#include "cafr/dataset.hpp"
#include "cafr/drl_cache.hpp"
#include "cafr/federation.hpp"
#include "cafr/log.hpp"
#include "cafr/metrics.hpp"
#include "cafr/mobility.hpp"
#include "cafr/popularity.hpp"
#include "cafr/random.hpp"
#include "cafr/synthetic_corpus.hpp"

namespace cafr {

/// Corpus named by the data configuration, with the catalog cap applied.
inline Corpus load_corpus(const DataConfig& d) {
  Corpus corpus;
  switch (d.source) {
    case CorpusSource::Directory:
      corpus = load_movielens_dir(d.path);
      break;
    case CorpusSource::Synthetic: {
      SyntheticCorpusParams p;
      p.seed = d.synthetic_seed;
      corpus = generate_synthetic_corpus(p).corpus;
      break;
    }
    case CorpusSource::Zipf:
      corpus = generate_synthetic_corpus(
                   zipf_workload(d.zipf_users, d.zipf_catalog, d.zipf_per_user, d.zipf_exponent, d.synthetic_seed))
                   .corpus;
      break;
  }
  if (d.catalog_cap != 0 && d.catalog_cap < corpus.catalog.size()) corpus = cap_catalog(corpus, d.catalog_cap);
  return corpus;
}

/// Metrics of one simulated round.
struct RoundRecord {
  std::uint64_t seed = 0;
  int round = 0;
  Scheme scheme = Scheme::Cafr;
  std::size_t capacity = 0;
  double density = 0.0;
  std::size_t vehicles = 0;
  std::size_t requests = 0;
  double hit_ratio_pct = 0.0;
  double avg_delay_s = 0.0;
  double per_request_delay_s = 0.0;
  double fl_round_time_s = 0.0;
  int episodes_to_converge = 0;
  std::optional<RoundOutcome> fl;       // federated round details (CAFR schemes)
  std::vector<EpisodeStats> episodes;  // optimizer curves (DRL schemes)
  CacheState placement;
};

/// One seeded simulation that advances round by round.
class Simulation {
 public:
  Simulation(const ExperimentConfig& cfg, const Corpus& corpus, std::uint64_t seed)
      : cfg_(cfg), corpus_(corpus), seed_(seed), catalog_size_(corpus.catalog.size()),
        mobility_rng_(make_rng(seed, {stream::kMobility})), history_(catalog_size_), posteriors_(catalog_size_) {
    cfg_.validate();
    if (catalog_size_ < 2 * cfg_.capacity) throw ConfigError("catalog must hold at least 2 * capacity contents");
    Rng part_rng = make_rng(seed, {stream::kPartition});
    const std::size_t n_parts = std::min(cfg_.partition_count(), corpus_.user_count());
    auto parts = partition(corpus_.records, corpus_.user_count(), n_parts, part_rng);
    partitions_.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      Rng split_rng = make_rng(seed, {stream::kSplit, i});
      if (parts[i].size() < 2) {
        logger()->warn("partition {} holds fewer than two records, left unsplit", i);
        partitions_.push_back(std::move(parts[i]));
        continue;
      }
      partitions_.push_back(split_train_test(parts[i], cfg_.data.train_frac, split_rng));
    }
    Rng init_rng = make_rng(seed, {stream::kModelInit});
    global_ = init_model({static_cast<Eigen::Index>(catalog_size_), cfg_.hidden_size()}, init_rng, cfg_.model.encoder,
                         cfg_.model.decoder);
    vehicles_ = initial_population(mobility_rng_, cfg_.mobility, next_vehicle_id_);
  }

  const std::vector<VehicleState>& vehicles() const noexcept { return vehicles_; }
  const AEModel& global_model() const noexcept { return global_; }
  const std::vector<LocalData>& partitions() const noexcept { return partitions_; }
  int rounds_done() const noexcept { return round_; }

  RoundRecord step() {
    ++round_;
    if (round_ > 1) vehicles_ = spawn_round(mobility_rng_, cfg_.mobility, vehicles_, next_vehicle_id_);
    const auto r = static_cast<std::uint64_t>(round_);
    for (auto& v : vehicles_) {
      if (v.id >= assigned_until_) v.partition = next_partition_++ % partitions_.size();
      Rng ch = make_rng(seed_, {stream::kChannel, r, v.id});
      v.rates = draw_link_rates(ch, v.position_m, cfg_.channel, cfg_.mobility.coverage_m);
    }
    assigned_until_ = next_vehicle_id_;

    std::vector<VehicleRequests> requests;
    for (const auto& v : vehicles_) {
      Rng req = make_rng(seed_, {stream::kRequests, r, v.id});
      auto contents = generate_requests(partitions_[v.partition], req, cfg_.data.requests_per_vehicle);
      if (!contents.empty()) requests.push_back({v.id, v.rates, std::move(contents)});
    }

    RoundRecord rec;
    rec.seed = seed_;
    rec.round = round_;
    rec.scheme = cfg_.scheme;
    rec.capacity = cfg_.capacity;
    rec.density = cfg_.mobility.density_per_km;
    rec.vehicles = vehicles_.size();
    rec.requests = request_count(requests);

    const std::size_t c = cfg_.capacity;
    Rng scheme_rng = make_rng(seed_, {stream::kScheme, r});
    switch (cfg_.scheme) {
      case Scheme::Random:
        rec.placement = random_policy(catalog_size_, c, scheme_rng);
        break;
      case Scheme::CEpsGreedy:
        rec.placement = c_eps_greedy(history_.counts(), c, cfg_.ceps_epsilon, scheme_rng);
        break;
      case Scheme::Thompson:
        rec.placement = thompson_sampling(posteriors_, c, scheme_rng);
        break;
      case Scheme::Cafr:
      case Scheme::FedAvgCafr:
      case Scheme::CafrNoDrl: {
        rec.fl = federated_round();
        rec.fl_round_time_s = rec.fl->wall_time_s;
        const auto popular = predict_popular(c);
        if (cfg_.scheme == Scheme::CafrNoDrl) {
          rec.placement = cafr_no_drl(popular, catalog_size_, c, scheme_rng);
        } else {
          Rng drl_rng = make_rng(seed_, {stream::kDrl, r});
          auto result =
              run_optimization(popular, requests, c, cfg_.delivery(), cfg_.reward, cfg_.drl, drl_rng);
          rec.placement = std::move(result.best);
          rec.episodes = std::move(result.episodes);
          rec.episodes_to_converge = episodes_to_converge(rec.episodes);
        }
        break;
      }
    }

    const auto events = serve_requests(round_, rec.placement, requests, cfg_.delivery());
    rec.hit_ratio_pct = cache_hit_ratio(events);
    rec.avg_delay_s = vehicles_.empty() ? 0.0 : avg_transmission_delay(events, vehicles_.size());
    rec.per_request_delay_s = per_request_delay(events);

    history_.record(requests);
    posteriors_.update(rec.placement, requests);
    drop_unused_shards();
    return rec;
  }

 private:
  struct Shard {
    TrainingShard training;
    RatingMatrix prediction;
    Eigen::MatrixXd info;
  };

  const Shard& shard(std::size_t p) {
    auto it = shards_.find(p);
    if (it != shards_.end()) return it->second;
    const auto& local = partitions_[p];
    Shard s;
    const RatingMatrix train = build_rating_matrix(local.vu_ids, local.train, catalog_size_);
    s.training.samples = train.values.transpose();
    s.training.data_size = local.train.size();
    switch (cfg_.popularity.rating_source) {
      case RatingSource::Train:
        s.prediction = train;
        break;
      case RatingSource::Test:
        s.prediction = build_rating_matrix(local.vu_ids, local.test, catalog_size_);
        break;
      case RatingSource::All: {
        std::vector<RatingRecord> all = local.train;
        all.insert(all.end(), local.test.begin(), local.test.end());
        s.prediction = build_rating_matrix(local.vu_ids, all, catalog_size_);
        break;
      }
    }
    s.info = personal_info_matrix(local.vu_ids, corpus_.users);
    return shards_.emplace(p, std::move(s)).first->second;
  }

  void drop_unused_shards() {
    std::vector<bool> used(partitions_.size(), false);
    for (const auto& v : vehicles_) used[v.partition] = true;
    std::erase_if(shards_, [&](const auto& kv) { return !used[kv.first]; });
  }

  RoundOutcome federated_round() {
    std::vector<TrainingShard> training(partitions_.size());
    for (const auto& v : vehicles_) training[v.partition] = shard(v.partition).training;
    FederationConfig fl = cfg_.fl;
    if (cfg_.scheme == Scheme::FedAvgCafr) fl.mode = FlMode::FedAvg;
    auto outcome = run_fl_round(global_, vehicles_, training, fl, round_, cfg_.mobility.coverage_m, seed_);
    global_ = outcome.new_global;
    return outcome;
  }

  PopularContents predict_popular(std::size_t c) {
    const std::size_t f_c = cfg_.f_c();
    std::vector<InterestSet> sets;
    for (const auto& v : vehicles_) {
      const auto& s = shard(v.partition);
      if (s.prediction.rows() == 0) continue;
      const Eigen::MatrixXd r_hat = reconstruct(global_, s.prediction);
      sets.push_back(predict_interested(s.prediction, r_hat, s.info, cfg_.popularity.m, cfg_.popularity.k, f_c));
    }
    PopularContents popular = aggregate_popular(sets, f_c);
    if (popular.size() < 2 * c) {
      logger()->warn("round {}: {} predicted popular contents for capacity {}, padding with random contents", round_,
                     popular.size(), c);
      Rng pad = make_rng(seed_, {stream::kPadding, static_cast<std::uint64_t>(round_)});
      for (ContentId id : detail::random_remainder(catalog_size_, popular.ids(), 2 * c - popular.size(), pad))
        popular.ranked.push_back({id, 0});
    }
    return popular;
  }

  ExperimentConfig cfg_;
  const Corpus& corpus_;
  std::uint64_t seed_;
  std::size_t catalog_size_;
  Rng mobility_rng_;
  std::vector<LocalData> partitions_;
  std::map<std::size_t, Shard> shards_;
  AEModel global_;
  std::vector<VehicleState> vehicles_;
  VehicleId next_vehicle_id_ = 0;
  VehicleId assigned_until_ = 0;
  std::size_t next_partition_ = 0;
  int round_ = 0;
  RequestHistory history_;
  BetaPosteriors posteriors_;
};

/// Runs every seed for the configured number of rounds.
inline std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg, const Corpus& corpus) {
  std::vector<RoundRecord> out;
  for (std::uint64_t seed : cfg.seeds) {
    Simulation sim(cfg, corpus, seed);
    for (int r = 0; r < cfg.rounds; ++r) {
      auto rec = sim.step();
      logger()->info("seed {} round {} {}: hit {:.2f}% delay {:.6g}s", seed, rec.round, scheme_name(rec.scheme),
                     rec.hit_ratio_pct, rec.avg_delay_s);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

struct MetricMeans {
  double hit_ratio_pct = 0.0;
  double avg_delay_s = 0.0;
  double per_request_delay_s = 0.0;
  double fl_round_time_s = 0.0;
  double episodes_to_converge = 0.0;
  std::size_t count = 0;

  void add(const RoundRecord& r) {
    hit_ratio_pct += r.hit_ratio_pct;
    avg_delay_s += r.avg_delay_s;
    per_request_delay_s += r.per_request_delay_s;
    fl_round_time_s += r.fl_round_time_s;
    episodes_to_converge += r.episodes_to_converge;
    ++count;
  }

  MetricMeans mean() const {
    MetricMeans m = *this;
    if (count == 0) return m;
    const auto n = static_cast<double>(count);
    m.hit_ratio_pct /= n;
    m.avg_delay_s /= n;
    m.per_request_delay_s /= n;
    m.fl_round_time_s /= n;
    m.episodes_to_converge /= n;
    return m;
  }
};

/// Mean of every round of every seed.
inline MetricMeans summarize(std::span<const RoundRecord> records) {
  MetricMeans m;
  for (const auto& r : records) m.add(r);
  return m.mean();
}

inline constexpr std::string_view kCsvHeader =
    "seed,round,scheme,capacity,density,hit_ratio_pct,avg_delay_s,fl_round_time_s,episodes_to_converge,"
    "per_request_delay_s";

namespace detail {

inline void write_csv_row(std::ostream& out, std::string_view seed, std::string_view round, Scheme scheme,
                          std::size_t capacity, double density, const MetricMeans& m) {
  fmt::print(out, "{},{},{},{},{:.6g},{:.6f},{:.9e},{:.9e},{:.3f},{:.9e}\n", seed, round, scheme_name(scheme), capacity,
             density, m.hit_ratio_pct, m.avg_delay_s, m.fl_round_time_s, m.episodes_to_converge,
             m.per_request_delay_s);
}

}  // namespace detail

/// Per-seed rows, per-round means over seeds ("mean"), and whole-run means ("all").
/// Records from several experiments may be concatenated; each (scheme, capacity, density)
/// group is written in order of first appearance.
inline void write_csv(std::ostream& out, std::span<const RoundRecord> records, bool header = true) {
  if (header) out << kCsvHeader << '\n';
  struct Key {
    Scheme scheme;
    std::size_t capacity;
    double density;
    bool operator==(const Key&) const = default;
  };
  std::vector<Key> groups;
  for (const auto& r : records) {
    const Key k{r.scheme, r.capacity, r.density};
    if (std::find(groups.begin(), groups.end(), k) == groups.end()) groups.push_back(k);
  }
  for (const auto& g : groups) {
    std::vector<const RoundRecord*> rows;
    for (const auto& r : records)
      if (Key{r.scheme, r.capacity, r.density} == g) rows.push_back(&r);
    std::map<std::uint64_t, MetricMeans> per_seed;
    std::map<int, MetricMeans> per_round;
    MetricMeans overall;
    for (const auto* r : rows) {
      MetricMeans one;
      one.add(*r);
      detail::write_csv_row(out, std::to_string(r->seed), std::to_string(r->round), g.scheme, g.capacity, g.density, one);
      per_seed[r->seed].add(*r);
      per_round[r->round].add(*r);
      overall.add(*r);
    }
    for (const auto& [round, m] : per_round)
      detail::write_csv_row(out, "mean", std::to_string(round), g.scheme, g.capacity, g.density, m.mean());
    for (const auto& [seed, m] : per_seed)
      detail::write_csv_row(out, std::to_string(seed), "all", g.scheme, g.capacity, g.density, m.mean());
    detail::write_csv_row(out, "mean", "all", g.scheme, g.capacity, g.density, overall.mean());
  }
}

}  // namespace cafr
