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
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cafr/cache_state.hpp"
#include "cafr/dueling_net.hpp"
#include "cafr/errors.hpp"
#include "cafr/log.hpp"
#include "cafr/popularity.hpp"
#include "cafr/random.hpp"

namespace cafr {

enum class RewardScale {
  Normalized,  // 0 when every request goes to the MBS, 1 when every request is served locally
  Raw,
};

struct DqnConfig {
  Eigen::Index hidden = 64;
  std::size_t replay_capacity = 10000;
  std::size_t minibatch = 32;
  double gamma = 0.99;
  double learning_rate = 0.01;
  int target_sync_slots = 20;
  int episodes = 20;
  int slots_per_episode = 100;
  std::size_t swap_size = 0;  // 0 selects max(1, c / 10)
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_fraction = 0.5;  // share of all slots over which epsilon decays linearly
  RewardScale reward_scale = RewardScale::Normalized;

  std::size_t swap_for(std::size_t c) const { return swap_size != 0 ? swap_size : std::max<std::size_t>(1, c / 10); }

  double epsilon_at(long slot_index) const {
    const double total = static_cast<double>(episodes) * slots_per_episode;
    const double decay = eps_decay_fraction * total;
    if (decay <= 0.0 || static_cast<double>(slot_index) >= decay) return eps_end;
    return eps_start + (eps_end - eps_start) * static_cast<double>(slot_index) / decay;
  }

  void validate(std::size_t c) const {
    if (hidden < 1 || minibatch < 1 || replay_capacity < minibatch) throw ConfigError("drl: hidden, minibatch >= 1 and capacity >= minibatch");
    if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("drl.gamma must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("drl.learning_rate must be > 0");
    if (target_sync_slots < 1 || episodes < 1 || slots_per_episode < 1) throw ConfigError("drl: sync, episodes, slots >= 1");
    if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0) throw ConfigError("drl: epsilon in [0, 1]");
    if (c >= 2 && swap_for(c) >= c) throw ConfigError("drl.swap_size must be < capacity");
  }
};

/// Popularity rank lookup (0 = most popular).
class PopularRanks {
 public:
  explicit PopularRanks(const PopularContents& popular) : ids_(popular.ids()) {
    for (std::size_t i = 0; i < ids_.size(); ++i) rank_.emplace(ids_[i], i);
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<ContentId>& ids() const noexcept { return ids_; }
  bool contains(ContentId id) const { return rank_.contains(id); }
  std::size_t rank(ContentId id) const {
    auto it = rank_.find(id);
    if (it == rank_.end()) throw DomainError("content is not among the popular contents");
    return it->second;
  }

  void sort_by_rank(std::vector<ContentId>& ids) const {
    std::sort(ids.begin(), ids.end(), [&](ContentId a, ContentId b) { return rank(a) < rank(b); });
  }

 private:
  std::vector<ContentId> ids_;
  std::unordered_map<ContentId, std::size_t> rank_;
};

/// Normalized popularity ranks of the locally cached contents, in slot order.
inline Eigen::VectorXd encode_state(const CacheState& cs, const PopularRanks& ranks) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(cs.local.size()));
  const double denom = ranks.size() > 1 ? static_cast<double>(ranks.size() - 1) : 1.0;
  for (std::size_t i = 0; i < cs.local.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = static_cast<double>(ranks.rank(cs.local[i])) / denom;
  return out;
}

/// Epsilon-greedy choice; the first slot of an episode always relocates, argmax ties relocate.
inline int select_action(const std::array<double, 2>& q, double epsilon, Rng& rng, int slot) {
  if (slot == 1) return 1;
  if (uniform01(rng) < epsilon) return static_cast<int>(uniform_index(rng, 2));
  return q[0] > q[1] ? 0 : 1;
}

/// Popular contents (in rank order) that are not in `cached`.
inline std::vector<ContentId> uncached_popular(const std::vector<ContentId>& cached, const PopularRanks& ranks) {
  std::vector<bool> taken(ranks.size(), false);
  for (ContentId id : cached)
    if (ranks.contains(id)) taken[ranks.rank(id)] = true;
  std::vector<ContentId> pool;
  pool.reserve(ranks.size());
  for (std::size_t r = 0; r < ranks.size(); ++r)
    if (!taken[r]) pool.push_back(ranks.ids()[r]);
  return pool;
}

/// Random neighbor placement: up to c contents drawn from the popular contents not cached locally.
inline std::vector<ContentId> draw_neighbor(const std::vector<ContentId>& local, const PopularRanks& ranks,
                                            std::size_t c, Rng& rng) {
  return sample_without_replacement(rng, uncached_popular(local, ranks), c);
}

/// Action 1 replaces the n lowest-ranked local contents with n random uncached popular ones;
/// action 0 keeps the local cache. The neighbor cache is re-drawn in both cases.
inline CacheState apply_action(const CacheState& cs, int action, const PopularRanks& ranks, std::size_t n, Rng& rng) {
  const std::size_t c = cs.local.size();
  if (n >= c && c > 0 && action == 1) throw DomainError("apply_action: swap size must be below capacity");
  CacheState next;
  next.local = cs.local;
  if (action == 1) {
    const auto pool = uncached_popular(cs.local, ranks);
    std::size_t swap = n;
    if (pool.size() < n) {
      logger()->info("apply_action: only {} uncached popular contents, swapping {}", pool.size(), pool.size());
      swap = pool.size();
    }
    next.local.resize(c - swap);
    for (ContentId id : sample_without_replacement(rng, pool, swap)) next.local.push_back(id);
    ranks.sort_by_rank(next.local);
  }
  next.neighbor = draw_neighbor(next.local, ranks, c, rng);
  return next;
}

/// Random starting placement: c popular contents locally, c others at the neighbor.
inline CacheState random_popular_state(const PopularRanks& ranks, std::size_t c, Rng& rng) {
  CacheState cs;
  cs.local = sample_without_replacement(rng, ranks.ids(), c);
  ranks.sort_by_rank(cs.local);
  cs.neighbor = draw_neighbor(cs.local, ranks, c, rng);
  return cs;
}

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

/// Fixed-capacity FIFO experience store.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }

  /// Minibatch of distinct stored transitions.
  std::vector<const Transition*> sample(Rng& rng, std::size_t count) const {
    std::vector<const Transition*> out;
    for (std::size_t i : sample_indices(rng, items_.size(), std::min(count, items_.size()))) out.push_back(&items_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest slot once full
  std::vector<Transition> items_;
};

/// r + gamma * max_a Q'(s', a)
inline double target_q(const DuelingNet& target, const Eigen::VectorXd& next_state, double reward, double gamma) {
  const auto q = q_values(target, next_state);
  return reward + gamma * std::max(q[0], q[1]);
}

/// One gradient step on a minibatch; returns the loss before the update.
inline double train_step(DuelingNet& net, const DuelingNet& target, std::span<const Transition* const> batch,
                         const DqnConfig& cfg) {
  if (batch.empty()) throw DomainError("train_step: empty minibatch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index dim = batch.front()->state.size();
  Eigen::MatrixXd states(dim, n);
  Eigen::MatrixXd next_states(dim, n);
  std::vector<int> actions(batch.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = batch[static_cast<std::size_t>(i)]->state;
    next_states.col(i) = batch[static_cast<std::size_t>(i)]->next_state;
    actions[static_cast<std::size_t>(i)] = batch[static_cast<std::size_t>(i)]->action;
  }
  const Eigen::MatrixXd q_next = dueling_forward(target, next_states).q;
  std::vector<double> targets(batch.size());
  for (Eigen::Index i = 0; i < n; ++i)
    targets[static_cast<std::size_t>(i)] = batch[static_cast<std::size_t>(i)]->reward + cfg.gamma * q_next.col(i).maxCoeff();

  const double loss = dqn_loss(net, states, actions, targets);
  net.add_scaled(dqn_gradient(net, states, actions, targets), -cfg.learning_rate);
  return loss;
}

struct EpisodeStats {
  double mean_reward = 0.0;             // raw slot reward
  double mean_normalized_reward = 0.0;  // see RewardTable::normalized
  double mean_hit_rate = 0.0;
  double mean_loss = 0.0;  // over slots that trained
  double best_reward = 0.0;
};

struct OptimizationResult {
  CacheState best;
  double best_reward = -std::numeric_limits<double>::infinity();
  std::vector<EpisodeStats> episodes;
  DuelingNet net;
};

/// Episodic dueling-DQN search over placements of the popular contents; returns the placement of
/// the best-reward slot and per-episode curves.
inline OptimizationResult run_optimization(const PopularContents& popular, std::span<const VehicleRequests> requests,
                                           std::size_t c, const DeliveryParams& delivery, const RewardWeights& weights,
                                           const DqnConfig& cfg, Rng& rng) {
  if (c < 1) throw ConfigError("run_optimization: capacity must be >= 1");
  if (popular.size() < 2 * c) throw ConfigError("run_optimization: need at least 2c popular contents");
  cfg.validate(c);
  const PopularRanks ranks(popular);
  const RewardTable table(requests, delivery, weights);
  const std::size_t n_swap = cfg.swap_for(c);

  OptimizationResult out;
  out.net = init_dueling_net(static_cast<Eigen::Index>(c), cfg.hidden, rng);
  DuelingNet target = out.net;
  ReplayBuffer buffer(cfg.replay_capacity);
  long slot_index = 0;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    CacheState cs = random_popular_state(ranks, c, rng);
    Eigen::VectorXd s = encode_state(cs, ranks);
    EpisodeStats stats;
    stats.best_reward = -std::numeric_limits<double>::infinity();
    int trained = 0;
    for (int slot = 1; slot <= cfg.slots_per_episode; ++slot) {
      const int action = select_action(q_values(out.net, s), cfg.epsilon_at(slot_index), rng, slot);
      CacheState next = apply_action(cs, action, ranks, n_swap, rng);
      const double reward = table.reward(next);
      const double scaled = cfg.reward_scale == RewardScale::Normalized ? table.normalized(reward) : reward;
      Eigen::VectorXd s_next = encode_state(next, ranks);
      buffer.push({s, action, scaled, s_next});
      if (buffer.size() > cfg.minibatch) {
        const auto batch = buffer.sample(rng, cfg.minibatch);
        stats.mean_loss += train_step(out.net, target, batch, cfg);
        ++trained;
      }
      ++slot_index;
      if (slot_index % cfg.target_sync_slots == 0) target = out.net;

      stats.mean_reward += reward;
      stats.mean_normalized_reward += table.normalized(reward);
      stats.mean_hit_rate += table.hit_rate(next);
      stats.best_reward = std::max(stats.best_reward, reward);
      if (reward > out.best_reward) {
        out.best_reward = reward;
        out.best = next;
      }
      cs = std::move(next);
      s = std::move(s_next);
    }
    const auto slots = static_cast<double>(cfg.slots_per_episode);
    stats.mean_reward /= slots;
    stats.mean_normalized_reward /= slots;
    stats.mean_hit_rate /= slots;
    stats.mean_loss = trained > 0 ? stats.mean_loss / trained : 0.0;
    out.episodes.push_back(stats);
  }
  return out;
}

/// Trailing moving average with the given window.
inline std::vector<double> smooth(std::span<const double> xs, std::size_t window) {
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

/// First episode (1-based) from which the window-3 smoothed hit-rate curve stays within 5% of
/// its final value.
inline int episodes_to_converge(std::span<const EpisodeStats> episodes) {
  if (episodes.empty()) return 0;
  std::vector<double> hit;
  for (const auto& e : episodes) hit.push_back(e.mean_hit_rate);
  const auto s = smooth(hit, 3);
  const double final_value = s.back();
  const double tol = 0.05 * std::abs(final_value);
  std::size_t first = s.size();
  while (first > 0 && std::abs(s[first - 1] - final_value) <= tol) --first;
  return static_cast<int>(first) + 1;
}

}  // namespace cafr
