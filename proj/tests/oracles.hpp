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

// Independent reference computations shared by the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cafr/autoencoder.hpp"
#include "cafr/cache_state.hpp"
#include "cafr/popularity.hpp"
#include "cafr/dueling_net.hpp"
#include "cafr/random.hpp"

namespace cafr::oracle {

inline constexpr double kFdStep = 1e-5;

/// ||a - b|| / max(||a||, ||b||), with both vectors near zero counting as agreement.
inline double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  if (scale < 1e-12) return 0.0;
  return (analytic - numeric).norm() / scale;
}

/// Central differences of `loss` with respect to every entry of `block`.
template <typename Block>
Eigen::VectorXd central_differences(Block& block, const std::function<double()>& loss) {
  Eigen::VectorXd out(block.size());
  for (Eigen::Index i = 0; i < block.size(); ++i) {
    const double saved = block.data()[i];
    block.data()[i] = saved + kFdStep;
    const double up = loss();
    block.data()[i] = saved - kFdStep;
    const double down = loss();
    block.data()[i] = saved;
    out(i) = (up - down) / (2.0 * kFdStep);
  }
  return out;
}

template <typename Block>
Eigen::VectorXd flat(const Block& b) {
  return Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
}

/// Worst blockwise relative error of the analytic regularised-loss gradient on a random tiny model.
inline double autoencoder_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  const AEShape shape{2 + static_cast<Eigen::Index>(uniform_index(rng, 6)), 1 + static_cast<Eigen::Index>(uniform_index(rng, 4))};
  const auto enc = uniform_index(rng, 2) ? Activation::Tanh : Activation::Sigmoid;
  const auto dec = uniform_index(rng, 2) ? Activation::Tanh : Activation::Sigmoid;
  AEModel local = init_model(shape, rng, enc, dec);
  const AEModel global = init_model(shape, rng, enc, dec);
  const auto n = 1 + static_cast<Eigen::Index>(uniform_index(rng, 5));
  Eigen::MatrixXd batch(shape.input, n);
  for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = uniform01(rng);
  const double rho = 0.5 * uniform01(rng);

  const AEGradient g = gradient(local, global, batch, rho);
  const std::function<double()> loss = [&] { return regularized_loss(local, global, batch, rho); };
  double worst = 0.0;
  worst = std::max(worst, relative_error(flat(g.enc_w), central_differences(local.enc_w, loss)));
  worst = std::max(worst, relative_error(flat(g.enc_b), central_differences(local.enc_b, loss)));
  worst = std::max(worst, relative_error(flat(g.dec_w), central_differences(local.dec_w, loss)));
  worst = std::max(worst, relative_error(flat(g.dec_b), central_differences(local.dec_b, loss)));
  return worst;
}

/// Worst blockwise relative error of the analytic Q-loss gradient on a random tiny dueling network.
inline double dueling_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  const auto input = 1 + static_cast<Eigen::Index>(uniform_index(rng, 5));
  const auto hidden = 1 + static_cast<Eigen::Index>(uniform_index(rng, 5));
  DuelingNet net = init_dueling_net(input, hidden, rng);
  const auto n = 1 + static_cast<std::size_t>(uniform_index(rng, 6));
  Eigen::MatrixXd states(input, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = uniform01(rng);
  std::vector<int> actions(n);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    actions[i] = static_cast<int>(uniform_index(rng, 2));
    targets[i] = 4.0 * uniform01(rng) - 2.0;
  }

  const DuelingNet g = dqn_gradient(net, states, actions, targets);
  const std::function<double()> loss = [&] { return dqn_loss(net, states, actions, targets); };
  double worst = 0.0;
  worst = std::max(worst, relative_error(flat(g.feat_w), central_differences(net.feat_w, loss)));
  worst = std::max(worst, relative_error(flat(g.feat_b), central_differences(net.feat_b, loss)));
  worst = std::max(worst, relative_error(flat(g.val_w), central_differences(net.val_w, loss)));
  worst = std::max(worst, relative_error(flat(g.val_b), central_differences(net.val_b, loss)));
  worst = std::max(worst, relative_error(flat(g.adv_w), central_differences(net.adv_w, loss)));
  worst = std::max(worst, relative_error(flat(g.adv_b), central_differences(net.adv_b, loss)));
  return worst;
}

/// Six popular contents, capacity 2, slow links; requests hit only the contents ranked 0 and 2.
struct ToyInstance {
  PopularContents popular;
  std::vector<VehicleRequests> requests;
  std::size_t capacity = 2;
  DeliveryParams delivery;
  RewardWeights weights;
};

inline ToyInstance toy_instance() {
  ToyInstance t;
  for (ContentId id = 0; id < 6; ++id) t.popular.ranked.push_back({10 + id, 6 - static_cast<std::size_t>(id)});
  t.requests = {{0, {800.0, 400.0}, {10, 12}}, {1, {1600.0, 800.0}, {10}}, {2, {900.0, 500.0}, {12, 10}}};
  return t;
}

struct BruteForceOptimum {
  double reward = 0.0;
  CacheState state;
};

/// Enumerates every disjoint (local, neighbor) pair of c-subsets of the popular contents and
/// scores each with the direct per-request reward sum.
inline BruteForceOptimum brute_force_placement(const PopularContents& popular, std::span<const VehicleRequests> requests,
                                               std::size_t c, const DeliveryParams& delivery, const RewardWeights& weights) {
  const auto ids = popular.ids();
  const std::size_t n = ids.size();
  BruteForceOptimum best{-1.0, {}};
  for (std::uint32_t local_mask = 0; local_mask < (1u << n); ++local_mask) {
    if (static_cast<std::size_t>(__builtin_popcount(local_mask)) != c) continue;
    for (std::uint32_t nb_mask = 0; nb_mask < (1u << n); ++nb_mask) {
      if ((nb_mask & local_mask) != 0 || static_cast<std::size_t>(__builtin_popcount(nb_mask)) != c) continue;
      CacheState cs;
      for (std::size_t i = 0; i < n; ++i) {
        if (local_mask & (1u << i)) cs.local.push_back(ids[i]);
        if (nb_mask & (1u << i)) cs.neighbor.push_back(ids[i]);
      }
      const double r = slot_reward(cs, requests, delivery, weights);
      if (r > best.reward) best = {r, cs};
    }
  }
  return best;
}

}  // namespace cafr::oracle
