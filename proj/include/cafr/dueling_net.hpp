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

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cafr/errors.hpp"
#include "cafr/random.hpp"

namespace cafr {

inline constexpr Eigen::Index kActions = 2;

/// Shared tanh feature layer feeding a scalar state-value head and a two-way advantage head.
/// Also used as the gradient container.
struct DuelingNet {
  Eigen::MatrixXd feat_w;   // hidden x input
  Eigen::VectorXd feat_b;   // hidden
  Eigen::RowVectorXd val_w; // 1 x hidden
  Eigen::VectorXd val_b;    // 1
  Eigen::MatrixXd adv_w;    // 2 x hidden
  Eigen::VectorXd adv_b;    // 2

  Eigen::Index input_size() const { return feat_w.cols(); }
  Eigen::Index hidden_size() const { return feat_w.rows(); }

  static DuelingNet zeros(Eigen::Index input, Eigen::Index hidden) {
    DuelingNet n;
    n.feat_w = Eigen::MatrixXd::Zero(hidden, input);
    n.feat_b = Eigen::VectorXd::Zero(hidden);
    n.val_w = Eigen::RowVectorXd::Zero(hidden);
    n.val_b = Eigen::VectorXd::Zero(1);
    n.adv_w = Eigen::MatrixXd::Zero(kActions, hidden);
    n.adv_b = Eigen::VectorXd::Zero(kActions);
    return n;
  }

  /// Calls f(Eigen::Map<Eigen::VectorXd>) on every parameter block.
  template <typename F>
  void for_each_block(F&& f) {
    f(Eigen::Map<Eigen::VectorXd>(feat_w.data(), feat_w.size()));
    f(Eigen::Map<Eigen::VectorXd>(feat_b.data(), feat_b.size()));
    f(Eigen::Map<Eigen::VectorXd>(val_w.data(), val_w.size()));
    f(Eigen::Map<Eigen::VectorXd>(val_b.data(), val_b.size()));
    f(Eigen::Map<Eigen::VectorXd>(adv_w.data(), adv_w.size()));
    f(Eigen::Map<Eigen::VectorXd>(adv_b.data(), adv_b.size()));
  }

  void add_scaled(const DuelingNet& g, double alpha) {
    if (g.feat_w.rows() != feat_w.rows() || g.feat_w.cols() != feat_w.cols())
      throw DimensionError("dueling net: shape mismatch");
    feat_w += alpha * g.feat_w;
    feat_b += alpha * g.feat_b;
    val_w += alpha * g.val_w;
    val_b += alpha * g.val_b;
    adv_w += alpha * g.adv_w;
    adv_b += alpha * g.adv_b;
  }

  double squared_norm() const {
    return feat_w.squaredNorm() + feat_b.squaredNorm() + val_w.squaredNorm() + val_b.squaredNorm() +
           adv_w.squaredNorm() + adv_b.squaredNorm();
  }

  bool all_finite() const {
    return feat_w.allFinite() && feat_b.allFinite() && val_w.allFinite() && val_b.allFinite() && adv_w.allFinite() &&
           adv_b.allFinite();
  }

  friend bool operator==(const DuelingNet& a, const DuelingNet& b) {
    return a.feat_w.rows() == b.feat_w.rows() && a.feat_w.cols() == b.feat_w.cols() && a.feat_w == b.feat_w &&
           a.feat_b == b.feat_b && a.val_w == b.val_w && a.val_b == b.val_b && a.adv_w == b.adv_w && a.adv_b == b.adv_b;
  }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
inline DuelingNet init_dueling_net(Eigen::Index input, Eigen::Index hidden, Rng& rng) {
  if (input <= 0 || hidden <= 0) throw DimensionError("init_dueling_net: dimensions must be positive");
  DuelingNet n = DuelingNet::zeros(input, hidden);
  auto fill = [&](auto& block, double fan_in) {
    std::uniform_real_distribution<double> law(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = law(rng);
  };
  fill(n.feat_w, static_cast<double>(input));
  fill(n.feat_b, static_cast<double>(input));
  fill(n.val_w, static_cast<double>(hidden));
  fill(n.val_b, static_cast<double>(hidden));
  fill(n.adv_w, static_cast<double>(hidden));
  fill(n.adv_b, static_cast<double>(hidden));
  return n;
}

/// Q = V + A - mean(A), column-wise.
inline Eigen::MatrixXd dueling_combine(const Eigen::RowVectorXd& value, const Eigen::MatrixXd& advantage) {
  Eigen::MatrixXd q = advantage.rowwise() - advantage.colwise().mean();
  q.rowwise() += value;
  return q;
}

struct DuelingForward {
  Eigen::MatrixXd features;   // hidden x n
  Eigen::RowVectorXd value;   // 1 x n
  Eigen::MatrixXd advantage;  // 2 x n
  Eigen::MatrixXd q;          // 2 x n
};

/// Batched forward pass; each column of `states` is one encoded state.
inline DuelingForward dueling_forward(const DuelingNet& net, const Eigen::MatrixXd& states) {
  if (states.rows() != net.input_size()) throw DimensionError("dueling net: state length does not match input size");
  DuelingForward f;
  f.features = ((net.feat_w * states).colwise() + net.feat_b).array().tanh().matrix();
  f.value = ((net.val_w * f.features).array() + net.val_b(0)).matrix();
  f.advantage = (net.adv_w * f.features).colwise() + net.adv_b;
  f.q = dueling_combine(f.value, f.advantage);
  return f;
}

inline std::array<double, 2> q_values(const DuelingNet& net, const Eigen::VectorXd& state) {
  const auto f = dueling_forward(net, state);
  return {f.q(0, 0), f.q(1, 0)};
}

/// Mean squared error between targets and Q(s_i, a_i).
inline double dqn_loss(const DuelingNet& net, const Eigen::MatrixXd& states, std::span<const int> actions,
                       std::span<const double> targets) {
  const auto n = static_cast<std::size_t>(states.cols());
  if (n == 0 || actions.size() != n || targets.size() != n) throw DimensionError("dqn_loss: batch size mismatch");
  const auto f = dueling_forward(net, states);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = targets[i] - f.q(actions[i], static_cast<Eigen::Index>(i));
    sum += e * e;
  }
  return sum / static_cast<double>(n);
}

/// Exact gradient of dqn_loss with respect to every parameter.
inline DuelingNet dqn_gradient(const DuelingNet& net, const Eigen::MatrixXd& states, std::span<const int> actions,
                               std::span<const double> targets) {
  const auto n = static_cast<std::size_t>(states.cols());
  if (n == 0 || actions.size() != n || targets.size() != n) throw DimensionError("dqn_gradient: batch size mismatch");
  const auto f = dueling_forward(net, states);
  Eigen::RowVectorXd d_value(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd d_adv(kActions, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double g = 2.0 * (f.q(actions[i], col) - targets[i]) / static_cast<double>(n);
    d_value(col) = g;
    for (Eigen::Index a = 0; a < kActions; ++a)
      d_adv(a, col) = g * ((a == actions[i] ? 1.0 : 0.0) - 1.0 / static_cast<double>(kActions));
  }
  const Eigen::MatrixXd d_features = net.val_w.transpose() * d_value + net.adv_w.transpose() * d_adv;
  const Eigen::MatrixXd d_pre = d_features.cwiseProduct((1.0 - f.features.array().square()).matrix());

  DuelingNet g;
  g.val_w = d_value * f.features.transpose();
  g.val_b = Eigen::VectorXd::Constant(1, d_value.sum());
  g.adv_w = d_adv * f.features.transpose();
  g.adv_b = d_adv.rowwise().sum();
  g.feat_w = d_pre * states.transpose();
  g.feat_b = d_pre.rowwise().sum();
  return g;
}

}  // namespace cafr
