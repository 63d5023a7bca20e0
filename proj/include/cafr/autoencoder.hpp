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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cafr/errors.hpp"
#include "cafr/random.hpp"

namespace cafr {

enum class Activation : std::uint32_t { Sigmoid = 0, Tanh = 1 };

inline Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& pre) {
  if (act == Activation::Tanh) return pre.array().tanh().matrix();
  return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
}

/// Derivative of the activation expressed through its output y.
inline Eigen::MatrixXd activation_slope(Activation act, const Eigen::MatrixXd& y) {
  if (act == Activation::Tanh) return (1.0 - y.array().square()).matrix();
  return (y.array() * (1.0 - y.array())).matrix();
}

struct AEShape {
  Eigen::Index input = 0;   // C, catalog size
  Eigen::Index hidden = 0;  // H
  friend bool operator==(const AEShape&, const AEShape&) = default;
};

/// The four parameter blocks shared by models and gradients.
struct AEBlocks {
  Eigen::MatrixXd enc_w;  // H x C
  Eigen::VectorXd enc_b;  // H
  Eigen::MatrixXd dec_w;  // C x H
  Eigen::VectorXd dec_b;  // C

  AEShape shape() const { return {enc_w.cols(), enc_w.rows()}; }

  bool same_shape(const AEBlocks& o) const {
    return enc_w.rows() == o.enc_w.rows() && enc_w.cols() == o.enc_w.cols() && enc_b.size() == o.enc_b.size() &&
           dec_w.rows() == o.dec_w.rows() && dec_w.cols() == o.dec_w.cols() && dec_b.size() == o.dec_b.size();
  }

  bool consistent() const {
    return enc_b.size() == enc_w.rows() && dec_w.rows() == enc_w.cols() && dec_w.cols() == enc_w.rows() &&
           dec_b.size() == dec_w.rows();
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(enc_w.size() + enc_b.size() + dec_w.size() + dec_b.size());
  }

  void resize_zero(AEShape s) {
    enc_w = Eigen::MatrixXd::Zero(s.hidden, s.input);
    enc_b = Eigen::VectorXd::Zero(s.hidden);
    dec_w = Eigen::MatrixXd::Zero(s.input, s.hidden);
    dec_b = Eigen::VectorXd::Zero(s.input);
  }

  /// this += alpha * other
  void add_scaled(const AEBlocks& other, double alpha) {
    if (!same_shape(other)) throw DimensionError("AE blocks: shape mismatch");
    enc_w += alpha * other.enc_w;
    enc_b += alpha * other.enc_b;
    dec_w += alpha * other.dec_w;
    dec_b += alpha * other.dec_b;
  }

  void scale(double alpha) {
    enc_w *= alpha;
    enc_b *= alpha;
    dec_w *= alpha;
    dec_b *= alpha;
  }

  double squared_norm() const {
    return enc_w.squaredNorm() + enc_b.squaredNorm() + dec_w.squaredNorm() + dec_b.squaredNorm();
  }

  bool all_finite() const {
    return enc_w.allFinite() && enc_b.allFinite() && dec_w.allFinite() && dec_b.allFinite();
  }

  friend bool operator==(const AEBlocks& a, const AEBlocks& b) {
    return a.same_shape(b) && a.enc_w == b.enc_w && a.enc_b == b.enc_b && a.dec_w == b.dec_w && a.dec_b == b.dec_b;
  }
};

/// Sum of squared entrywise differences over all four blocks.
inline double squared_distance(const AEBlocks& a, const AEBlocks& b) {
  if (!a.same_shape(b)) throw DimensionError("AE blocks: shape mismatch");
  return (a.enc_w - b.enc_w).squaredNorm() + (a.enc_b - b.enc_b).squaredNorm() + (a.dec_w - b.dec_w).squaredNorm() +
         (a.dec_b - b.dec_b).squaredNorm();
}

struct AEModel : AEBlocks {
  Activation encoder = Activation::Sigmoid;
  Activation decoder = Activation::Sigmoid;

  static AEModel zeros(AEShape s, Activation enc = Activation::Sigmoid, Activation dec = Activation::Sigmoid) {
    AEModel m;
    m.resize_zero(s);
    m.encoder = enc;
    m.decoder = dec;
    return m;
  }
};

struct AEGradient : AEBlocks {
  static AEGradient zeros(AEShape s) {
    AEGradient g;
    g.resize_zero(s);
    return g;
  }
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for weights and biases.
inline AEModel init_model(AEShape s, Rng& rng, Activation enc = Activation::Sigmoid,
                          Activation dec = Activation::Sigmoid) {
  if (s.input <= 0 || s.hidden <= 0) throw DimensionError("init_model: dimensions must be positive");
  AEModel m = AEModel::zeros(s, enc, dec);
  auto fill = [&](auto& block, double fan_in) {
    std::uniform_real_distribution<double> law(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = law(rng);
  };
  fill(m.enc_w, static_cast<double>(s.input));
  fill(m.enc_b, static_cast<double>(s.input));
  fill(m.dec_w, static_cast<double>(s.hidden));
  fill(m.dec_b, static_cast<double>(s.hidden));
  return m;
}

struct ForwardPass {
  Eigen::MatrixXd hidden;  // H x n
  Eigen::MatrixXd output;  // C x n
};

/// Batched forward pass; each column of `x` is one rating vector.
inline ForwardPass forward_batch(const AEModel& m, const Eigen::MatrixXd& x) {
  if (x.rows() != m.enc_w.cols()) throw DimensionError("forward: input length does not match model input dimension");
  ForwardPass f;
  f.hidden = activate(m.encoder, (m.enc_w * x).colwise() + m.enc_b);
  f.output = activate(m.decoder, (m.dec_w * f.hidden).colwise() + m.dec_b);
  return f;
}

struct SampleForward {
  Eigen::VectorXd hidden;
  Eigen::VectorXd output;
};

inline SampleForward forward(const AEModel& m, const Eigen::VectorXd& x) {
  auto f = forward_batch(m, x);
  return {f.hidden.col(0), f.output.col(0)};
}

/// Reconstruction error of one sample, averaged over the C components.
inline double sample_loss(const AEModel& m, const Eigen::VectorXd& x) {
  const auto f = forward(m, x);
  return (x - f.output).squaredNorm() / static_cast<double>(x.size());
}

/// Mean sample loss over a batch (columns of `batch`).
inline double batch_loss(const AEModel& m, const Eigen::MatrixXd& batch) {
  if (batch.cols() == 0) throw DomainError("batch_loss: empty batch");
  const auto f = forward_batch(m, batch);
  return (batch - f.output).squaredNorm() / static_cast<double>(batch.rows() * batch.cols());
}

inline double regularized_loss(const AEModel& local, const AEModel& global, const Eigen::MatrixXd& batch,
                               double rho) {
  return batch_loss(local, batch) + 0.5 * rho * squared_distance(global, local);
}

/// Exact gradient of regularized_loss with respect to the local model.
inline AEGradient gradient(const AEModel& local, const AEModel& global, const Eigen::MatrixXd& batch, double rho) {
  if (batch.cols() == 0) throw DomainError("gradient: empty batch");
  if (!local.same_shape(global)) throw DimensionError("gradient: local and global shapes differ");
  const auto f = forward_batch(local, batch);
  const double scale = 2.0 / static_cast<double>(batch.rows() * batch.cols());

  const Eigen::MatrixXd d_out_pre =
      (scale * (f.output - batch)).cwiseProduct(activation_slope(local.decoder, f.output));
  const Eigen::MatrixXd d_hidden_pre =
      (local.dec_w.transpose() * d_out_pre).cwiseProduct(activation_slope(local.encoder, f.hidden));

  AEGradient g;
  g.dec_w = d_out_pre * f.hidden.transpose();
  g.dec_b = d_out_pre.rowwise().sum();
  g.enc_w = d_hidden_pre * batch.transpose();
  g.enc_b = d_hidden_pre.rowwise().sum();
  if (rho != 0.0) {
    g.enc_w += rho * (local.enc_w - global.enc_w);
    g.enc_b += rho * (local.enc_b - global.enc_b);
    g.dec_w += rho * (local.dec_w - global.dec_w);
    g.dec_b += rho * (local.dec_b - global.dec_b);
  }
  return g;
}

/// eta_l * max(1, ln r)
inline double local_learning_rate(double eta_l, int round) {
  if (round < 1) throw DomainError("local_learning_rate: round must be >= 1");
  return eta_l * std::max(1.0, std::log(static_cast<double>(round)));
}

enum class UpdateRule {
  Cumulative,  // w_{k+1} = w_k - eta * grad
  Literal,     // w_{k+1} = w_global - eta * grad, evaluated at w_k
};

struct TrainConfig {
  double eta_l = 0.01;
  double rho = 1e-4;
  double beta = 1e-3;
  int epochs = 5;
  std::size_t batch_size = 32;
  UpdateRule rule = UpdateRule::Cumulative;

  void validate() const {
    if (!(eta_l > 0.0) || !(rho >= 0.0) || !(beta >= 0.0)) throw ConfigError("fl: eta_l > 0, rho >= 0, beta >= 0");
    if (epochs < 1) throw ConfigError("fl.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("fl.batch_size must be >= 1");
  }
};

struct LocalUpdate {
  AEModel model;
  AEGradient last_gradient;  // local gradient of the final iteration, carried by stragglers
};

/// Local training of one vehicle. `samples` holds one rating vector per column; every
/// iteration draws min(batch_size, n) distinct columns.
inline LocalUpdate vehicle_update(const AEModel& global, const Eigen::MatrixXd& samples, const TrainConfig& cfg,
                                  int round, const AEGradient* delayed, Rng& rng) {
  if (samples.cols() == 0) throw DomainError("vehicle_update: empty training set");
  if (delayed && !delayed->same_shape(global)) throw DimensionError("vehicle_update: delayed gradient shape mismatch");
  const double eta = local_learning_rate(cfg.eta_l, round);
  const auto n = static_cast<std::size_t>(samples.cols());

  LocalUpdate out;
  out.model = global;
  Eigen::MatrixXd batch;
  for (int k = 0; k < cfg.epochs; ++k) {
    if (n <= cfg.batch_size) {
      batch = samples;
    } else {
      const auto idx = sample_indices(rng, n, cfg.batch_size);
      batch.resize(samples.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j)
        batch.col(static_cast<Eigen::Index>(j)) = samples.col(static_cast<Eigen::Index>(idx[j]));
    }
    AEGradient g = gradient(out.model, global, batch, cfg.rho);
    AEGradient step = g;
    if (delayed && cfg.beta != 0.0) step.add_scaled(*delayed, cfg.beta);
    if (cfg.rule == UpdateRule::Literal) {
      Activation enc = out.model.encoder, dec = out.model.decoder;
      static_cast<AEBlocks&>(out.model) = global;
      out.model.encoder = enc;
      out.model.decoder = dec;
    }
    out.model.add_scaled(step, -eta);
    out.last_gradient = std::move(g);
  }
  return out;
}

// Checkpoint format: 8-byte magic, u32 version, u32 encoder act, u32 decoder act, u64 C, u64 H,
// then enc_w, enc_b, dec_w, dec_b as little-endian IEEE-754 doubles in column-major order.
inline constexpr std::array<char, 8> kCheckpointMagic{'C', 'A', 'F', 'R', 'A', 'E', '\0', '\1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("checkpoint: truncated file");
    bits |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

template <typename Block>
void write_block(std::ostream& out, const Block& b) {
  for (Eigen::Index i = 0; i < b.size(); ++i) write_le<double>(out, b.data()[i]);
}

template <typename Block>
void read_block(std::istream& in, Block& b) {
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = read_le<double>(in);
}

}  // namespace detail

inline void save_model(std::ostream& out, const AEModel& m) {
  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.encoder));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.decoder));
  detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.shape().input));
  detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.shape().hidden));
  detail::write_block(out, m.enc_w);
  detail::write_block(out, m.enc_b);
  detail::write_block(out, m.dec_w);
  detail::write_block(out, m.dec_b);
  if (!out) throw IoError("checkpoint: write failed");
}

inline AEModel load_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kCheckpointMagic) throw IoError("checkpoint: bad magic");
  if (detail::read_le<std::uint32_t>(in) != kCheckpointVersion) throw IoError("checkpoint: unsupported version");
  const auto enc = detail::read_le<std::uint32_t>(in);
  const auto dec = detail::read_le<std::uint32_t>(in);
  if (enc > 1 || dec > 1) throw IoError("checkpoint: unknown activation");
  AEShape s;
  s.input = static_cast<Eigen::Index>(detail::read_le<std::uint64_t>(in));
  s.hidden = static_cast<Eigen::Index>(detail::read_le<std::uint64_t>(in));
  AEModel m = AEModel::zeros(s, static_cast<Activation>(enc), static_cast<Activation>(dec));
  detail::read_block(in, m.enc_w);
  detail::read_block(in, m.enc_b);
  detail::read_block(in, m.dec_w);
  detail::read_block(in, m.dec_b);
  return m;
}

inline void save_model(const std::filesystem::path& path, const AEModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  save_model(out, m);
}

inline AEModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_model(in);
}

}  // namespace cafr
