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
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cafr/autoencoder.hpp"
#include "cafr/dataset.hpp"
#include "cafr/errors.hpp"
#include "cafr/log.hpp"

namespace cafr {

struct ContentCount {
  ContentId content = 0;
  std::size_t count = 0;
  friend bool operator==(const ContentCount&, const ContentCount&) = default;
};

/// A vehicle's predicted interested contents, descending by count.
struct InterestSet {
  std::vector<ContentCount> contents;
};

/// RSU-level popular contents, descending by count, ties by ascending id.
struct PopularContents {
  std::vector<ContentCount> ranked;

  std::size_t size() const noexcept { return ranked.size(); }
  bool empty() const noexcept { return ranked.empty(); }
  std::vector<ContentId> ids() const {
    std::vector<ContentId> out;
    out.reserve(ranked.size());
    for (const auto& c : ranked) out.push_back(c.content);
    return out;
  }
};

namespace detail {

/// Keeps the `limit` largest counts; ties by ascending content id.
inline std::vector<ContentCount> top_counts(const std::map<ContentId, std::size_t>& counts, std::size_t limit) {
  std::vector<ContentCount> all;
  all.reserve(counts.size());
  for (const auto& [id, n] : counts) all.push_back({id, n});
  auto better = [](const ContentCount& a, const ContentCount& b) {
    return a.count != b.count ? a.count > b.count : a.content < b.content;
  };
  const std::size_t k = std::min(limit, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  return all;
}

}  // namespace detail

/// Row-wise autoencoder reconstruction of a rating matrix.
inline Eigen::MatrixXd reconstruct(const AEModel& global, const RatingMatrix& r) {
  if (r.cols() != global.shape().input) throw DimensionError("reconstruct: catalog size does not match model input");
  if (r.rows() == 0) return Eigen::MatrixXd(0, r.cols());
  return forward_batch(global, r.values.transpose()).output.transpose();
}

/// Row indices of the ceil(rows / m) VUs with the most nonzero ratings; ties by ascending VU id.
inline std::vector<std::size_t> select_active_vus(const RatingMatrix& r, int m) {
  if (m < 1) throw DomainError("select_active_vus: m must be >= 1");
  const std::size_t n = r.rows();
  if (n == 0) return {};
  std::vector<Eigen::Index> nonzero(n);
  for (std::size_t i = 0; i < n; ++i)
    nonzero[i] = (r.values.row(static_cast<Eigen::Index>(i)).array() != 0.0).count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nonzero[a] != nonzero[b] ? nonzero[a] > nonzero[b] : r.vu_ids[a] < r.vu_ids[b];
  });
  order.resize((n + static_cast<std::size_t>(m) - 1) / static_cast<std::size_t>(m));
  return order;
}

/// Cosine similarity; a zero vector has similarity 0 with everything.
inline double cosine_similarity(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    logger()->warn("cosine_similarity: zero vector, similarity taken as 0");
    return 0.0;
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace detail {

/// The k candidates (all rows but `query`) with the largest similarity; ties by ascending VU id.
inline std::vector<std::size_t> best_neighbors(std::size_t query, std::span<const double> sim,
                                               std::span<const UserIndex> vu_ids, std::size_t k) {
  std::vector<std::size_t> candidates;
  candidates.reserve(sim.size());
  for (std::size_t j = 0; j < sim.size(); ++j)
    if (j != query) candidates.push_back(j);
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                    [&](std::size_t a, std::size_t b) { return sim[a] != sim[b] ? sim[a] > sim[b] : vu_ids[a] < vu_ids[b]; });
  candidates.resize(take);
  return candidates;
}

/// Rows scaled to unit length; zero rows stay zero.
inline Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out = h;
  bool zero_row = false;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    const double n = h.row(i).norm();
    if (n > 0.0)
      out.row(i) /= n;
    else
      zero_row = true;
  }
  if (zero_row) logger()->warn("similarity: zero feature vector, similarity taken as 0");
  return out;
}

}  // namespace detail

/// Row indices of the K rows of `h` most similar to row `query`, excluding the query itself.
/// Ties by ascending VU id.
inline std::vector<std::size_t> k_neighbors(std::size_t query, const Eigen::MatrixXd& h,
                                            std::span<const UserIndex> vu_ids, std::size_t k) {
  if (k < 1) throw DomainError("k_neighbors: K must be >= 1");
  const auto n = static_cast<std::size_t>(h.rows());
  if (query >= n || vu_ids.size() != n) throw DimensionError("k_neighbors: query or id list inconsistent with matrix");
  std::vector<double> sim(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (j != query) sim[j] = cosine_similarity(h.row(static_cast<Eigen::Index>(query)).transpose(),
                                               h.row(static_cast<Eigen::Index>(j)).transpose());
  return detail::best_neighbors(query, sim, vu_ids, k);
}

/// Similarity features: reconstructed ratings followed by personal information.
inline Eigen::MatrixXd combined_features(const Eigen::MatrixXd& r_hat, const Eigen::MatrixXd& info) {
  if (r_hat.rows() != info.rows()) throw DimensionError("combined_features: row count mismatch");
  Eigen::MatrixXd h(r_hat.rows(), r_hat.cols() + info.cols());
  h << r_hat, info;
  return h;
}

/// Counts, per content, the distinct neighbor VUs (over all active VUs) with a nonzero raw
/// rating and keeps the f_c most counted.
inline InterestSet predict_interested(const RatingMatrix& r, const Eigen::MatrixXd& r_hat, const Eigen::MatrixXd& info,
                                      int m, std::size_t k, std::size_t f_c) {
  if (r_hat.rows() != r.values.rows() || r_hat.cols() != r.values.cols())
    throw DimensionError("predict_interested: reconstruction shape mismatch");
  const auto active = select_active_vus(r, m);
  if (active.empty()) return {};
  const Eigen::MatrixXd h = combined_features(r_hat, info);

  if (k < 1) throw DomainError("predict_interested: K must be >= 1");
  const Eigen::MatrixXd unit = detail::unit_rows(h);
  Eigen::MatrixXd active_unit(static_cast<Eigen::Index>(active.size()), unit.cols());
  for (std::size_t i = 0; i < active.size(); ++i)
    active_unit.row(static_cast<Eigen::Index>(i)) = unit.row(static_cast<Eigen::Index>(active[i]));
  const Eigen::MatrixXd sims = active_unit * unit.transpose();

  std::vector<bool> is_neighbor(r.rows(), false);
  std::vector<double> sim(r.rows());
  for (std::size_t i = 0; i < active.size(); ++i) {
    for (std::size_t j = 0; j < r.rows(); ++j)
      sim[j] = std::clamp(sims(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), -1.0, 1.0);
    for (std::size_t j : detail::best_neighbors(active[i], sim, r.vu_ids, k)) is_neighbor[j] = true;
  }

  std::map<ContentId, std::size_t> counts;
  for (std::size_t j = 0; j < r.rows(); ++j) {
    if (!is_neighbor[j]) continue;
    const auto row = r.values.row(static_cast<Eigen::Index>(j));
    for (Eigen::Index c = 0; c < row.size(); ++c)
      if (row(c) != 0.0) ++counts[static_cast<ContentId>(c)];
  }
  return {detail::top_counts(counts, f_c)};
}

/// Sums counts over vehicles and keeps the f_c most counted contents.
inline PopularContents aggregate_popular(std::span<const InterestSet> sets, std::size_t f_c) {
  std::map<ContentId, std::size_t> counts;
  for (const auto& s : sets)
    for (const auto& c : s.contents) counts[c.content] += c.count;
  return {detail::top_counts(counts, f_c)};
}

}  // namespace cafr
