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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cafr/errors.hpp"
#include "cafr/log.hpp"
#include "cafr/random.hpp"

namespace cafr {

using UserIndex = std::uint32_t;  // dense VU index into Corpus::users
using ContentId = std::uint32_t;  // dense content index into Catalog

struct RatingRecord {
  UserIndex user = 0;
  ContentId content = 0;
  double value = 0.0;  // normalized to [0, 1]

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

inline constexpr int kMaxStars = 5;

inline double normalize_rating(int stars) { return static_cast<double>(stars) / kMaxStars; }
inline int denormalize_rating(double value) { return static_cast<int>(std::lround(value * kMaxStars)); }

/// Bijection between raw movie ids and dense content indices 0..C-1 (ascending raw id).
class Catalog {
 public:
  Catalog() = default;

  explicit Catalog(std::vector<std::uint32_t> raw_ids) : raw_ids_(std::move(raw_ids)) {
    std::sort(raw_ids_.begin(), raw_ids_.end());
    raw_ids_.erase(std::unique(raw_ids_.begin(), raw_ids_.end()), raw_ids_.end());
    for (std::size_t i = 0; i < raw_ids_.size(); ++i) index_.emplace(raw_ids_[i], static_cast<ContentId>(i));
  }

  std::size_t size() const noexcept { return raw_ids_.size(); }
  bool contains_raw(std::uint32_t raw) const { return index_.count(raw) != 0; }
  ContentId dense(std::uint32_t raw) const {
    auto it = index_.find(raw);
    if (it == index_.end()) throw std::out_of_range("catalog: unknown movie id " + std::to_string(raw));
    return it->second;
  }
  std::uint32_t raw(ContentId id) const { return raw_ids_.at(id); }
  const std::vector<std::uint32_t>& raw_ids() const noexcept { return raw_ids_; }

 private:
  std::vector<std::uint32_t> raw_ids_;
  std::unordered_map<std::uint32_t, ContentId> index_;
};

/// One row of users.dat.
struct UserProfile {
  std::uint32_t raw_id = 0;
  char gender = 'M';
  int age = 25;
  int occupation = 0;
  std::string zip;
};

inline constexpr std::array<int, 7> kAgeBrackets{1, 18, 25, 35, 45, 50, 56};
inline constexpr int kMaxOccupation = 20;
inline constexpr std::size_t kPersonalFeatures = 4;

/// Numeric personal-information vector: gender, age ordinal, occupation ordinal, zip region.
inline std::array<double, kPersonalFeatures> encode_personal_info(const UserProfile& u) {
  std::array<double, kPersonalFeatures> f{};
  f[0] = u.gender == 'F' ? 0.0 : 1.0;
  auto it = std::find(kAgeBrackets.begin(), kAgeBrackets.end(), u.age);
  const auto ordinal = it == kAgeBrackets.end() ? 0 : std::distance(kAgeBrackets.begin(), it);
  f[1] = static_cast<double>(ordinal) / static_cast<double>(kAgeBrackets.size() - 1);
  f[2] = static_cast<double>(std::clamp(u.occupation, 0, kMaxOccupation)) / kMaxOccupation;
  f[3] = (!u.zip.empty() && u.zip[0] >= '0' && u.zip[0] <= '9') ? (u.zip[0] - '0') / 9.0 : 0.0;
  return f;
}

struct Corpus {
  Catalog catalog;
  std::vector<UserProfile> users;
  std::vector<RatingRecord> records;

  std::size_t user_count() const noexcept { return users.size(); }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find("::", start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 2;
  }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(std::string("invalid ") + what + " '" + std::string(field) + "'", line_no);
  return value;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline void chomp(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

}  // namespace detail

/// Reads a MovieLens-1M style distribution. `movies_path` is optional: when given, the catalog
/// is every movie listed there (3,883 for ML-1M); otherwise only movies that carry a rating.
inline Corpus load_movielens(const std::filesystem::path& ratings_path, const std::filesystem::path& users_path,
                             const std::optional<std::filesystem::path>& movies_path = std::nullopt) {
  Corpus corpus;
  std::unordered_map<std::uint32_t, UserIndex> user_index;
  {
    auto in = detail::open_input(users_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::chomp(line);
      if (line.empty()) continue;
      auto f = detail::split_fields(line);
      if (f.size() != 5) throw ParseError("users: expected 5 fields", line_no);
      UserProfile u;
      u.raw_id = detail::parse_number<std::uint32_t>(f[0], line_no, "user id");
      if (f[1] != "M" && f[1] != "F") throw ParseError("users: gender must be M or F", line_no);
      u.gender = f[1][0];
      u.age = detail::parse_number<int>(f[2], line_no, "age");
      u.occupation = detail::parse_number<int>(f[3], line_no, "occupation");
      u.zip = std::string(f[4]);
      if (!user_index.emplace(u.raw_id, static_cast<UserIndex>(corpus.users.size())).second)
        throw ParseError("users: duplicate user id", line_no);
      corpus.users.push_back(std::move(u));
    }
  }

  std::vector<std::uint32_t> listed_movies;
  if (movies_path) {
    auto in = detail::open_input(*movies_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::chomp(line);
      if (line.empty()) continue;
      auto f = detail::split_fields(line);
      if (f.size() < 3) throw ParseError("movies: expected 3 fields", line_no);
      listed_movies.push_back(detail::parse_number<std::uint32_t>(f[0], line_no, "movie id"));
    }
  }

  struct RawRating {
    UserIndex user;
    std::uint32_t movie;
    int stars;
  };
  std::vector<RawRating> raw;
  raw.reserve(1'000'209);
  {
    auto in = detail::open_input(ratings_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      detail::chomp(line);
      if (line.empty()) continue;
      auto f = detail::split_fields(line);
      if (f.size() != 4) throw ParseError("ratings: expected 4 fields", line_no);
      const auto uid = detail::parse_number<std::uint32_t>(f[0], line_no, "user id");
      const auto mid = detail::parse_number<std::uint32_t>(f[1], line_no, "movie id");
      const int stars = detail::parse_number<int>(f[2], line_no, "rating");
      (void)detail::parse_number<std::int64_t>(f[3], line_no, "timestamp");
      if (stars < 1 || stars > kMaxStars) throw ParseError("ratings: rating outside 1..5", line_no);
      auto it = user_index.find(uid);
      if (it == user_index.end()) throw ParseError("ratings: unknown user id", line_no);
      raw.push_back({it->second, mid, stars});
      if (!movies_path) listed_movies.push_back(mid);
    }
  }

  corpus.catalog = Catalog(std::move(listed_movies));
  corpus.records.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!corpus.catalog.contains_raw(raw[i].movie))
      throw ParseError("ratings: movie id missing from movies file", i + 1);
    corpus.records.push_back({raw[i].user, corpus.catalog.dense(raw[i].movie), normalize_rating(raw[i].stars)});
  }
  return corpus;
}

/// Loads `ratings.dat`, `users.dat` and (if present) `movies.dat` from a directory.
inline Corpus load_movielens_dir(const std::filesystem::path& dir) {
  const auto movies = dir / "movies.dat";
  std::optional<std::filesystem::path> movies_opt;
  if (std::filesystem::exists(movies)) movies_opt = movies;
  return load_movielens(dir / "ratings.dat", dir / "users.dat", movies_opt);
}

/// Restricts the catalog to the `cap` most-rated contents (ties by ascending raw id) and
/// re-indexes. cap == 0 or cap >= C leaves the corpus unchanged.
inline Corpus cap_catalog(const Corpus& corpus, std::size_t cap) {
  const std::size_t n = corpus.catalog.size();
  if (cap == 0 || cap >= n) return corpus;
  std::vector<std::size_t> counts(n, 0);
  for (const auto& r : corpus.records) ++counts[r.content];
  std::vector<ContentId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<ContentId>(i);
  std::stable_sort(order.begin(), order.end(), [&](ContentId a, ContentId b) { return counts[a] > counts[b]; });
  order.resize(cap);
  std::vector<std::uint32_t> kept_raw;
  for (auto id : order) kept_raw.push_back(corpus.catalog.raw(id));

  Corpus out;
  out.catalog = Catalog(kept_raw);
  out.users = corpus.users;
  for (const auto& r : corpus.records) {
    const auto raw = corpus.catalog.raw(r.content);
    if (out.catalog.contains_raw(raw)) out.records.push_back({r.user, out.catalog.dense(raw), r.value});
  }
  return out;
}

/// A vehicle's private slice of the corpus.
struct LocalData {
  std::vector<UserIndex> vu_ids;  // ascending
  std::vector<RatingRecord> train;
  std::vector<RatingRecord> test;

  std::size_t size() const noexcept { return train.size() + test.size(); }
};

/// Randomly splits the VUs into `n_vehicles` balanced groups; each group carries all records of
/// its VUs (placed in `train` until split_train_test runs).
inline std::vector<LocalData> partition(std::span<const RatingRecord> records, std::size_t n_users,
                                        std::size_t n_vehicles, Rng& rng) {
  if (n_vehicles == 0) throw ConfigError("partition: need at least one vehicle");
  if (n_vehicles > n_users) throw ConfigError("partition: more vehicles than VUs");
  std::vector<UserIndex> users(n_users);
  for (std::size_t i = 0; i < n_users; ++i) users[i] = static_cast<UserIndex>(i);
  std::shuffle(users.begin(), users.end(), rng);

  std::vector<LocalData> parts(n_vehicles);
  std::vector<std::size_t> owner(n_users);
  for (std::size_t i = 0; i < n_users; ++i) {
    owner[users[i]] = i % n_vehicles;
    parts[i % n_vehicles].vu_ids.push_back(users[i]);
  }
  for (auto& p : parts) std::sort(p.vu_ids.begin(), p.vu_ids.end());
  for (const auto& r : records) parts[owner.at(r.user)].train.push_back(r);
  return parts;
}

/// Exact split: floor(train_frac * n) records to train, the rest to test, chosen uniformly.
inline LocalData split_train_test(const LocalData& local, double train_frac, Rng& rng) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("split_train_test: train_frac must be in (0, 1)");
  std::vector<RatingRecord> all = local.train;
  all.insert(all.end(), local.test.begin(), local.test.end());
  if (all.size() < 2) throw DegenerateInputError("split_train_test: need at least two records");
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(all.size()) + 1e-9));
  std::shuffle(all.begin(), all.end(), rng);

  auto by_user_content = [](const RatingRecord& a, const RatingRecord& b) {
    return a.user != b.user ? a.user < b.user : a.content < b.content;
  };
  LocalData out;
  out.vu_ids = local.vu_ids;
  out.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
  std::sort(out.train.begin(), out.train.end(), by_user_content);
  std::sort(out.test.begin(), out.test.end(), by_user_content);
  return out;
}

/// Up to `per_vehicle` distinct contents drawn uniformly from the vehicle's test-set contents.
inline std::vector<ContentId> generate_requests(const LocalData& local, Rng& rng, std::size_t per_vehicle) {
  std::vector<ContentId> pool;
  pool.reserve(local.test.size());
  for (const auto& r : local.test) pool.push_back(r.content);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.empty()) {
    logger()->warn("generate_requests: empty test set, no requests issued");
    return {};
  }
  return sample_without_replacement(rng, pool, per_vehicle);
}

/// Dense VU-by-content rating matrix; unrated entries are 0.
struct RatingMatrix {
  std::vector<UserIndex> vu_ids;
  Eigen::MatrixXd values;  // rows follow vu_ids, columns are content ids

  std::size_t rows() const noexcept { return vu_ids.size(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
};

inline RatingMatrix build_rating_matrix(const std::vector<UserIndex>& vu_ids, std::span<const RatingRecord> records,
                                        std::size_t catalog_size) {
  RatingMatrix m;
  m.vu_ids = vu_ids;
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vu_ids.size()), static_cast<Eigen::Index>(catalog_size));
  std::unordered_map<UserIndex, Eigen::Index> row_of;
  for (std::size_t i = 0; i < vu_ids.size(); ++i) row_of.emplace(vu_ids[i], static_cast<Eigen::Index>(i));
  for (const auto& r : records) {
    auto it = row_of.find(r.user);
    if (it == row_of.end()) continue;
    if (r.content >= catalog_size) throw DimensionError("build_rating_matrix: content id outside catalog");
    m.values(it->second, static_cast<Eigen::Index>(r.content)) = r.value;
  }
  return m;
}

/// Personal-information matrix aligned with `vu_ids`.
inline Eigen::MatrixXd personal_info_matrix(const std::vector<UserIndex>& vu_ids, const std::vector<UserProfile>& users) {
  Eigen::MatrixXd info(static_cast<Eigen::Index>(vu_ids.size()), static_cast<Eigen::Index>(kPersonalFeatures));
  for (std::size_t i = 0; i < vu_ids.size(); ++i) {
    const auto f = encode_personal_info(users.at(vu_ids[i]));
    for (std::size_t j = 0; j < kPersonalFeatures; ++j)
      info(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
  }
  return info;
}

}  // namespace cafr
