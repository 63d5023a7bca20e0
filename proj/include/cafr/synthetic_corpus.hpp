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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cafr/dataset.hpp"
#include "cafr/errors.hpp"
#include "cafr/random.hpp"

namespace cafr {

enum class PopularityProfile {
  MovieLensLike,  // piecewise log-log curve through MovieLens-1M rating-count quantiles
  Zipf,
};

/// Shape of a generated rating corpus. Defaults reproduce MovieLens-1M cardinalities
/// (6,040 users, 3,883 listed / 3,706 rated movies, 1,000,209 ratings, >= 20 per user).
struct SyntheticCorpusParams {
  std::size_t users = 6040;
  std::size_t catalog = 3883;
  std::size_t rated = 3706;
  std::size_t total_ratings = 1'000'209;
  std::size_t min_per_user = 20;
  std::size_t max_per_user = 2314;
  double per_user_median = 96.0;
  double per_user_log_sigma = 1.044;
  PopularityProfile profile = PopularityProfile::MovieLensLike;
  double zipf_exponent = 0.9;
  double taste_strength = 2.0;
  double star_tilt = 0.8;
  std::uint64_t seed = 1000209;

  void validate() const {
    if (users == 0 || catalog == 0 || rated == 0) throw ConfigError("synthetic corpus: empty dimension");
    if (rated > catalog) throw ConfigError("synthetic corpus: rated > catalog");
    if (min_per_user > rated) throw ConfigError("synthetic corpus: min_per_user > rated");
    if (total_ratings < users * min_per_user) throw ConfigError("synthetic corpus: total below per-user minimum");
    if (total_ratings > users * std::min(max_per_user, rated)) throw ConfigError("synthetic corpus: total above capacity");
  }
};

/// Small in-memory workload with a Zipf popularity law, for fast tests.
inline SyntheticCorpusParams zipf_workload(std::size_t users, std::size_t catalog, std::size_t per_user_mean,
                                           double exponent, std::uint64_t seed) {
  SyntheticCorpusParams p;
  p.users = users;
  p.catalog = catalog;
  p.rated = catalog;
  p.min_per_user = std::max<std::size_t>(1, per_user_mean / 3);
  p.max_per_user = std::min(catalog, per_user_mean * 6);
  p.per_user_median = static_cast<double>(per_user_mean) * 0.8;
  p.per_user_log_sigma = 0.6;
  p.total_ratings = users * per_user_mean;
  p.profile = PopularityProfile::Zipf;
  p.zipf_exponent = exponent;
  p.seed = seed;
  return p;
}

inline constexpr std::array<const char*, 18> kGenreNames{
    "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime", "Documentary", "Drama", "Fantasy",
    "Film-Noir", "Horror", "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western"};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<std::vector<int>> movie_genres;  // per dense content id
};

namespace detail {

/// Relative rating count of the movie at popularity rank k (1-based) out of n rated movies.
inline double popularity_weight(std::size_t k, std::size_t n, const SyntheticCorpusParams& p) {
  if (p.profile == PopularityProfile::Zipf) return std::pow(static_cast<double>(k), -p.zipf_exponent);
  // Rating-count quantiles of MovieLens-1M (rank -> count), rescaled on the rank axis to n.
  static constexpr std::array<double, 12> rank{1, 10, 50, 100, 200, 500, 1000, 1853, 2500, 3000, 3500, 3706};
  static constexpr std::array<double, 12> count{3428, 2650, 1900, 1500, 1100, 650, 370, 123.5, 50, 18, 4, 1};
  const double x = std::log(std::max(1.0, static_cast<double>(k) * 3706.0 / static_cast<double>(n)));
  for (std::size_t i = 1; i < rank.size(); ++i) {
    const double x0 = std::log(rank[i - 1]), x1 = std::log(rank[i]);
    if (x <= x1 || i + 1 == rank.size()) {
      const double t = std::clamp((x - x0) / (x1 - x0), 0.0, 1.0);
      return std::exp(std::log(count[i - 1]) + t * (std::log(count[i]) - std::log(count[i - 1])));
    }
  }
  return 1.0;
}

inline std::vector<std::size_t> per_user_counts(Rng& rng, const SyntheticCorpusParams& p) {
  const std::size_t lo = p.min_per_user;
  const std::size_t hi = std::min(p.max_per_user, p.rated);
  std::lognormal_distribution<double> law(std::log(p.per_user_median), p.per_user_log_sigma);
  std::vector<double> raw(p.users);
  for (auto& r : raw) r = law(rng);

  std::vector<std::size_t> counts(p.users);
  double scale = 1.0;
  for (int iter = 0; iter < 60; ++iter) {
    std::size_t sum = 0;
    for (std::size_t u = 0; u < p.users; ++u) {
      counts[u] = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(raw[u] * scale)), lo, hi);
      sum += counts[u];
    }
    if (sum == p.total_ratings) break;
    scale *= static_cast<double>(p.total_ratings) / static_cast<double>(sum);
  }
  // Settle the rounding residue one rating at a time, cycling through users.
  std::size_t sum = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  for (std::size_t u = 0; sum != p.total_ratings; u = (u + 1) % p.users) {
    if (sum < p.total_ratings && counts[u] < hi) {
      ++counts[u];
      ++sum;
    } else if (sum > p.total_ratings && counts[u] > lo) {
      --counts[u];
      --sum;
    }
  }
  return counts;
}

inline int draw_star(Rng& rng, double tilt) {
  static constexpr std::array<double, 5> base{0.056, 0.108, 0.261, 0.349, 0.226};
  std::array<double, 5> w{};
  for (int s = 0; s < 5; ++s) w[s] = base[s] * std::exp(tilt * (s - 2));
  std::discrete_distribution<int> pick(w.begin(), w.end());
  return pick(rng) + 1;
}

}  // namespace detail

/// Generates a rating corpus with MovieLens-1M structure: heavy-tailed movie popularity,
/// log-normal activity per user, and genre tastes that correlate with gender and age.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusParams& p) {
  p.validate();
  Rng rng(p.seed);
  const std::size_t n_genres = kGenreNames.size();

  // Raw movie ids leave gaps like the real id range (3,883 ids spread over 1..3,952).
  const std::size_t raw_max = p.catalog + (p.catalog * 69 + 3882) / 3883;
  std::vector<std::uint32_t> ids;
  for (auto idx : sample_indices(rng, raw_max, p.catalog)) ids.push_back(static_cast<std::uint32_t>(idx + 1));

  SyntheticCorpus out;
  out.corpus.catalog = Catalog(ids);
  const std::size_t C = p.catalog;

  std::vector<double> popularity(C, 0.0);
  const auto rated_ids = sample_indices(rng, C, p.rated);
  for (std::size_t k = 0; k < rated_ids.size(); ++k) popularity[rated_ids[k]] = detail::popularity_weight(k + 1, p.rated, p);

  static constexpr std::array<double, 18> genre_freq{0.13, 0.07, 0.03, 0.06, 0.2, 0.05, 0.03, 0.25, 0.02,
                                                     0.01, 0.06, 0.02, 0.02, 0.07, 0.05, 0.08, 0.02, 0.01};
  std::discrete_distribution<int> genre_pick(genre_freq.begin(), genre_freq.end());
  out.movie_genres.resize(C);
  for (auto& g : out.movie_genres) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 3));
    while (static_cast<int>(g.size()) < n) {
      const int pick = genre_pick(rng);
      if (std::find(g.begin(), g.end(), pick) == g.end()) g.push_back(pick);
    }
    std::sort(g.begin(), g.end());
  }

  // Users: demographic marginals follow MovieLens-1M.
  static constexpr std::array<double, 7> age_freq{222, 1103, 2096, 1193, 550, 496, 380};
  std::discrete_distribution<int> age_pick(age_freq.begin(), age_freq.end());
  std::gamma_distribution<double> taste_law(0.6, 1.0);
  std::vector<std::vector<double>> taste(p.users, std::vector<double>(n_genres));
  out.corpus.users.resize(p.users);
  for (std::size_t u = 0; u < p.users; ++u) {
    auto& profile = out.corpus.users[u];
    profile.raw_id = static_cast<std::uint32_t>(u + 1);
    profile.gender = uniform01(rng) < 0.283 ? 'F' : 'M';
    const int age_ordinal = age_pick(rng);
    profile.age = kAgeBrackets[static_cast<std::size_t>(age_ordinal)];
    profile.occupation = static_cast<int>(uniform_index(rng, kMaxOccupation + 1));
    profile.zip.clear();
    for (int d = 0; d < 5; ++d) profile.zip.push_back(static_cast<char>('0' + uniform_index(rng, 10)));

    auto& t = taste[u];
    for (auto& x : t) x = taste_law(rng);
    if (profile.gender == 'F') {
      for (int g : {7, 11, 13}) t[static_cast<std::size_t>(g)] *= 1.8;  // Drama, Musical, Romance
    } else {
      for (int g : {0, 14, 16}) t[static_cast<std::size_t>(g)] *= 1.8;  // Action, Sci-Fi, War
    }
    if (age_ordinal <= 2) {
      for (int g : {2, 4, 10}) t[static_cast<std::size_t>(g)] *= 1.6;  // Animation, Comedy, Horror
    } else {
      for (int g : {5, 9, 17}) t[static_cast<std::size_t>(g)] *= 1.6;  // Crime, Film-Noir, Western
    }
    const double total = std::accumulate(t.begin(), t.end(), 0.0);
    for (auto& x : t) x *= static_cast<double>(n_genres) / total;  // mean preference 1
  }

  const auto counts = detail::per_user_counts(rng, p);
  std::vector<double> key(C);
  std::vector<ContentId> order(C);
  out.corpus.records.reserve(p.total_ratings);
  for (std::size_t u = 0; u < p.users; ++u) {
    const auto& t = taste[u];
    std::size_t eligible = 0;
    for (std::size_t m = 0; m < C; ++m) {
      order[m] = static_cast<ContentId>(m);
      if (popularity[m] <= 0.0) {
        key[m] = -std::numeric_limits<double>::infinity();
        continue;
      }
      ++eligible;
      double affinity = 0.0;
      for (int g : out.movie_genres[m]) affinity += t[static_cast<std::size_t>(g)];
      affinity /= static_cast<double>(out.movie_genres[m].size());
      const double w = popularity[m] * (1.0 + p.taste_strength * affinity);
      // Efraimidis-Spirakis weighted sampling without replacement: keep the largest log(U)/w.
      key[m] = std::log(std::max(uniform01(rng), 1e-300)) / w;
    }
    const std::size_t take = std::min(counts[u], eligible);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                     [&](ContentId a, ContentId b) { return key[a] > key[b] || (key[a] == key[b] && a < b); });
    std::vector<ContentId> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());
    for (auto m : chosen) {
      double affinity = 0.0;
      for (int g : out.movie_genres[m]) affinity += t[static_cast<std::size_t>(g)];
      affinity /= static_cast<double>(out.movie_genres[m].size());
      const int stars = detail::draw_star(rng, p.star_tilt * std::tanh(affinity - 1.0));
      out.corpus.records.push_back({static_cast<UserIndex>(u), m, normalize_rating(stars)});
    }
  }
  return out;
}

/// Writes ratings.dat, users.dat and movies.dat in the GroupLens "::" format.
inline void write_movielens(const SyntheticCorpus& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& c = data.corpus;
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
  };
  {
    auto out = open(dir / "users.dat");
    for (const auto& u : c.users)
      out << u.raw_id << "::" << u.gender << "::" << u.age << "::" << u.occupation << "::" << u.zip << '\n';
  }
  {
    auto out = open(dir / "movies.dat");
    for (std::size_t m = 0; m < c.catalog.size(); ++m) {
      const auto raw = c.catalog.raw(static_cast<ContentId>(m));
      out << raw << "::Movie " << raw << " (" << 1919 + raw % 82 << ")::";
      const auto& g = data.movie_genres.at(m);
      for (std::size_t i = 0; i < g.size(); ++i) out << (i ? "|" : "") << kGenreNames[static_cast<std::size_t>(g[i])];
      out << '\n';
    }
  }
  {
    auto out = open(dir / "ratings.dat");
    std::int64_t ts = 956703932;
    for (const auto& r : c.records) {
      out << c.users[r.user].raw_id << "::" << c.catalog.raw(r.content) << "::" << denormalize_rating(r.value)
          << "::" << ts << '\n';
      ts += 7;
    }
  }
}

}  // namespace cafr
