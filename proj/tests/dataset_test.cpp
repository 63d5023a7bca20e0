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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cafr/dataset.hpp"

namespace cafr {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("cafr_dataset_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path_ / name, std::ios::binary) << text; }

 private:
  fs::path path_;
};

const char* kUsers =
    "1::F::1::10::48067\n"
    "2::M::56::16::70072\n"
    "3::M::25::15::55117\n";

const char* kRatings =
    "1::1193::5::978300760\n"
    "1::661::3::978302109\n"
    "2::1193::4::978298413\n"
    "3::3408::1::978300275\r\n";

std::vector<RatingRecord> grid_records(std::size_t users, std::size_t contents) {
  std::vector<RatingRecord> out;
  for (std::size_t u = 0; u < users; ++u)
    for (std::size_t c = 0; c < contents; ++c)
      if ((u + c) % 3 != 0) out.push_back({static_cast<UserIndex>(u), static_cast<ContentId>(c), normalize_rating(1 + static_cast<int>((u + c) % 5))});
  return out;
}

TEST(Ratings, NormalizationRoundTrips) {
  EXPECT_DOUBLE_EQ(normalize_rating(5), 1.0);
  EXPECT_DOUBLE_EQ(normalize_rating(3), 0.6);
  for (int s = 1; s <= 5; ++s) EXPECT_EQ(denormalize_rating(normalize_rating(s)), s);
}

TEST(Catalog, DenseIndexIsBijection) {
  Catalog cat({3952, 1, 17, 17, 260});
  ASSERT_EQ(cat.size(), 4u);
  for (ContentId i = 0; i < cat.size(); ++i) EXPECT_EQ(cat.dense(cat.raw(i)), i);
  EXPECT_EQ(cat.dense(1), 0u);
  EXPECT_EQ(cat.dense(3952), 3u);
  EXPECT_THROW(cat.dense(2), std::out_of_range);
}

TEST(PersonalInfo, EncodesEveryFieldIntoUnitInterval) {
  const auto f = encode_personal_info({7, 'F', 56, 20, "90210"});
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 1.0);
  EXPECT_EQ(f[2], 1.0);
  EXPECT_EQ(f[3], 1.0);
  const auto g = encode_personal_info({8, 'M', 1, 0, "0"});
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_EQ(g[3], 0.0);
  const auto h = encode_personal_info({9, 'M', 25, 5, "T8H"});
  EXPECT_DOUBLE_EQ(h[1], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(h[2], 0.25);
  EXPECT_EQ(h[3], 0.0);
}

TEST(LoadMovieLens, ParsesWellFormedFiles) {
  TempDir dir;
  dir.write("users.dat", kUsers);
  dir.write("ratings.dat", kRatings);
  const auto corpus = load_movielens_dir(dir.path());
  EXPECT_EQ(corpus.user_count(), 3u);
  ASSERT_EQ(corpus.records.size(), 4u);
  EXPECT_EQ(corpus.catalog.size(), 3u);
  EXPECT_EQ(corpus.records[0].user, 0u);
  EXPECT_EQ(corpus.catalog.raw(corpus.records[0].content), 1193u);
  EXPECT_DOUBLE_EQ(corpus.records[0].value, 1.0);
  EXPECT_DOUBLE_EQ(corpus.records[1].value, 0.6);
  EXPECT_DOUBLE_EQ(corpus.records[3].value, 0.2);
  EXPECT_EQ(corpus.users[1].age, 56);
  EXPECT_EQ(corpus.users[2].zip, "55117");
}

TEST(LoadMovieLens, CatalogComesFromMoviesFileWhenPresent) {
  TempDir dir;
  dir.write("users.dat", kUsers);
  dir.write("ratings.dat", kRatings);
  dir.write("movies.dat", "1::Toy Story (1995)::Animation|Children's|Comedy\n661::A::Drama\n1193::B::Drama\n2000::C::War\n3408::D::Drama\n");
  const auto corpus = load_movielens_dir(dir.path());
  EXPECT_EQ(corpus.catalog.size(), 5u);
  EXPECT_TRUE(corpus.catalog.contains_raw(2000));
}

TEST(LoadMovieLens, MalformedLineReportsLineNumber) {
  TempDir dir;
  dir.write("users.dat", kUsers);
  dir.write("ratings.dat", "1::1193::5::978300760\n2::1193::x::978298413\n");
  try {
    (void)load_movielens_dir(dir.path());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LoadMovieLens, RejectsBadFieldsAndRanges) {
  TempDir dir;
  dir.write("users.dat", kUsers);
  dir.write("ratings.dat", "1::1193::6::978300760\n");
  EXPECT_THROW((void)load_movielens_dir(dir.path()), ParseError);
  dir.write("ratings.dat", "1::1193::5\n");
  EXPECT_THROW((void)load_movielens_dir(dir.path()), ParseError);
  dir.write("ratings.dat", "9::1193::5::1\n");
  EXPECT_THROW((void)load_movielens_dir(dir.path()), ParseError);
  dir.write("users.dat", "1::X::1::10::48067\n");
  EXPECT_THROW((void)load_movielens_dir(dir.path()), ParseError);
}

TEST(LoadMovieLens, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_THROW((void)load_movielens_dir(dir.path()), IoError);
}

TEST(CapCatalog, KeepsMostRatedContents) {
  Corpus c;
  c.catalog = Catalog({10, 20, 30});
  c.users.resize(3);
  c.records = {{0, 2, 1.0}, {1, 2, 1.0}, {2, 2, 1.0}, {0, 0, 0.4}, {1, 0, 0.4}, {0, 1, 0.2}};
  const auto capped = cap_catalog(c, 2);
  ASSERT_EQ(capped.catalog.size(), 2u);
  EXPECT_TRUE(capped.catalog.contains_raw(30));
  EXPECT_TRUE(capped.catalog.contains_raw(10));
  EXPECT_EQ(capped.records.size(), 5u);
  for (const auto& r : capped.records) EXPECT_LT(r.content, 2u);
  EXPECT_EQ(cap_catalog(c, 0).records.size(), c.records.size());
}

TEST(Partition, IsBalancedSetPartition) {
  const auto records = grid_records(23, 7);
  Rng rng(5);
  const auto parts = partition(records, 23, 4, rng);
  ASSERT_EQ(parts.size(), 4u);
  std::set<UserIndex> seen;
  std::size_t total_records = 0, lo = 99, hi = 0;
  for (const auto& p : parts) {
    lo = std::min(lo, p.vu_ids.size());
    hi = std::max(hi, p.vu_ids.size());
    for (auto u : p.vu_ids) EXPECT_TRUE(seen.insert(u).second) << "VU " << u << " assigned twice";
    for (const auto& r : p.train) EXPECT_TRUE(std::binary_search(p.vu_ids.begin(), p.vu_ids.end(), r.user));
    total_records += p.size();
  }
  EXPECT_EQ(seen.size(), 23u);
  EXPECT_LE(hi - lo, 1u);
  EXPECT_EQ(total_records, records.size());
}

TEST(Partition, SingleVehicleHoldsEverything) {
  const auto records = grid_records(10, 5);
  Rng rng(1);
  const auto parts = partition(records, 10, 1, rng);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].vu_ids.size(), 10u);
  EXPECT_EQ(parts[0].size(), records.size());
}

TEST(Partition, DeterministicAndValidated) {
  const auto records = grid_records(12, 4);
  Rng a(9), b(9);
  const auto pa = partition(records, 12, 3, a);
  const auto pb = partition(records, 12, 3, b);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pa[i].vu_ids, pb[i].vu_ids);
    EXPECT_EQ(pa[i].train, pb[i].train);
  }
  Rng rng(1);
  EXPECT_THROW((void)partition(records, 12, 0, rng), ConfigError);
  EXPECT_THROW((void)partition(records, 12, 13, rng), ConfigError);
}

TEST(SplitTrainTest, FloorArithmeticAndDisjointCover) {
  LocalData local;
  for (std::uint32_t i = 0; i < 1000; ++i) local.train.push_back({i / 10, i % 10 + 10 * (i / 100), 0.2});
  Rng rng(3);
  const auto split = split_train_test(local, 0.998, rng);
  EXPECT_EQ(split.train.size(), 998u);
  EXPECT_EQ(split.test.size(), 2u);
  auto key = [](const RatingRecord& r) { return std::pair(r.user, r.content); };
  std::set<std::pair<UserIndex, ContentId>> all;
  for (const auto& r : split.train) all.insert(key(r));
  for (const auto& r : split.test) EXPECT_TRUE(all.insert(key(r)).second);
  EXPECT_EQ(all.size(), 1000u);
}

TEST(SplitTrainTest, TwoRecordsSplitEvenly) {
  LocalData local;
  local.train = {{0, 0, 0.2}, {0, 1, 0.4}};
  Rng rng(4);
  const auto split = split_train_test(local, 0.5, rng);
  EXPECT_EQ(split.train.size(), 1u);
  EXPECT_EQ(split.test.size(), 1u);
}

TEST(SplitTrainTest, RejectsDegenerateInput) {
  LocalData local;
  local.train = {{0, 0, 0.2}};
  Rng rng(4);
  EXPECT_THROW((void)split_train_test(local, 0.5, rng), DegenerateInputError);
  local.train.push_back({0, 1, 0.2});
  EXPECT_THROW((void)split_train_test(local, 1.0, rng), ConfigError);
  EXPECT_THROW((void)split_train_test(local, 0.0, rng), ConfigError);
}

TEST(GenerateRequests, DistinctSubsetOfTestContents) {
  LocalData local;
  local.test = {{0, 4, 0.2}, {1, 4, 0.2}, {1, 9, 0.6}, {2, 17, 1.0}};
  Rng rng(8);
  const auto req = generate_requests(local, rng, 10);
  EXPECT_EQ(std::set<ContentId>(req.begin(), req.end()), (std::set<ContentId>{4, 9, 17}));
  EXPECT_EQ(req.size(), 3u);
  EXPECT_TRUE(generate_requests(local, rng, 0).empty());
  for (int trial = 0; trial < 50; ++trial) {
    const auto two = generate_requests(local, rng, 2);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_NE(two[0], two[1]);
    for (auto c : two) EXPECT_TRUE(c == 4 || c == 9 || c == 17);
  }
  EXPECT_TRUE(generate_requests(LocalData{}, rng, 5).empty());
}

TEST(RatingMatrix, DenseRowsFollowVuOrder) {
  const std::vector<RatingRecord> records{{3, 0, 0.2}, {1, 2, 1.0}, {3, 2, 0.6}, {7, 1, 0.8}};
  const auto m = build_rating_matrix({3, 1}, records, 3);
  ASSERT_EQ(m.values.rows(), 2);
  ASSERT_EQ(m.values.cols(), 3);
  EXPECT_EQ(m.values(0, 0), 0.2);
  EXPECT_EQ(m.values(0, 2), 0.6);
  EXPECT_EQ(m.values(1, 2), 1.0);
  EXPECT_EQ(m.values.sum(), 1.8);
  EXPECT_THROW((void)build_rating_matrix({3}, records, 2), DimensionError);
}

TEST(PersonalInfoMatrix, AlignedWithRatingRows) {
  std::vector<UserProfile> users{{1, 'F', 18, 3, "1"}, {2, 'M', 50, 7, "9"}};
  const auto info = personal_info_matrix({1, 0}, users);
  ASSERT_EQ(info.rows(), 2);
  ASSERT_EQ(info.cols(), static_cast<Eigen::Index>(kPersonalFeatures));
  EXPECT_EQ(info(0, 0), 1.0);
  EXPECT_EQ(info(1, 0), 0.0);
  EXPECT_EQ(info(0, 3), 1.0);
}

}  // namespace
}  // namespace cafr
