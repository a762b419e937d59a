/*
 * Copyright 2026 The MHP-Align Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <algorithm>

#include "mhp/error.hpp"
#include "mhp/nn_search.hpp"
#include "oracles.hpp"

namespace mhp {
namespace {

DenseMatrix rows_of(std::initializer_list<std::initializer_list<float>> rows) {
  DenseMatrix m(rows.size(), rows.begin()->size());
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::copy(row.begin(), row.end(), m.row(r++).begin());
  }
  return m;
}

std::vector<float> vec(std::initializer_list<float> v) { return v; }

TEST(Cosine, HandValues) {
  EXPECT_DOUBLE_EQ(nn::cosine(vec({1, 0}), vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(nn::cosine(vec({1, 0}), vec({0, 1})), 0.0);
  EXPECT_NEAR(nn::cosine(vec({1, 2}), vec({2, 1})), 0.8, 1e-15);
  EXPECT_THROW(nn::cosine(vec({0, 0}), vec({1, 0})), NumericError);
}

TEST(Cosine, SymmetricAndScaleFree) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = oracle::random_dense(2, 9, rng);
    EXPECT_EQ(nn::cosine(a.row(0), a.row(1)), nn::cosine(a.row(1), a.row(0)));
    std::vector<float> scaled(a.row(0).begin(), a.row(0).end());
    for (float& v : scaled) v *= 3.5f;
    EXPECT_NEAR(nn::cosine(a.row(0), scaled), 1.0, 1e-6);
  }
}

TEST(TopK, HandExample) {
  const auto q = rows_of({{1, 0}});
  const auto c = rows_of({{1, 0}, {0, 1}, {-1, 0}});
  const auto r = nn::top_k(q, c, 2);
  ASSERT_EQ(r[0].neighbors.size(), 2u);
  EXPECT_EQ(r[0].neighbors[0], (nn::Neighbor{0, 1.0}));
  EXPECT_EQ(r[0].neighbors[1], (nn::Neighbor{1, 0.0}));
}

TEST(TopK, SingleCandidateForAnyK) {
  const auto r = nn::top_k(rows_of({{1, 2}}), rows_of({{-3, 1}}), 10);
  ASSERT_EQ(r[0].neighbors.size(), 1u);
  EXPECT_EQ(r[0].neighbors[0].id, 0u);
}

TEST(TopK, TiesGoToSmallerId) {
  const auto c = rows_of({{0, 1}, {2, 0}, {1, 0}, {0, 3}});
  const auto r = nn::top_k(rows_of({{1, 0}}), c, 4);
  std::vector<EntityId> ids;
  for (const auto& n : r[0].neighbors) ids.push_back(n.id);
  EXPECT_EQ(ids, (std::vector<EntityId>{1, 2, 0, 3}));
}

TEST(TopK, MatchesBruteForceOracle) {
  Rng rng(7);
  const auto q = oracle::random_dense(200, 16, rng);
  const auto c = oracle::random_dense(500, 16, rng);
  const auto fast = nn::top_k(q, c, 10);
  const auto ref = nn::reference::top_k(q, c, 10);
  ASSERT_EQ(fast.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) {
    const auto brute = oracle::brute_top_k(q.row(i), c, 10);
    ASSERT_EQ(fast[i].neighbors.size(), 10u);
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_EQ(fast[i].neighbors[j].id, brute[j].id);
      EXPECT_NEAR(fast[i].neighbors[j].similarity, brute[j].similarity, 1e-12);
      EXPECT_EQ(fast[i].neighbors[j], ref[i].neighbors[j]);
    }
  }
}

TEST(TopK, FullKIsSortedPermutation) {
  Rng rng(8);
  const auto q = oracle::random_dense(5, 4, rng);
  const auto c = oracle::random_dense(30, 4, rng);
  for (const auto& list : nn::top_k(q, c, 30)) {
    ASSERT_EQ(list.neighbors.size(), 30u);
    std::vector<EntityId> ids;
    for (std::size_t j = 0; j < 30; ++j) {
      ids.push_back(list.neighbors[j].id);
      if (j > 0) EXPECT_TRUE(nn::ranks_before(list.neighbors[j - 1], list.neighbors[j]));
    }
    std::sort(ids.begin(), ids.end());
    for (EntityId j = 0; j < 30; ++j) EXPECT_EQ(ids[j], j);
  }
}

TEST(Similarity, ParallelBitIdenticalToReference) {
  Rng rng(2);
  const auto q = oracle::random_dense(137, 33, rng);
  const auto c = oracle::random_dense(261, 33, rng);
  const auto a = nn::similarity_matrix(q, c);
  const auto b = nn::reference::similarity_matrix(q, c);
  EXPECT_EQ(a, b);
  for (double v : a.values()) {
    EXPECT_LE(v, 1.0);
    EXPECT_GE(v, -1.0);
  }
}

TEST(Nearest, AgreesWithTopOne) {
  Rng rng(3);
  const auto q = oracle::random_dense(50, 5, rng);
  const auto c = oracle::random_dense(70, 5, rng);
  const auto top = nn::top_k(q, c, 1);
  const auto near = nn::nearest(q, c);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(near[i], top[i].neighbors[0].id);
}

TEST(Hubness, Counting) {
  const std::vector<EntityId> a{4, 4, 2};
  const auto r = nn::hubness(a, 10);
  EXPECT_EQ(r.counts.at(4), 2u);
  EXPECT_EQ(r.counts.at(2), 1u);
  EXPECT_EQ(r.queries, 3u);
  ASSERT_EQ(r.top.size(), 2u);
  EXPECT_EQ(r.top[0], (std::pair<EntityId, std::size_t>{4, 2}));

  const auto empty = nn::hubness({}, 10);
  EXPECT_TRUE(empty.counts.empty());
  EXPECT_TRUE(empty.top.empty());

  const std::vector<EntityId> hub(1000, 17);
  EXPECT_EQ(nn::hubness(hub, 5).max_count(), 1000u);
}

TEST(Hubness, TiesByIdAndOrderInvariant) {
  Rng rng(4);
  std::vector<EntityId> top1;
  for (int i = 0; i < 500; ++i) top1.push_back(EntityId(rng.below(40)));
  const auto a = nn::hubness(top1, 40);
  std::shuffle(top1.begin(), top1.end(), rng.engine());
  const auto b = nn::hubness(top1, 40);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.top, b.top);
  std::size_t total = 0;
  for (const auto& [id, n] : a.counts) total += n;
  EXPECT_EQ(total, 500u);
  for (std::size_t i = 1; i < a.top.size(); ++i) {
    EXPECT_TRUE(a.top[i - 1].second > a.top[i].second ||
                (a.top[i - 1].second == a.top[i].second && a.top[i - 1].first < a.top[i].first));
  }
}

}  // namespace
}  // namespace mhp
