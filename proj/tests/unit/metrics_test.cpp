// Copyright 2026 The impgcn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "impgcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace impgcn {
namespace {

using Ids = std::vector<NodeId>;

std::vector<NodeId> rank(const std::vector<double>& scores, const Ids& ex = {}) {
  return rank_items<double>(scores, ex);
}

TEST(Ranking, ScoreDescendingTiesByIndex) {
  EXPECT_EQ(rank({0.1, 0.9, 0.9}), (Ids{1, 2, 0}));
  EXPECT_EQ(rank({0.0, 0.0, 0.0}), (Ids{0, 1, 2}));
}

TEST(Ranking, SkipsExcludedItems) {
  EXPECT_EQ(rank({0.1, 0.9, 0.9, 0.5}, {1}), (Ids{2, 3, 0}));
  EXPECT_THROW(rank({0.1, 0.2}, {0, 1}), DataError);
  EXPECT_THROW(rank({0.1, std::nan("")}), NumericalError);
}

TEST(Ranking, TopNIsPrefixOfFullRanking) {
  Rng rng(1);
  std::uniform_int_distribution<int> coarse(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(40);
    for (auto& s : scores) s = coarse(rng) * 0.25;
    Ids ex;
    for (NodeId i = 0; i < 40; i += 7) ex.push_back(i);
    const auto full = rank(scores, ex);
    // Permutation of the candidates.
    std::set<NodeId> uniq(full.begin(), full.end());
    EXPECT_EQ(uniq.size(), full.size());
    EXPECT_EQ(full.size(), 40u - ex.size());
    const std::set<NodeId> ex_set(ex.begin(), ex.end());
    EXPECT_EQ(full, testing::brute_force_ranking(scores, ex_set));
    for (std::size_t n : {1u, 5u, 20u, 60u}) {
      const auto top = top_n_items<double>(scores, ex, n);
      ASSERT_EQ(top.size(), std::min(n, full.size()));
      EXPECT_TRUE(std::equal(top.begin(), top.end(), full.begin()));
    }
  }
}

TEST(Recall, Examples) {
  EXPECT_DOUBLE_EQ(*recall_at_n(Ids{3, 1, 2}, Ids{1, 5}, 2), 0.5);
  EXPECT_DOUBLE_EQ(*recall_at_n(Ids{3, 1, 2}, Ids{1, 2}, 3), 1.0);
  EXPECT_DOUBLE_EQ(*recall_at_n(Ids{3, 1, 2}, Ids{7}, 3), 0.0);
  EXPECT_FALSE(recall_at_n(Ids{3, 1, 2}, Ids{}, 3).has_value());
}

TEST(Ndcg, Examples) {
  EXPECT_DOUBLE_EQ(*ndcg_at_n(Ids{4, 2}, Ids{4}, 2), 1.0);
  EXPECT_NEAR(*ndcg_at_n(Ids{2, 4}, Ids{4}, 2), 0.63093, 1e-5);
  EXPECT_NEAR(*ndcg_at_n(Ids{2, 4}, Ids{4}, 2), 1.0 / std::log2(3.0), 1e-15);
  // Two targets, hits at positions 1 and 3.
  const double dcg = 1.0 + 1.0 / std::log2(4.0);
  const double idcg = 1.0 + 1.0 / std::log2(3.0);
  EXPECT_NEAR(*ndcg_at_n(Ids{5, 0, 6}, Ids{5, 6}, 3), dcg / idcg, 1e-15);
  EXPECT_DOUBLE_EQ(*ndcg_at_n(Ids{1, 2}, Ids{8}, 2), 0.0);
  EXPECT_FALSE(ndcg_at_n(Ids{1}, Ids{}, 1).has_value());
}

TEST(Metrics, AgreeWithBruteForce) {
  Rng rng(2);
  std::uniform_int_distribution<NodeId> item(0, 49);
  std::uniform_int_distribution<std::size_t> cut(1, 30);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> scores(50);
    for (auto& s : scores) s = std::normal_distribution<double>()(rng);
    std::set<NodeId> targets;
    const int count = 1 + trial % 8;
    while (static_cast<int>(targets.size()) < count) targets.insert(item(rng));
    const Ids tvec(targets.begin(), targets.end());
    const auto n = cut(rng);
    const auto ranked = testing::brute_force_ranking(scores, {});
    const auto top = top_n_items<double>(scores, {}, n);
    EXPECT_NEAR(*recall_at_n(top, tvec, n),
                testing::brute_force_recall(ranked, targets, n), 1e-12);
    EXPECT_NEAR(*ndcg_at_n(top, tvec, n),
                testing::brute_force_ndcg(ranked, targets, n), 1e-12);
  }
}

TEST(Metrics, BoundsAndMonotonicity) {
  Rng rng(3);
  std::uniform_int_distribution<NodeId> item(0, 29);
  for (int trial = 0; trial < 200; ++trial) {
    Ids ranked(30);
    std::iota(ranked.begin(), ranked.end(), 0);
    std::shuffle(ranked.begin(), ranked.end(), rng);
    Ids targets{item(rng), item(rng), item(rng)};
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    const std::size_t n = 10;
    const double r = *recall_at_n(ranked, targets, n);
    const double g = *ndcg_at_n(ranked, targets, n);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 1.0 + 1e-12);
    // Swap a target from below the cutoff with a miss above it.
    const auto is_target = [&](NodeId x) {
      return std::binary_search(targets.begin(), targets.end(), x);
    };
    std::ptrdiff_t miss = -1, low = -1;
    for (std::size_t p = 0; p < ranked.size(); ++p) {
      if (p < n && miss < 0 && !is_target(ranked[p])) miss = p;
      if (p >= n && low < 0 && is_target(ranked[p])) low = p;
    }
    if (miss < 0 || low < 0) continue;
    std::swap(ranked[miss], ranked[low]);
    EXPECT_GT(*recall_at_n(ranked, targets, n), r);
    EXPECT_GT(*ndcg_at_n(ranked, targets, n), g);
  }
}

TEST(Metrics, ShiftInvariantRanking) {
  Rng rng(4);
  std::vector<double> scores(25);
  for (auto& s : scores) s = std::normal_distribution<double>()(rng);
  auto shifted = scores;
  for (auto& s : shifted) s = 3.0 * s + 11.0;
  EXPECT_EQ(rank(scores), rank(shifted));
}

TEST(Evaluate, MatchesBruteForceOracle) {
  Rng rng(5);
  const NodeId users = 30, items = 40;
  const auto ue = testing::random_table(users, 6, rng);
  const auto ie = testing::random_table(items, 6, rng);
  const auto train = testing::random_interactions(users, items, 0.1, rng);
  std::vector<Interaction> held;
  std::uniform_int_distribution<NodeId> pick(0, items - 1);
  for (NodeId u = 0; u < users; ++u) {
    if (u % 5 == 4) continue;  // users without targets are skipped
    for (int k = 0; k < 3; ++k) held.push_back({u, pick(rng)});
  }
  std::erase_if(held, [&](const Interaction& x) {
    return std::find(train.begin(), train.end(), x) != train.end();
  });
  const std::span<const Interaction> ex[] = {train};
  const auto task = EvalTask::from_interactions(users, items, held, ex);
  const std::vector<NodeId> groups = [&] {
    std::vector<NodeId> g(users);
    for (NodeId u = 0; u < users; ++u) g[u] = u % 3;
    return g;
  }();
  EvalOptions opts;
  opts.cutoff = 10;
  opts.keep_per_user = true;
  opts.group_of_user = &groups;
  opts.num_groups = 3;
  const auto report = evaluate(ue, ie, task, opts);

  double rsum = 0.0, nsum = 0.0;
  int counted = 0;
  std::vector<double> grec(3, 0.0);
  std::vector<int> gcount(3, 0);
  for (NodeId u = 0; u < users; ++u) {
    if (task.targets[u].empty()) continue;
    std::vector<double> scores(items);
    for (NodeId i = 0; i < items; ++i) scores[i] = ue.row(u).dot(ie.row(i));
    const std::set<NodeId> ex_set(task.exclusions[u].begin(), task.exclusions[u].end());
    const std::set<NodeId> tg(task.targets[u].begin(), task.targets[u].end());
    const auto ranked = testing::brute_force_ranking(scores, ex_set);
    const double r = testing::brute_force_recall(ranked, tg, 10);
    rsum += r;
    nsum += testing::brute_force_ndcg(ranked, tg, 10);
    grec[u % 3] += r;
    ++gcount[u % 3];
    ++counted;
  }
  EXPECT_EQ(report.num_users, counted);
  EXPECT_EQ(static_cast<int>(report.per_user.size()), counted);
  EXPECT_NEAR(report.recall, rsum / counted, 1e-12);
  EXPECT_NEAR(report.ndcg, nsum / counted, 1e-12);
  ASSERT_EQ(report.per_group.size(), 3u);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(report.per_group[s].num_users, gcount[s]);
    EXPECT_NEAR(report.per_group[s].recall, grec[s] / gcount[s], 1e-12);
  }
}

TEST(Evaluate, ZeroEmbeddingsRankByIndex) {
  const NodeId users = 2, items = 5;
  const Table<double> ue = Table<double>::Zero(users, 3);
  const Table<double> ie = Table<double>::Zero(items, 3);
  EvalTask task{items, {{0, 1}, {4}}, {}};
  EvalOptions opts;
  opts.cutoff = 2;
  const auto report = evaluate(ue, ie, task, opts);
  EXPECT_DOUBLE_EQ(report.recall, 0.5);  // user 0 hits both, user 1 none
  EXPECT_DOUBLE_EQ(report.ndcg, 0.5);
}

TEST(Evaluate, MemorisedEmbeddingsGivePerfectRecall) {
  // One-hot users and items: each user scores only its own items.
  const NodeId users = 4, items = 8;
  Table<double> ue = Table<double>::Zero(users, users);
  Table<double> ie = Table<double>::Zero(items, users);
  EvalTask task{items, std::vector<Ids>(users), {}};
  for (NodeId u = 0; u < users; ++u) {
    ue(u, u) = 1.0;
    ie(2 * u, u) = 1.0;
    ie(2 * u + 1, u) = 1.0;
    task.targets[u] = {2 * u, 2 * u + 1};
  }
  EvalOptions opts;
  opts.cutoff = 2;
  const auto report = evaluate(ue, ie, task, opts);
  EXPECT_DOUBLE_EQ(report.recall, 1.0);
  EXPECT_DOUBLE_EQ(report.ndcg, 1.0);
}

TEST(Evaluate, Errors) {
  const Table<double> ue = Table<double>::Zero(2, 3);
  const Table<double> ie = Table<double>::Zero(4, 3);
  EvalTask none{4, std::vector<Ids>(2), {}};
  EXPECT_THROW(evaluate(ue, ie, none, {}), DataError);
  EvalTask wrong{5, {{1}, {}}, {}};
  EXPECT_THROW(evaluate(ue, ie, wrong, {}), UsageError);
  const std::vector<Interaction> bad{{0, 9}};
  EXPECT_THROW(EvalTask::from_interactions(2, 4, bad, {}), DataError);
}

}  // namespace
}  // namespace impgcn
