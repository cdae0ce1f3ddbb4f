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

#include "impgcn/subgraph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace impgcn {
namespace {

GroupingParams<double> identity_params(Eigen::Index d, Eigen::Index groups) {
  GroupingParams<double> p;
  p.w1 = Table<double>::Identity(d, d);
  p.w2 = Table<double>::Identity(d, d);
  p.w3 = Table<double>::Zero(d, groups);
  p.b1 = Vector<double>::Zero(d);
  p.b2 = Vector<double>::Zero(d);
  p.b3 = Vector<double>::Zero(groups);
  return p;
}

TEST(FuseFeatures, ZeroInputsGiveZero) {
  const auto p = identity_params(3, 2);
  const Vector<double> z = Vector<double>::Zero(3);
  EXPECT_TRUE(fuse_features<double>(z, z, p).isZero(0.0));
}

TEST(FuseFeatures, LeakyReluOnIdentity) {
  const auto p = identity_params(2, 2);
  Vector<double> e0(2), e1(2);
  e0 << 0.25, -0.5;
  e1 << 0.75, -0.5;  // sum (1, -1)
  const auto f = fuse_features<double>(e0, e1, p);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_DOUBLE_EQ(f[1], -0.2);
}

TEST(FuseFeatures, MatchesDenseLoopOracle) {
  Rng rng(4);
  const Eigen::Index d = 6;
  auto p = GroupingParams<double>::xavier(d, 3, rng);
  p.b1 = testing::random_table(d, 1, rng).col(0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector<double> e0 = testing::random_table(d, 1, rng).col(0);
    const Vector<double> e1 = testing::random_table(d, 1, rng).col(0);
    const auto f = fuse_features<double>(e0, e1, p);
    for (Eigen::Index k = 0; k < d; ++k) {
      double acc = p.b1[k];
      for (Eigen::Index j = 0; j < d; ++j) acc += (e0[j] + e1[j]) * p.w1(j, k);
      const double expected = acc >= 0 ? acc : 0.2 * acc;
      EXPECT_NEAR(f[k], expected, 1e-6);
    }
  }
}

TEST(FuseFeatures, StructureAblationIgnoresPropagatedTerm) {
  Rng rng(9);
  const auto p = GroupingParams<double>::xavier(4, 2, rng);
  const Vector<double> e0 = testing::random_table(4, 1, rng).col(0);
  const Vector<double> e1 = testing::random_table(4, 1, rng).col(0);
  const Vector<double> zero = Vector<double>::Zero(4);
  EXPECT_EQ(fuse_features<double>(e0, e1, p, true),
            fuse_features<double>(e0, zero, p, false));
}

TEST(FuseFeatures, DimensionMismatchThrows) {
  const auto p = identity_params(3, 2);
  const Vector<double> a = Vector<double>::Zero(3), b = Vector<double>::Zero(2);
  EXPECT_THROW(fuse_features<double>(a, b, p), UsageError);
}

TEST(ClassifyUser, ArgmaxOfLogits) {
  Vector<double> logits(3);
  logits << 0.1, 0.9, 0.3;
  EXPECT_EQ(argmax_group<double>(logits), 1);
  Vector<double> tie(2);
  tie << 0.5, 0.5;
  EXPECT_EQ(argmax_group<double>(tie), 0);
}

TEST(ClassifyUser, BiasOnlyLogits) {
  auto p = identity_params(2, 3);
  p.b3 << 0.1, 0.9, 0.3;
  const Vector<double> f = Vector<double>::Ones(2);
  EXPECT_EQ(classify_user<double>(f, p), 1);
}

TEST(ClassifyUser, SingleGroupAlwaysZero) {
  Rng rng(1);
  const auto p = GroupingParams<double>::xavier(5, 1, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector<double> f = testing::random_table(5, 1, rng).col(0);
    EXPECT_EQ(classify_user<double>(f, p), 0);
  }
}

TEST(ClassifyUser, ShiftingOutputBiasKeepsAssignment) {
  Rng rng(2);
  auto p = GroupingParams<double>::xavier(8, 4, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector<double> f = testing::random_table(8, 1, rng).col(0);
    const auto before = classify_user<double>(f, p);
    auto shifted = p;
    shifted.b3.array() += 3.25;
    EXPECT_EQ(classify_user<double>(f, shifted), before);
  }
}

TEST(ClassifyUser, Errors) {
  auto p = identity_params(2, 2);
  const Vector<double> wrong = Vector<double>::Zero(3);
  EXPECT_THROW(classify_user<double>(wrong, p), UsageError);
  p.b3[1] = std::nan("");
  const Vector<double> f = Vector<double>::Ones(2);
  EXPECT_THROW(classify_user<double>(f, p), NumericalError);
}

std::map<std::pair<NodeId, NodeId>, double> summed(const SubgraphPartition& p) {
  std::map<std::pair<NodeId, NodeId>, double> out;
  for (const auto& lap : p.laplacians()) {
    for (const auto& e : lap.entries()) out[{e.user, e.item}] += e.weight;
  }
  return out;
}

std::map<std::pair<NodeId, NodeId>, double> whole(const InteractionGraph& g) {
  std::map<std::pair<NodeId, NodeId>, double> out;
  for (NodeId u = 0; u < g.num_users(); ++u) {
    const auto items = g.items_of(u);
    for (std::size_t k = 0; k < items.size(); ++k) {
      out[{u, items[k]}] = g.user_edge_weights(u)[k];
    }
  }
  return out;
}

TEST(BuildPartition, SingleGroupIsWholeGraph) {
  Rng rng(12);
  const auto g = build_graph(testing::random_interactions(10, 7, 0.3, rng));
  const auto p = SubgraphPartition::from_assignment(
      g, std::vector<NodeId>(10, 0), 1);
  EXPECT_EQ(summed(p), whole(g));
  EXPECT_EQ(p.laplacian(0).nnz(), g.num_edges());
  for (NodeId i = 0; i < g.num_items(); ++i) {
    ASSERT_EQ(p.item_groups(i).size(), 1u);
    EXPECT_EQ(p.item_groups(i)[0], 0);
  }
}

TEST(BuildPartition, ItemMembershipFollowsUsers) {
  // u0, u1 -> group 0; u2 -> group 1; i0 shared by u0 and u2.
  const std::vector<Interaction> edges{{0, 0}, {0, 1}, {1, 1}, {2, 0}, {2, 2}};
  const auto g = build_graph(edges);
  const auto p = SubgraphPartition::from_assignment(g, {0, 0, 1}, 2);
  const auto s0 = p.item_groups(0);
  EXPECT_EQ(std::vector<NodeId>(s0.begin(), s0.end()), (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(p.item_groups(1).size(), 1u);
  EXPECT_EQ(p.item_groups(2)[0], 1);
  EXPECT_EQ(p.laplacian(0).items(), (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(p.laplacian(1).users(), (std::vector<NodeId>{2}));
}

TEST(BuildPartition, MaskedLaplaciansSumToWholeLaplacian) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const NodeId users = 5 + trial % 20;
    const auto g = build_graph(testing::random_interactions(users, 9, 0.3, rng));
    const NodeId groups = 1 + trial % 4;
    std::uniform_int_distribution<NodeId> pick(0, groups - 1);
    std::vector<NodeId> assign(users);
    for (auto& a : assign) a = pick(rng);
    const auto p = SubgraphPartition::from_assignment(g, assign, groups);
    EXPECT_EQ(summed(p), whole(g));
    EdgeOffset nnz = 0;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& lap : p.laplacians()) {
      nnz += lap.nnz();
      for (const auto& e : lap.entries()) {
        EXPECT_TRUE(seen.insert({e.user, e.item}).second);
        EXPECT_EQ(p.group_of(e.user), lap.group());
      }
      // Both CSR directions of a masked Laplacian hold the same entries.
      std::multiset<std::tuple<NodeId, NodeId, double>> by_user, by_item;
      for (NodeId lu = 0; lu < lap.num_local_users(); ++lu) {
        for (auto k = lap.user_offsets()[lu]; k < lap.user_offsets()[lu + 1]; ++k) {
          by_user.insert({lu, lap.user_cols()[k], lap.user_weights()[k]});
        }
      }
      for (NodeId li = 0; li < lap.num_local_items(); ++li) {
        for (auto k = lap.item_offsets()[li]; k < lap.item_offsets()[li + 1]; ++k) {
          by_item.insert({lap.item_cols()[k], li, lap.item_weights()[k]});
        }
      }
      EXPECT_EQ(by_user, by_item);
    }
    EXPECT_EQ(nnz, g.num_edges());
    // Every user in exactly one group.
    std::int64_t covered = 0;
    for (auto s : p.group_sizes()) covered += s;
    EXPECT_EQ(covered, users);
  }
}

TEST(BuildPartition, EmptyGroupsAreAllowed) {
  const std::vector<Interaction> edges{{0, 0}, {1, 0}};
  const auto g = build_graph(edges);
  const auto p = SubgraphPartition::from_assignment(g, {0, 0}, 3);
  EXPECT_EQ(p.empty_groups(), (std::vector<NodeId>{1, 2}));
  EXPECT_TRUE(p.laplacian(2).empty());
  EXPECT_DOUBLE_EQ(p.size_entropy(), 0.0);
}

TEST(BuildPartition, RejectsBadAssignments) {
  const std::vector<Interaction> edges{{0, 0}, {1, 0}};
  const auto g = build_graph(edges);
  EXPECT_THROW(SubgraphPartition::from_assignment(g, {0}, 2), UsageError);
  EXPECT_THROW(SubgraphPartition::from_assignment(g, {0, 2}, 2), UsageError);
  EXPECT_THROW(SubgraphPartition::from_assignment(g, {0, 0}, 0), UsageError);
}

TEST(BuildPartition, SubgraphDegreeNormalization) {
  // i0 has users u0 (group 0) and u1, u2 (group 1).
  const std::vector<Interaction> edges{{0, 0}, {1, 0}, {2, 0}, {2, 1}};
  const auto g = build_graph(edges);
  const auto p = SubgraphPartition::from_assignment(
      g, {0, 1, 1}, 2, DegreeNormalization::kSubgraph);
  for (const auto& e : p.laplacian(1).entries()) {
    if (e.user == 1) EXPECT_DOUBLE_EQ(e.weight, 1.0 / std::sqrt(1.0 * 2.0));
    if (e.user == 2 && e.item == 0) {
      EXPECT_DOUBLE_EQ(e.weight, 1.0 / std::sqrt(2.0 * 2.0));
    }
  }
  EXPECT_DOUBLE_EQ(p.laplacian(0).entries()[0].weight, 1.0);
}

TEST(AssignGroups, InvariantToUserOrder) {
  Rng rng(31);
  const NodeId users = 25, items = 18;
  const auto edges = testing::random_interactions(users, items, 0.2, rng);
  const auto g = build_graph(edges);
  const auto ue = testing::random_table(users, 8, rng, 0.3);
  const auto ie = testing::random_table(items, 8, rng, 0.3);
  const auto params = GroupingParams<double>::xavier(8, 3, rng);
  const auto base = assign_groups(g, ue, ie, params);

  std::vector<NodeId> perm(users);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);  // old -> new id
  std::vector<Interaction> relabeled;
  for (const auto& e : edges) relabeled.push_back({perm[e.user], e.item});
  std::shuffle(relabeled.begin(), relabeled.end(), rng);
  Table<double> ue_perm(users, 8);
  for (NodeId u = 0; u < users; ++u) ue_perm.row(perm[u]) = ue.row(u);
  const auto moved = assign_groups(build_graph(relabeled), ue_perm, ie, params);
  for (NodeId u = 0; u < users; ++u) EXPECT_EQ(moved[perm[u]], base[u]);
}

TEST(AssignGroups, StructureAblationDependsOnlyOnIdEmbeddings) {
  Rng rng(32);
  const auto g = build_graph(testing::random_interactions(20, 15, 0.25, rng));
  const auto ue = testing::random_table(20, 6, rng);
  const auto params = GroupingParams<double>::xavier(6, 3, rng);
  PartitionOptions opts;
  opts.ablate_structure = true;
  const auto a = assign_groups(g, ue, testing::random_table(15, 6, rng), params, opts);
  const auto b = assign_groups(g, ue, testing::random_table(15, 6, rng), params, opts);
  EXPECT_EQ(a, b);
}

TEST(AssignGroups, FirstOrderTermIsWholeGraphAggregation) {
  const std::vector<Interaction> edges{{0, 0}, {0, 1}, {1, 1}};
  const auto g = build_graph(edges);
  Table<double> items(2, 1);
  items << 2.0, 4.0;
  const auto e1 = first_order_user_embeddings(g, items);
  EXPECT_NEAR(e1(0, 0), 2.0 / std::sqrt(2.0) + 4.0 / std::sqrt(4.0), 1e-12);
  EXPECT_NEAR(e1(1, 0), 4.0 / std::sqrt(2.0), 1e-12);
}

}  // namespace
}  // namespace impgcn
