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

#include "impgcn/propagation.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace impgcn {
namespace {

struct Instance {
  std::vector<Interaction> edges;
  NodeId users = 0, items = 0;
  InteractionGraph graph;
  std::vector<NodeId> groups;
  NodeId num_groups = 1;
  Table<double> u0, i0;
};

Instance make_instance(Rng& rng, NodeId users, NodeId items, NodeId groups,
                       Eigen::Index dim = 4) {
  Instance in;
  in.users = users;
  in.items = items;
  in.edges = testing::random_interactions(users, items, 0.25, rng);
  in.graph = build_graph(in.edges);
  in.num_groups = groups;
  std::uniform_int_distribution<NodeId> pick(0, groups - 1);
  in.groups.resize(users);
  for (auto& g : in.groups) g = pick(rng);
  in.u0 = testing::random_table(users, dim, rng);
  in.i0 = testing::random_table(items, dim, rng);
  return in;
}

PropagationOptions layers(int k) {
  PropagationOptions o;
  o.layers = k;
  return o;
}

TEST(Forward, SingleEdge) {
  const std::vector<Interaction> edges{{0, 0}};
  const auto g = build_graph(edges);
  const auto p = SubgraphPartition::from_assignment(g, {0}, 1);
  Table<double> u(1, 2), i(1, 2);
  u << 1.0, 2.0;
  i << 3.0, -1.0;
  const auto st = forward(u, i, g, p, layers(1));
  EXPECT_EQ(st.users[1], i);
  EXPECT_EQ(st.items[1], u);
  EXPECT_NEAR(st.final_users(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(st.final_items(0, 1), 0.5, 1e-12);
}

TEST(Forward, ZeroLayersIsIdentity) {
  Rng rng(1);
  const auto in = make_instance(rng, 8, 6, 2);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 2);
  const auto st = forward(in.u0, in.i0, in.graph, p, layers(0));
  EXPECT_EQ(st.final_users, in.u0);
  EXPECT_EQ(st.final_items, in.i0);
  EXPECT_DOUBLE_EQ(st.alpha, 1.0);
}

TEST(Forward, SingleGroupReducesToLightGcn) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = make_instance(rng, 12 + trial, 9, 1);
    const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 1);
    const int k = 1 + trial % 4;
    const auto st = forward(in.u0, in.i0, in.graph, p, layers(k));
    const auto oracle =
        testing::lightgcn_oracle(in.edges, in.users, in.items, in.u0, in.i0, k);
    EXPECT_LT(testing::max_abs_diff(st.final_users, oracle.users), 1e-10);
    EXPECT_LT(testing::max_abs_diff(st.final_items, oracle.items), 1e-10);
  }
}

TEST(Forward, MatchesNodeFormOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = make_instance(rng, 15, 10, 1 + trial % 4);
    const auto p = SubgraphPartition::from_assignment(in.graph, in.groups,
                                                      in.num_groups);
    const int k = 1 + trial % 3;
    const auto st = forward(in.u0, in.i0, in.graph, p, layers(k));
    const auto oracle = testing::nodeform_oracle(in.edges, in.users, in.items,
                                                 in.groups, in.u0, in.i0, k);
    EXPECT_LT(testing::max_abs_diff(st.final_users, oracle.users), 1e-10);
    EXPECT_LT(testing::max_abs_diff(st.final_items, oracle.items), 1e-10);
    for (int layer = 0; layer <= k; ++layer) {
      EXPECT_LT(testing::max_abs_diff(st.users[layer], oracle.user_layers[layer]),
                1e-10);
      EXPECT_LT(testing::max_abs_diff(st.items[layer], oracle.item_layers[layer]),
                1e-10);
    }
    // Per-group item slots.
    for (int layer = 1; layer <= k; ++layer) {
      for (NodeId s = 0; s < in.num_groups; ++s) {
        const auto& lap = p.laplacian(s);
        for (std::size_t li = 0; li < lap.items().size(); ++li) {
          const auto& want = oracle.group_items.at({layer, lap.items()[li], s});
          for (Eigen::Index c = 0; c < in.u0.cols(); ++c) {
            EXPECT_NEAR(st.group_items[layer][s](li, c), want[c], 1e-10);
          }
        }
      }
    }
  }
}

TEST(Forward, StarGraphGroupItemEmbeddings) {
  // One item, three users; u0 and u1 in group 0, u2 in group 1.
  const std::vector<Interaction> edges{{0, 0}, {1, 0}, {2, 0}};
  const auto g = build_graph(edges);
  const auto p = SubgraphPartition::from_assignment(g, {0, 0, 1}, 2);
  Table<double> u(3, 1), i(1, 1);
  u << 1.0, 2.0, 4.0;
  i << 1.0;
  const auto st = forward(u, i, g, p, layers(2));
  const double w = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(st.group_items[1][0](0, 0), 3.0 * w, 1e-12);
  EXPECT_NEAR(st.group_items[1][1](0, 0), 4.0 * w, 1e-12);
  // Layer-two users only see their own group's item embedding.
  EXPECT_NEAR(st.users[2](0, 0), w * 3.0 * w, 1e-12);
  EXPECT_NEAR(st.users[2](2, 0), w * 4.0 * w, 1e-12);
}

TEST(Forward, LayerItemsAreSumOfGroupItems) {
  Rng rng(4);
  const auto in = make_instance(rng, 20, 12, 3);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 3);
  const auto st = forward(in.u0, in.i0, in.graph, p, layers(3));
  for (int k = 1; k <= 3; ++k) {
    Table<double> sum = Table<double>::Zero(in.items, in.i0.cols());
    for (NodeId s = 0; s < 3; ++s) {
      const auto& ids = p.laplacian(s).items();
      for (std::size_t li = 0; li < ids.size(); ++li) {
        sum.row(ids[li]) += st.group_items[k][s].row(li);
      }
    }
    EXPECT_LT((sum - st.items[k]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, IsLinearForFixedPartition) {
  Rng rng(5);
  const auto a = make_instance(rng, 14, 9, 3);
  const auto p = SubgraphPartition::from_assignment(a.graph, a.groups, 3);
  const Table<double> u2 = testing::random_table(14, 4, rng);
  const Table<double> i2 = testing::random_table(9, 4, rng);
  const auto sa = forward(a.u0, a.i0, a.graph, p, layers(3));
  const auto sb = forward(u2, i2, a.graph, p, layers(3));
  const Table<double> uc = 2.0 * a.u0 - 0.5 * u2;
  const Table<double> ic = 2.0 * a.i0 - 0.5 * i2;
  const auto sc = forward(uc, ic, a.graph, p, layers(3));
  EXPECT_LT((sc.final_users - (2.0 * sa.final_users - 0.5 * sb.final_users))
                .cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((sc.final_items - (2.0 * sa.final_items - 0.5 * sb.final_items))
                .cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, SingleGroupLayerNormsDoNotGrow) {
  Rng rng(6);
  const auto in = make_instance(rng, 30, 20, 1);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 1);
  const auto st = forward(in.u0, in.i0, in.graph, p, layers(6));
  auto norm = [&](int k) {
    return std::sqrt(st.users[k].squaredNorm() + st.items[k].squaredNorm());
  };
  for (int k = 1; k <= 6; ++k) EXPECT_LE(norm(k), norm(k - 1) + 1e-12);
}

TEST(Forward, FirstOrderAblationUnderFullDegreesIsIdentical) {
  Rng rng(7);
  const auto in = make_instance(rng, 16, 10, 3);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 3);
  auto opts = layers(3);
  const auto base = forward(in.u0, in.i0, in.graph, p, opts);
  opts.ablate_first_order = true;
  const auto ablated = forward(in.u0, in.i0, in.graph, p, opts);
  EXPECT_LT((base.final_users - ablated.final_users).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((base.final_items - ablated.final_items).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, FirstOrderAblationDiffersUnderSubgraphDegrees) {
  Rng rng(8);
  const auto in = make_instance(rng, 16, 10, 3);
  const auto p = SubgraphPartition::from_assignment(
      in.graph, in.groups, 3, DegreeNormalization::kSubgraph);
  auto opts = layers(2);
  const auto base = forward(in.u0, in.i0, in.graph, p, opts);
  opts.ablate_first_order = true;
  const auto ablated = forward(in.u0, in.i0, in.graph, p, opts);
  EXPECT_GT((base.final_users - ablated.final_users).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Forward, Errors) {
  Rng rng(9);
  const auto in = make_instance(rng, 6, 5, 2);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 2);
  EXPECT_THROW(forward(in.u0, in.i0, in.graph, p, layers(9)), UsageError);
  EXPECT_THROW(forward(in.u0, in.i0, in.graph, p, layers(-1)), UsageError);
  const auto other = make_instance(rng, 7, 5, 2);
  const auto q = SubgraphPartition::from_assignment(other.graph, other.groups, 2);
  EXPECT_THROW(forward(in.u0, in.i0, in.graph, q, layers(2)), UsageError);
  const Table<double> short_users = in.u0.topRows(5);
  EXPECT_THROW(forward(short_users, in.i0, in.graph, p, layers(2)), UsageError);
}

TEST(Predict, DotProduct) {
  Vector<double> a(3), b(3), c(2);
  a << 1, 2, 3;
  b << 4, -5, 6;
  c << 1, 1;
  EXPECT_DOUBLE_EQ(predict<double>(a, b), 12.0);
  EXPECT_THROW(predict<double>(a, c), UsageError);
}

// Scalar objective <G_u, final_users> + <G_i, final_items>.
double objective(const LayerStack<double>& st, const Table<double>& gu,
                 const Table<double>& gi) {
  return st.final_users.cwiseProduct(gu).sum() +
         st.final_items.cwiseProduct(gi).sum();
}

void check_gradients(const Instance& in, const SubgraphPartition& p,
                     const PropagationOptions& opts, Rng& rng) {
  const auto gu = testing::random_table(in.users, in.u0.cols(), rng);
  const auto gi = testing::random_table(in.items, in.u0.cols(), rng);
  const auto st = forward(in.u0, in.i0, in.graph, p, opts);
  const auto grads = backward(st, in.graph, p, gu, gi);
  const double h = 1e-5;
  auto probe = [&](bool user_side, Eigen::Index r, Eigen::Index c) {
    Table<double> u = in.u0, i = in.i0;
    auto& t = user_side ? u : i;
    t(r, c) += h;
    const double plus = objective(forward(u, i, in.graph, p, opts), gu, gi);
    t(r, c) -= 2 * h;
    const double minus = objective(forward(u, i, in.graph, p, opts), gu, gi);
    const double numeric = (plus - minus) / (2 * h);
    const double analytic = user_side ? grads.users(r, c) : grads.items(r, c);
    const double rel = std::abs(numeric - analytic) /
                       std::max(1e-8, std::abs(numeric) + std::abs(analytic));
    EXPECT_LT(rel, 1e-4) << (user_side ? "user " : "item ") << r << "," << c;
  };
  for (NodeId u = 0; u < in.users; ++u) probe(true, u, u % in.u0.cols());
  for (NodeId i = 0; i < in.items; ++i) probe(false, i, i % in.u0.cols());
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(10);
  for (int trial = 0; trial < 4; ++trial) {
    const auto in = make_instance(rng, 12, 9, 1 + trial);
    const auto p = SubgraphPartition::from_assignment(in.graph, in.groups,
                                                      in.num_groups);
    check_gradients(in, p, layers(1 + trial), rng);
  }
}

TEST(Backward, MatchesFiniteDifferencesWithAblationAndSubgraphDegrees) {
  Rng rng(11);
  const auto in = make_instance(rng, 12, 9, 3);
  const auto p = SubgraphPartition::from_assignment(
      in.graph, in.groups, 3, DegreeNormalization::kSubgraph);
  auto opts = layers(3);
  check_gradients(in, p, opts, rng);
  opts.ablate_first_order = true;
  check_gradients(in, p, opts, rng);
}

TEST(Backward, ZeroLayersScalesUpstream) {
  Rng rng(12);
  const auto in = make_instance(rng, 6, 5, 2);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 2);
  const auto st = forward(in.u0, in.i0, in.graph, p, layers(0));
  const auto gu = testing::random_table(6, 4, rng);
  const auto gi = testing::random_table(5, 4, rng);
  const auto grads = backward(st, in.graph, p, gu, gi);
  EXPECT_EQ(grads.users, gu);
  EXPECT_EQ(grads.items, gi);
}

TEST(Backward, ZeroUpstreamGivesZero) {
  Rng rng(13);
  const auto in = make_instance(rng, 10, 7, 3);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 3);
  const auto st = forward(in.u0, in.i0, in.graph, p, layers(3));
  const Table<double> gu = Table<double>::Zero(10, 4);
  const Table<double> gi = Table<double>::Zero(7, 4);
  const auto grads = backward(st, in.graph, p, gu, gi);
  EXPECT_TRUE(grads.users.isZero(0.0));
  EXPECT_TRUE(grads.items.isZero(0.0));
}

TEST(Backward, RejectsStaleStack) {
  Rng rng(14);
  const auto in = make_instance(rng, 10, 7, 2);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 2);
  const auto st = forward(in.u0, in.i0, in.graph, p, layers(2));
  const auto q = SubgraphPartition::from_assignment(in.graph, in.groups, 2);
  EXPECT_THROW(backward(st, in.graph, q, in.u0, in.i0), UsageError);
  EXPECT_NO_THROW(backward(st, in.graph, p, in.u0, in.i0));
}

TEST(Backward, FloatAgreesWithDouble) {
  Rng rng(15);
  const auto in = make_instance(rng, 10, 8, 2);
  const auto p = SubgraphPartition::from_assignment(in.graph, in.groups, 2);
  const auto sd = forward(in.u0, in.i0, in.graph, p, layers(3));
  const Table<float> uf = in.u0.cast<float>(), if_ = in.i0.cast<float>();
  const auto sf = forward(uf, if_, in.graph, p, layers(3));
  EXPECT_LT((sf.final_users.cast<double>() - sd.final_users).cwiseAbs().maxCoeff(),
            1e-5);
}

TEST(ModelState, InitializeShapesAndBounds) {
  Rng rng(16);
  const auto s = ModelState<float>::initialize(5, 7, 8, 3, rng);
  EXPECT_EQ(s.num_users(), 5);
  EXPECT_EQ(s.num_items(), 7);
  EXPECT_EQ(s.num_groups(), 3);
  const float bound = std::sqrt(6.0f / 16.0f);
  EXPECT_LE(s.user_embeddings.cwiseAbs().maxCoeff(), bound);
  EXPECT_TRUE(s.moments.first_users.isZero(0.0f));
  EXPECT_NO_THROW(s.validate());
  Rng again(16);
  const auto t = ModelState<float>::initialize(5, 7, 8, 3, again);
  EXPECT_EQ(s.item_embeddings, t.item_embeddings);
  EXPECT_EQ(s.grouping.w3, t.grouping.w3);
}

}  // namespace
}  // namespace impgcn
