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

#ifndef IMPGCN_PROPAGATION_HPP_
#define IMPGCN_PROPAGATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "impgcn/common.hpp"
#include "impgcn/graph.hpp"
#include "impgcn/subgraph.hpp"

namespace impgcn {

template <typename Real>
struct AdamMoments {
  Table<Real> first_users, second_users;
  Table<Real> first_items, second_items;
  std::int64_t step = 0;
};

/// Trainable ID embeddings E^(0), the frozen grouping network and the
/// optimizer state.
template <typename Real>
struct ModelState {
  Table<Real> user_embeddings;  // N x d
  Table<Real> item_embeddings;  // M x d
  GroupingParams<Real> grouping;
  AdamMoments<Real> moments;

  Eigen::Index dim() const { return user_embeddings.cols(); }
  NodeId num_users() const {
    return static_cast<NodeId>(user_embeddings.rows());
  }
  NodeId num_items() const {
    return static_cast<NodeId>(item_embeddings.rows());
  }
  NodeId num_groups() const {
    return static_cast<NodeId>(grouping.num_groups());
  }

  /// Xavier-uniform embeddings (bound sqrt(6 / 2d)) drawn users first, then
  /// items, then the grouping network. Moments start at zero.
  static ModelState initialize(NodeId num_users, NodeId num_items,
                               Eigen::Index dim, NodeId num_groups, Rng& rng,
                               double leaky_slope = 0.2);

  void reset_moments();
  void validate() const;
};

struct PropagationOptions {
  int layers = 3;
  // IMP-GCN_f: layer-one item embeddings are sums of per-group embeddings.
  bool ablate_first_order = false;
  int max_layers = 8;
  int threads = 1;
};

/// Every intermediate of one forward pass.
///
/// users[k] / items[k] hold E^(k) for k = 0..K. group_items[k][s] holds the
/// per-group item embeddings e_is^(k) for the local items of group s
/// (k >= 1; group_items[0] is empty). final_* are the uniform layer
/// combinations with weight alpha = 1 / (K + 1).
template <typename Real>
struct LayerStack {
  int layers = 0;
  double alpha = 1.0;
  bool ablate_first_order = false;
  std::uint64_t partition_generation = 0;
  std::vector<Table<Real>> users;
  std::vector<Table<Real>> items;
  std::vector<std::vector<Table<Real>>> group_items;
  Table<Real> final_users;
  Table<Real> final_items;
};

template <typename Real>
struct EmbeddingGradients {
  Table<Real> users;
  Table<Real> items;
};

/// Interest-aware propagation.
///
/// Layer one aggregates over the whole graph. From layer two on, a user of
/// group s aggregates the group-s embeddings of its items, and the group-s
/// embedding of an item aggregates only the users of group s. The item
/// embedding of a layer is the sum of its per-group embeddings. With a
/// single group this is exactly LightGCN.
template <typename Real>
LayerStack<Real> forward(const Table<Real>& user_embeddings,
                         const Table<Real>& item_embeddings,
                         const InteractionGraph& graph,
                         const SubgraphPartition& partition,
                         const PropagationOptions& options);

template <typename Real>
LayerStack<Real> forward(const ModelState<Real>& state,
                         const InteractionGraph& graph,
                         const SubgraphPartition& partition,
                         const PropagationOptions& options) {
  return forward(state.user_embeddings, state.item_embeddings, graph,
                 partition, options);
}

/// Reverse mode of forward: maps gradients on the final combined
/// embeddings to gradients on E^(0). Throws UsageError when the partition
/// has been rebuilt since `stack` was computed.
template <typename Real>
EmbeddingGradients<Real> backward(const LayerStack<Real>& stack,
                                  const InteractionGraph& graph,
                                  const SubgraphPartition& partition,
                                  const Table<Real>& grad_final_users,
                                  const Table<Real>& grad_final_items,
                                  int threads = 1);

/// Preference score, the inner product of the two embeddings.
template <typename Real>
Real predict(const Eigen::Ref<const Vector<Real>>& user,
             const Eigen::Ref<const Vector<Real>>& item) {
  if (user.size() != item.size()) {
    throw UsageError("score needs embeddings of equal dimension");
  }
  return user.dot(item);
}

}  // namespace impgcn

#endif  // IMPGCN_PROPAGATION_HPP_
