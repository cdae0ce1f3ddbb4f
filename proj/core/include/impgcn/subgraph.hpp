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

#ifndef IMPGCN_SUBGRAPH_HPP_
#define IMPGCN_SUBGRAPH_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "impgcn/common.hpp"
#include "impgcn/graph.hpp"

namespace impgcn {

/// Frozen parameters of the user grouping network.
///
/// Row-vector convention: for an input row x of width d,
///   F   = LeakyReLU(x W1 + b1)        (d x d, d)
///   U_h = LeakyReLU(F W2 + b2)        (d x d, d)
///   U_o = U_h W3 + b3                 (d x N_s, N_s)
template <typename Real>
struct GroupingParams {
  Table<Real> w1, w2, w3;
  Vector<Real> b1, b2, b3;
  double leaky_slope = 0.2;

  Eigen::Index dim() const { return w1.rows(); }
  Eigen::Index num_groups() const { return w3.cols(); }

  /// Xavier-uniform weights, zero biases.
  static GroupingParams xavier(Eigen::Index dim, Eigen::Index num_groups,
                               Rng& rng, double leaky_slope = 0.2);

  /// Throws UsageError on inconsistent shapes, NumericalError on
  /// non-finite entries.
  void validate() const;

  template <typename Other>
  GroupingParams<Other> cast() const {
    GroupingParams<Other> out;
    out.w1 = w1.template cast<Other>();
    out.w2 = w2.template cast<Other>();
    out.w3 = w3.template cast<Other>();
    out.b1 = b1.template cast<Other>();
    out.b2 = b2.template cast<Other>();
    out.b3 = b3.template cast<Other>();
    out.leaky_slope = leaky_slope;
    return out;
  }
};

/// Fused user feature LeakyReLU((e0 + e1) W1 + b1). With `ablate_structure`
/// the propagated term e1 is dropped.
template <typename Real>
Vector<Real> fuse_features(const Eigen::Ref<const Vector<Real>>& e0,
                           const Eigen::Ref<const Vector<Real>>& e1,
                           const GroupingParams<Real>& params,
                           bool ablate_structure = false);

/// Index of the largest logit; the lowest index wins ties.
template <typename Real>
NodeId classify_user(const Eigen::Ref<const Vector<Real>>& features,
                     const GroupingParams<Real>& params);

/// Argmax with lowest-index tie-break. Throws NumericalError on non-finite
/// input.
template <typename Real>
NodeId argmax_group(const Eigen::Ref<const Vector<Real>>& logits);

enum class DegreeNormalization {
  kFullGraph,  // 1/sqrt(|N_u| |N_i|), same weights as the whole graph
  kSubgraph,   // 1/sqrt(|N_u| |N_i^s|), item degree counted inside the group
};

/// The normalized adjacency restricted to the edges of one user group.
///
/// Users and items are renumbered locally (ascending global id). Both
/// directions are stored in CSR form over local indices.
class MaskedLaplacian {
 public:
  struct Entry {
    NodeId user = 0;
    NodeId item = 0;
    double weight = 0.0;
  };

  NodeId group() const { return group_; }
  const std::vector<NodeId>& users() const { return users_; }
  const std::vector<NodeId>& items() const { return items_; }
  NodeId num_local_users() const { return static_cast<NodeId>(users_.size()); }
  NodeId num_local_items() const { return static_cast<NodeId>(items_.size()); }
  EdgeOffset nnz() const { return static_cast<EdgeOffset>(user_cols_.size()); }
  bool empty() const { return users_.empty(); }

  // Local user row -> local item columns.
  std::span<const EdgeOffset> user_offsets() const { return user_offsets_; }
  std::span<const NodeId> user_cols() const { return user_cols_; }
  std::span<const double> user_weights() const { return user_weights_; }
  // Local item row -> local user columns.
  std::span<const EdgeOffset> item_offsets() const { return item_offsets_; }
  std::span<const NodeId> item_cols() const { return item_cols_; }
  std::span<const double> item_weights() const { return item_weights_; }

  /// All retained edges with global ids, in (user, item) order.
  std::vector<Entry> entries() const;

 private:
  friend class SubgraphPartition;

  NodeId group_ = 0;
  std::vector<NodeId> users_;
  std::vector<NodeId> items_;
  std::vector<EdgeOffset> user_offsets_{0};
  std::vector<NodeId> user_cols_;
  std::vector<double> user_weights_;
  std::vector<EdgeOffset> item_offsets_{0};
  std::vector<NodeId> item_cols_;
  std::vector<double> item_weights_;
};

/// Hard assignment of users to groups plus one masked Laplacian per group.
///
/// Each user lies in exactly one group, so every edge of the graph appears
/// in exactly one masked Laplacian. Items can belong to several groups.
/// Immutable once built; each instance carries a unique generation number
/// so that cached forward passes can detect a refresh.
class SubgraphPartition {
 public:
  static SubgraphPartition from_assignment(
      const InteractionGraph& graph, std::vector<NodeId> group_of_user,
      NodeId num_groups,
      DegreeNormalization normalization = DegreeNormalization::kFullGraph);

  NodeId num_groups() const { return num_groups_; }
  std::uint64_t generation() const { return generation_; }
  DegreeNormalization normalization() const { return normalization_; }
  NodeId num_users() const {
    return static_cast<NodeId>(group_of_user_.size());
  }
  NodeId num_items() const {
    return static_cast<NodeId>(item_group_offsets_.size()) - 1;
  }

  const std::vector<NodeId>& group_of_user() const { return group_of_user_; }
  NodeId group_of(NodeId user) const { return group_of_user_[user]; }
  const MaskedLaplacian& laplacian(NodeId group) const {
    return laplacians_[group];
  }
  const std::vector<MaskedLaplacian>& laplacians() const {
    return laplacians_;
  }

  /// Sorted groups containing at least one user of `item`.
  std::span<const NodeId> item_groups(NodeId item) const {
    return {item_groups_.data() + item_group_offsets_[item],
            static_cast<std::size_t>(item_group_offsets_[item + 1] -
                                     item_group_offsets_[item])};
  }

  std::vector<std::int64_t> group_sizes() const;
  std::vector<NodeId> empty_groups() const;
  /// Shannon entropy (nats) of the group-size distribution.
  double size_entropy() const;

  /// True when the partition was built over a graph of this shape.
  bool matches(const InteractionGraph& graph) const;

 private:
  NodeId num_groups_ = 0;
  std::uint64_t generation_ = 0;
  DegreeNormalization normalization_ = DegreeNormalization::kFullGraph;
  std::vector<NodeId> group_of_user_;
  std::vector<MaskedLaplacian> laplacians_;
  std::vector<EdgeOffset> item_group_offsets_{0};
  std::vector<NodeId> item_groups_;
  EdgeOffset num_edges_ = 0;
};

struct PartitionOptions {
  bool ablate_structure = false;
  DegreeNormalization normalization = DegreeNormalization::kFullGraph;
  int threads = 1;
};

/// e_u^(1) for every user: one whole-graph aggregation of item embeddings.
template <typename Real>
Table<Real> first_order_user_embeddings(const InteractionGraph& graph,
                                        const Table<Real>& item_embeddings,
                                        int threads = 1);

/// Classifies every user from its ID embedding and first-order embedding.
template <typename Real>
std::vector<NodeId> assign_groups(const InteractionGraph& graph,
                                  const Table<Real>& user_embeddings,
                                  const Table<Real>& item_embeddings,
                                  const GroupingParams<Real>& params,
                                  const PartitionOptions& options = {});

/// assign_groups followed by SubgraphPartition::from_assignment.
template <typename Real>
SubgraphPartition build_partition(const InteractionGraph& graph,
                                  const Table<Real>& user_embeddings,
                                  const Table<Real>& item_embeddings,
                                  const GroupingParams<Real>& params,
                                  const PartitionOptions& options = {});

struct GroupCoverage {
  NodeId group = 0;
  std::int64_t num_users = 0;
  // Mean coverage of the group's users for hop counts 0..max_hops, over
  // the whole graph and over the group's own edges only.
  std::vector<double> whole_graph;
  std::vector<double> within_group;
};

std::vector<GroupCoverage> group_coverage_profile(
    const InteractionGraph& graph, const SubgraphPartition& partition,
    int max_hops, const CoverageOptions& options = {});

}  // namespace impgcn

#endif  // IMPGCN_SUBGRAPH_HPP_
