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

#ifndef IMPGCN_GRAPH_HPP_
#define IMPGCN_GRAPH_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "impgcn/common.hpp"

namespace impgcn {

struct Interaction {
  NodeId user = 0;
  NodeId item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

/// Immutable user-item bipartite graph.
///
/// Both adjacency directions are stored in CSR form with sorted neighbour
/// lists. Every edge carries the symmetric normalisation weight
/// 1 / sqrt(|N_u| * |N_i|), so the (N+M)x(N+M) block matrix
///
///     [ 0    R ]
///     [ R^T  0 ]
///
/// with R(u, i) = weight(u, i) is the normalized adjacency used by the
/// graph convolution. No self loops are present.
class InteractionGraph {
 public:
  InteractionGraph() = default;

  NodeId num_users() const { return num_users_; }
  NodeId num_items() const { return num_items_; }
  std::int64_t num_nodes() const {
    return std::int64_t{num_users_} + num_items_;
  }
  EdgeOffset num_edges() const {
    return static_cast<EdgeOffset>(user_items_.size());
  }

  NodeId user_degree(NodeId u) const {
    return static_cast<NodeId>(user_offsets_[u + 1] - user_offsets_[u]);
  }
  NodeId item_degree(NodeId i) const {
    return static_cast<NodeId>(item_offsets_[i + 1] - item_offsets_[i]);
  }

  std::span<const NodeId> items_of(NodeId u) const {
    return {user_items_.data() + user_offsets_[u],
            static_cast<std::size_t>(user_degree(u))};
  }
  std::span<const double> user_edge_weights(NodeId u) const {
    return {user_weights_.data() + user_offsets_[u],
            static_cast<std::size_t>(user_degree(u))};
  }
  std::span<const NodeId> users_of(NodeId i) const {
    return {item_users_.data() + item_offsets_[i],
            static_cast<std::size_t>(item_degree(i))};
  }
  std::span<const double> item_edge_weights(NodeId i) const {
    return {item_weights_.data() + item_offsets_[i],
            static_cast<std::size_t>(item_degree(i))};
  }

  // Raw CSR arrays.
  std::span<const EdgeOffset> user_offsets() const { return user_offsets_; }
  std::span<const NodeId> user_items() const { return user_items_; }
  std::span<const double> user_weights() const { return user_weights_; }
  std::span<const EdgeOffset> item_offsets() const { return item_offsets_; }
  std::span<const NodeId> item_users() const { return item_users_; }
  std::span<const double> item_weights() const { return item_weights_; }

  bool has_edge(NodeId u, NodeId i) const;

  /// Edges in canonical (user, item) order.
  std::vector<Interaction> edges() const;

  friend InteractionGraph build_graph(std::span<const Interaction>,
                                      std::optional<NodeId>,
                                      std::optional<NodeId>);

 private:
  NodeId num_users_ = 0;
  NodeId num_items_ = 0;
  std::vector<EdgeOffset> user_offsets_{0};
  std::vector<NodeId> user_items_;
  std::vector<double> user_weights_;
  std::vector<EdgeOffset> item_offsets_{0};
  std::vector<NodeId> item_users_;
  std::vector<double> item_weights_;
};

/// Builds the graph from (user, item) pairs. Duplicates collapse to a single
/// edge. When the node counts are omitted they are taken as max index + 1.
/// Throws DataError on empty input, negative or out-of-range indices and on
/// nodes left without any edge.
InteractionGraph build_graph(std::span<const Interaction> interactions,
                             std::optional<NodeId> num_users = std::nullopt,
                             std::optional<NodeId> num_items = std::nullopt);

/// 1 / sqrt(user_degree * item_degree), evaluated in double precision.
double normalized_weight(NodeId user_degree, NodeId item_degree);

// Unified node numbering used by the coverage statistics: users occupy
// [0, N), items occupy [N, N + M).
inline std::int64_t user_node(const InteractionGraph&, NodeId u) { return u; }
inline std::int64_t item_node(const InteractionGraph& g, NodeId i) {
  return std::int64_t{g.num_users()} + i;
}

/// Fraction of all N + M nodes within `hops` edges of `node` (the node
/// itself included).
double coverage_ratio(const InteractionGraph& graph, std::int64_t node,
                      int hops);

struct CoverageOptions {
  bool users_only = false;
  // Exact averaging up to this many source nodes, sampling beyond it.
  std::int64_t exact_node_cap = 50'000;
  std::int64_t sample_size = 5'000;
  std::uint64_t seed = 2020;
  int threads = 1;
};

/// Mean coverage ratio for every hop count 0..max_hops, from one
/// breadth-first search per source node.
std::vector<double> coverage_profile(const InteractionGraph& graph,
                                     int max_hops,
                                     const CoverageOptions& options = {});

double mean_coverage(const InteractionGraph& graph, int hops,
                     const CoverageOptions& options = {});

}  // namespace impgcn

#endif  // IMPGCN_GRAPH_HPP_
