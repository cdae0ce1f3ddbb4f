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

#ifndef IMPGCN_METRICS_HPP_
#define IMPGCN_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "impgcn/common.hpp"
#include "impgcn/graph.hpp"

namespace impgcn {

/// Orders items by descending score, lower index first on ties, skipping
/// the sorted `exclusions`. Throws DataError when every item is excluded
/// and NumericalError on non-finite scores.
template <typename Real>
std::vector<NodeId> rank_items(std::span<const Real> scores,
                               std::span<const NodeId> exclusions);

/// The first `n` entries of rank_items, computed with a partial sort.
template <typename Real>
std::vector<NodeId> top_n_items(std::span<const Real> scores,
                                std::span<const NodeId> exclusions,
                                std::size_t n);

/// |top-n ∩ targets| / |targets|; nullopt for an empty target set.
std::optional<double> recall_at_n(std::span<const NodeId> ranked,
                                  std::span<const NodeId> targets,
                                  std::size_t n);

/// Binary-gain NDCG with log2(position + 1) discount, positions 1-based.
/// The ideal ranking places min(|targets|, n) hits first.
std::optional<double> ndcg_at_n(std::span<const NodeId> ranked,
                                std::span<const NodeId> targets,
                                std::size_t n);

struct UserMetrics {
  NodeId user = 0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct GroupMetrics {
  NodeId group = 0;
  std::int64_t num_users = 0;
  double recall = 0.0;
  double ndcg = 0.0;
};

struct MetricsReport {
  std::size_t cutoff = 20;
  double recall = 0.0;
  double ndcg = 0.0;
  std::int64_t num_users = 0;  // users with at least one target
  std::vector<UserMetrics> per_user;
  std::vector<GroupMetrics> per_group;
};

/// Per-user targets and exclusions, both sorted ascending.
struct EvalTask {
  NodeId num_items = 0;
  std::vector<std::vector<NodeId>> targets;
  // Sorted per user; may be left empty for no exclusions at all.
  std::vector<std::vector<NodeId>> exclusions;

  /// Groups the interactions by user. `exclude` lists are merged.
  static EvalTask from_interactions(
      NodeId num_users, NodeId num_items, std::span<const Interaction> targets,
      std::span<const std::span<const Interaction>> exclude);
};

struct EvalOptions {
  std::size_t cutoff = 20;
  bool keep_per_user = false;
  // When set, also aggregate per user group.
  const std::vector<NodeId>* group_of_user = nullptr;
  NodeId num_groups = 0;
  int threads = 1;
};

/// Full-ranking evaluation over all non-excluded items. Means are taken
/// over users with a non-empty target list, in ascending user order.
template <typename Real>
MetricsReport evaluate(const Table<Real>& user_embeddings,
                       const Table<Real>& item_embeddings,
                       const EvalTask& task, const EvalOptions& options = {});

}  // namespace impgcn

#endif  // IMPGCN_METRICS_HPP_
