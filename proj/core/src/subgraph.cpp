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
#include <atomic>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

namespace impgcn {
namespace {

std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

template <typename Real>
Real leaky_relu(Real x, double slope) {
  return x >= Real(0) ? x : static_cast<Real>(slope) * x;
}

template <typename Real>
bool all_finite(const Table<Real>& t) {
  return t.allFinite();
}

}  // namespace

template <typename Real>
GroupingParams<Real> GroupingParams<Real>::xavier(Eigen::Index dim,
                                                  Eigen::Index num_groups,
                                                  Rng& rng,
                                                  double leaky_slope) {
  if (dim <= 0 || num_groups <= 0) {
    throw UsageError("grouping network needs positive dimension and groups");
  }
  GroupingParams p;
  p.w1.resize(dim, dim);
  p.w2.resize(dim, dim);
  p.w3.resize(dim, num_groups);
  xavier_uniform(p.w1, static_cast<double>(dim), static_cast<double>(dim), rng);
  xavier_uniform(p.w2, static_cast<double>(dim), static_cast<double>(dim), rng);
  xavier_uniform(p.w3, static_cast<double>(dim),
                 static_cast<double>(num_groups), rng);
  p.b1 = Vector<Real>::Zero(dim);
  p.b2 = Vector<Real>::Zero(dim);
  p.b3 = Vector<Real>::Zero(num_groups);
  p.leaky_slope = leaky_slope;
  return p;
}

template <typename Real>
void GroupingParams<Real>::validate() const {
  const auto d = w1.rows();
  if (d == 0 || w1.cols() != d || b1.size() != d || w2.rows() != d ||
      w2.cols() != d || b2.size() != d || w3.rows() != d ||
      w3.cols() == 0 || b3.size() != w3.cols()) {
    throw UsageError("grouping parameter shapes are inconsistent");
  }
  if (!all_finite(w1) || !all_finite(w2) || !all_finite(w3) ||
      !b1.allFinite() || !b2.allFinite() || !b3.allFinite()) {
    throw NumericalError("grouping parameters contain non-finite values");
  }
}

template <typename Real>
Vector<Real> fuse_features(const Eigen::Ref<const Vector<Real>>& e0,
                           const Eigen::Ref<const Vector<Real>>& e1,
                           const GroupingParams<Real>& params,
                           bool ablate_structure) {
  const auto d = params.dim();
  if (e0.size() != d || e1.size() != d) {
    throw UsageError("feature fusion expects vectors of dimension " +
                     std::to_string(d));
  }
  Vector<Real> x = e0;
  if (!ablate_structure) x += e1;
  Vector<Real> f = params.w1.transpose() * x + params.b1;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    f[k] = leaky_relu(f[k], params.leaky_slope);
  }
  return f;
}

template <typename Real>
NodeId argmax_group(const Eigen::Ref<const Vector<Real>>& logits) {
  if (logits.size() == 0) throw UsageError("empty logit vector");
  if (!logits.allFinite()) {
    throw NumericalError("non-finite group logits");
  }
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<NodeId>(best);
}

template <typename Real>
NodeId classify_user(const Eigen::Ref<const Vector<Real>>& features,
                     const GroupingParams<Real>& params) {
  if (features.size() != params.dim()) {
    throw UsageError("classifier expects a feature vector of dimension " +
                     std::to_string(params.dim()));
  }
  Vector<Real> hidden = params.w2.transpose() * features + params.b2;
  for (Eigen::Index k = 0; k < hidden.size(); ++k) {
    hidden[k] = leaky_relu(hidden[k], params.leaky_slope);
  }
  const Vector<Real> logits = params.w3.transpose() * hidden + params.b3;
  return argmax_group<Real>(logits);
}

std::vector<MaskedLaplacian::Entry> MaskedLaplacian::entries() const {
  std::vector<Entry> out;
  out.reserve(user_cols_.size());
  for (std::size_t lu = 0; lu < users_.size(); ++lu) {
    for (EdgeOffset e = user_offsets_[lu]; e < user_offsets_[lu + 1]; ++e) {
      out.push_back({users_[lu], items_[user_cols_[e]], user_weights_[e]});
    }
  }
  return out;
}

SubgraphPartition SubgraphPartition::from_assignment(
    const InteractionGraph& graph, std::vector<NodeId> group_of_user,
    NodeId num_groups, DegreeNormalization normalization) {
  if (num_groups <= 0) throw UsageError("number of groups must be positive");
  if (static_cast<NodeId>(group_of_user.size()) != graph.num_users()) {
    throw UsageError("group assignment covers " +
                     std::to_string(group_of_user.size()) + " users, graph has " +
                     std::to_string(graph.num_users()));
  }
  for (NodeId g : group_of_user) {
    if (g < 0 || g >= num_groups) {
      throw UsageError("group index " + std::to_string(g) + " out of range");
    }
  }

  SubgraphPartition p;
  p.num_groups_ = num_groups;
  p.generation_ = next_generation();
  p.normalization_ = normalization;
  p.num_edges_ = graph.num_edges();
  p.laplacians_.resize(static_cast<std::size_t>(num_groups));

  const NodeId n_users = graph.num_users();
  const NodeId n_items = graph.num_items();
  for (NodeId u = 0; u < n_users; ++u) {
    p.laplacians_[group_of_user[u]].users_.push_back(u);
  }

  std::vector<NodeId> item_local(static_cast<std::size_t>(n_items), -1);
  std::vector<NodeId> item_group_count(static_cast<std::size_t>(n_items), 0);
  for (NodeId s = 0; s < num_groups; ++s) {
    MaskedLaplacian& lap = p.laplacians_[s];
    lap.group_ = s;
    for (NodeId u : lap.users_) {
      for (NodeId i : graph.items_of(u)) item_local[i] = 0;
    }
    for (NodeId u : lap.users_) {
      for (NodeId i : graph.items_of(u)) {
        if (item_local[i] == 0) {
          lap.items_.push_back(i);
          item_local[i] = 1;
        }
      }
    }
    std::sort(lap.items_.begin(), lap.items_.end());
    for (std::size_t li = 0; li < lap.items_.size(); ++li) {
      item_local[lap.items_[li]] = static_cast<NodeId>(li);
      ++item_group_count[lap.items_[li]];
    }

    // Item degree inside the group, for the per-subgraph normalisation.
    const auto n_local_items = lap.items_.size();
    std::vector<EdgeOffset> item_count(n_local_items + 1, 0);
    for (NodeId u : lap.users_) {
      for (NodeId i : graph.items_of(u)) ++item_count[item_local[i] + 1];
    }

    lap.user_offsets_.assign(1, 0);
    for (NodeId u : lap.users_) {
      const auto items = graph.items_of(u);
      const auto weights = graph.user_edge_weights(u);
      for (std::size_t e = 0; e < items.size(); ++e) {
        const NodeId li = item_local[items[e]];
        lap.user_cols_.push_back(li);
        lap.user_weights_.push_back(
            normalization == DegreeNormalization::kFullGraph
                ? weights[e]
                : normalized_weight(graph.user_degree(u),
                                    static_cast<NodeId>(item_count[li + 1])));
      }
      lap.user_offsets_.push_back(
          static_cast<EdgeOffset>(lap.user_cols_.size()));
    }

    for (std::size_t li = 0; li < n_local_items; ++li) {
      item_count[li + 1] += item_count[li];
    }
    lap.item_offsets_ = item_count;
    lap.item_cols_.resize(lap.user_cols_.size());
    lap.item_weights_.resize(lap.user_cols_.size());
    std::vector<EdgeOffset> cursor(item_count.begin(), item_count.end() - 1);
    for (std::size_t lu = 0; lu < lap.users_.size(); ++lu) {
      for (EdgeOffset e = lap.user_offsets_[lu]; e < lap.user_offsets_[lu + 1];
           ++e) {
        const auto slot = cursor[lap.user_cols_[e]]++;
        lap.item_cols_[slot] = static_cast<NodeId>(lu);
        lap.item_weights_[slot] = lap.user_weights_[e];
      }
    }
    for (NodeId i : lap.items_) item_local[i] = -1;
  }

  p.item_group_offsets_.assign(static_cast<std::size_t>(n_items) + 1, 0);
  for (NodeId i = 0; i < n_items; ++i) {
    p.item_group_offsets_[i + 1] =
        p.item_group_offsets_[i] + item_group_count[i];
  }
  p.item_groups_.resize(static_cast<std::size_t>(p.item_group_offsets_.back()));
  std::vector<EdgeOffset> cursor(p.item_group_offsets_.begin(),
                                 p.item_group_offsets_.end() - 1);
  for (NodeId s = 0; s < num_groups; ++s) {
    for (NodeId i : p.laplacians_[s].items_) p.item_groups_[cursor[i]++] = s;
  }
  p.group_of_user_ = std::move(group_of_user);
  return p;
}

std::vector<std::int64_t> SubgraphPartition::group_sizes() const {
  std::vector<std::int64_t> sizes;
  sizes.reserve(laplacians_.size());
  for (const auto& lap : laplacians_) {
    sizes.push_back(static_cast<std::int64_t>(lap.users().size()));
  }
  return sizes;
}

std::vector<NodeId> SubgraphPartition::empty_groups() const {
  std::vector<NodeId> out;
  for (const auto& lap : laplacians_) {
    if (lap.empty()) out.push_back(lap.group());
  }
  return out;
}

double SubgraphPartition::size_entropy() const {
  const double total = static_cast<double>(group_of_user_.size());
  double h = 0.0;
  for (auto size : group_sizes()) {
    if (size == 0) continue;
    const double p = static_cast<double>(size) / total;
    h -= p * std::log(p);
  }
  return h;
}

bool SubgraphPartition::matches(const InteractionGraph& graph) const {
  return num_users() == graph.num_users() &&
         num_items() == graph.num_items() && num_edges_ == graph.num_edges();
}

template <typename Real>
Table<Real> first_order_user_embeddings(const InteractionGraph& graph,
                                        const Table<Real>& item_embeddings,
                                        int threads) {
  Table<Real> out = Table<Real>::Zero(graph.num_users(), item_embeddings.cols());
  parallel_for(graph.num_users(), threads,
               [&](std::int64_t begin, std::int64_t end) {
                 for (auto u = static_cast<NodeId>(begin); u < end; ++u) {
                   const auto items = graph.items_of(u);
                   const auto weights = graph.user_edge_weights(u);
                   for (std::size_t e = 0; e < items.size(); ++e) {
                     out.row(u) += static_cast<Real>(weights[e]) *
                                   item_embeddings.row(items[e]);
                   }
                 }
               });
  return out;
}

template <typename Real>
std::vector<NodeId> assign_groups(const InteractionGraph& graph,
                                  const Table<Real>& user_embeddings,
                                  const Table<Real>& item_embeddings,
                                  const GroupingParams<Real>& params,
                                  const PartitionOptions& options) {
  params.validate();
  if (user_embeddings.rows() != graph.num_users() ||
      item_embeddings.rows() != graph.num_items() ||
      user_embeddings.cols() != params.dim() ||
      item_embeddings.cols() != params.dim()) {
    throw UsageError("embedding tables do not match graph or grouping shape");
  }
  const Table<Real> first_order =
      first_order_user_embeddings(graph, item_embeddings, options.threads);
  std::vector<NodeId> groups(static_cast<std::size_t>(graph.num_users()), 0);
  parallel_for(graph.num_users(), options.threads,
               [&](std::int64_t begin, std::int64_t end) {
                 for (auto u = begin; u < end; ++u) {
                   const Vector<Real> e0 = user_embeddings.row(u).transpose();
                   const Vector<Real> e1 = first_order.row(u).transpose();
                   const Vector<Real> f = fuse_features<Real>(
                       e0, e1, params, options.ablate_structure);
                   groups[u] = classify_user<Real>(f, params);
                 }
               });
  return groups;
}

template <typename Real>
SubgraphPartition build_partition(const InteractionGraph& graph,
                                  const Table<Real>& user_embeddings,
                                  const Table<Real>& item_embeddings,
                                  const GroupingParams<Real>& params,
                                  const PartitionOptions& options) {
  auto groups =
      assign_groups(graph, user_embeddings, item_embeddings, params, options);
  auto partition = SubgraphPartition::from_assignment(
      graph, std::move(groups), static_cast<NodeId>(params.num_groups()),
      options.normalization);
  if (const auto empty = partition.empty_groups(); !empty.empty()) {
    spdlog::warn("{} of {} user groups are empty", empty.size(),
                 partition.num_groups());
  }
  return partition;
}

#define IMPGCN_INSTANTIATE(Real)                                              \
  template struct GroupingParams<Real>;                                       \
  template Vector<Real> fuse_features<Real>(                                  \
      const Eigen::Ref<const Vector<Real>>&,                                  \
      const Eigen::Ref<const Vector<Real>>&, const GroupingParams<Real>&,     \
      bool);                                                                  \
  template NodeId argmax_group<Real>(const Eigen::Ref<const Vector<Real>>&);  \
  template NodeId classify_user<Real>(const Eigen::Ref<const Vector<Real>>&,  \
                                      const GroupingParams<Real>&);           \
  template Table<Real> first_order_user_embeddings<Real>(                     \
      const InteractionGraph&, const Table<Real>&, int);                      \
  template std::vector<NodeId> assign_groups<Real>(                           \
      const InteractionGraph&, const Table<Real>&, const Table<Real>&,        \
      const GroupingParams<Real>&, const PartitionOptions&);                  \
  template SubgraphPartition build_partition<Real>(                           \
      const InteractionGraph&, const Table<Real>&, const Table<Real>&,        \
      const GroupingParams<Real>&, const PartitionOptions&);

IMPGCN_INSTANTIATE(float)
IMPGCN_INSTANTIATE(double)

#undef IMPGCN_INSTANTIATE

}  // namespace impgcn
