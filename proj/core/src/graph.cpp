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

#include "impgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace impgcn {

double normalized_weight(NodeId user_degree, NodeId item_degree) {
  // Extended precision, one final rounding.
  const long double prod = static_cast<long double>(user_degree) * item_degree;
  return static_cast<double>(1.0L / std::sqrt(prod));
}

bool InteractionGraph::has_edge(NodeId u, NodeId i) const {
  if (u < 0 || u >= num_users_) return false;
  const auto items = items_of(u);
  return std::binary_search(items.begin(), items.end(), i);
}

std::vector<Interaction> InteractionGraph::edges() const {
  std::vector<Interaction> out;
  out.reserve(user_items_.size());
  for (NodeId u = 0; u < num_users_; ++u) {
    for (NodeId i : items_of(u)) out.push_back({u, i});
  }
  return out;
}

InteractionGraph build_graph(std::span<const Interaction> interactions,
                             std::optional<NodeId> num_users,
                             std::optional<NodeId> num_items) {
  if (interactions.empty()) {
    throw DataError("cannot build a graph from an empty interaction list");
  }
  NodeId max_user = -1;
  NodeId max_item = -1;
  for (const auto& [u, i] : interactions) {
    if (u < 0 || i < 0) {
      throw DataError("negative node index in interaction (" +
                      std::to_string(u) + ", " + std::to_string(i) + ")");
    }
    max_user = std::max(max_user, u);
    max_item = std::max(max_item, i);
  }
  const NodeId n_users = num_users.value_or(max_user + 1);
  const NodeId n_items = num_items.value_or(max_item + 1);
  if (max_user >= n_users) {
    throw DataError("user index " + std::to_string(max_user) +
                    " out of range for " + std::to_string(n_users) + " users");
  }
  if (max_item >= n_items) {
    throw DataError("item index " + std::to_string(max_item) +
                    " out of range for " + std::to_string(n_items) + " items");
  }

  std::vector<Interaction> sorted(interactions.begin(), interactions.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  InteractionGraph g;
  g.num_users_ = n_users;
  g.num_items_ = n_items;

  std::vector<EdgeOffset> user_count(n_users + 1, 0);
  std::vector<EdgeOffset> item_count(n_items + 1, 0);
  for (const auto& [u, i] : sorted) {
    ++user_count[u + 1];
    ++item_count[i + 1];
  }
  for (NodeId u = 0; u < n_users; ++u) {
    if (user_count[u + 1] == 0) {
      throw DataError("user " + std::to_string(u) + " has no interactions");
    }
  }
  for (NodeId i = 0; i < n_items; ++i) {
    if (item_count[i + 1] == 0) {
      throw DataError("item " + std::to_string(i) + " has no interactions");
    }
  }
  for (NodeId u = 0; u < n_users; ++u) user_count[u + 1] += user_count[u];
  for (NodeId i = 0; i < n_items; ++i) item_count[i + 1] += item_count[i];

  const auto nnz = sorted.size();
  g.user_offsets_ = user_count;
  g.item_offsets_ = item_count;
  g.user_items_.resize(nnz);
  g.user_weights_.resize(nnz);
  g.item_users_.resize(nnz);
  g.item_weights_.resize(nnz);

  // `sorted` is already in user-major order, and filling the item side in
  // the same pass leaves each item's user list sorted as well.
  std::vector<EdgeOffset> item_cursor(item_count.begin(), item_count.end() - 1);
  for (std::size_t e = 0; e < nnz; ++e) {
    const auto [u, i] = sorted[e];
    const double w = normalized_weight(
        static_cast<NodeId>(user_count[u + 1] - user_count[u]),
        static_cast<NodeId>(item_count[i + 1] - item_count[i]));
    g.user_items_[e] = i;
    g.user_weights_[e] = w;
    const auto slot = item_cursor[i]++;
    g.item_users_[slot] = u;
    g.item_weights_[slot] = w;
  }
  return g;
}

}  // namespace impgcn
