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

#include <string>

namespace impgcn {
namespace {

// out[u] += sum_{i in N_u} w_ui * in[i], whole graph.
template <typename Real>
void add_users_from_items(const InteractionGraph& graph, const Table<Real>& in,
                          Table<Real>& out, int threads) {
  parallel_for(graph.num_users(), threads, [&](std::int64_t b, std::int64_t e) {
    for (auto u = static_cast<NodeId>(b); u < e; ++u) {
      const auto items = graph.items_of(u);
      const auto weights = graph.user_edge_weights(u);
      for (std::size_t k = 0; k < items.size(); ++k) {
        out.row(u) += static_cast<Real>(weights[k]) * in.row(items[k]);
      }
    }
  });
}

// out[i] += sum_{u in N_i} w_ui * in[u], whole graph.
template <typename Real>
void add_items_from_users(const InteractionGraph& graph, const Table<Real>& in,
                          Table<Real>& out, int threads) {
  parallel_for(graph.num_items(), threads, [&](std::int64_t b, std::int64_t e) {
    for (auto i = static_cast<NodeId>(b); i < e; ++i) {
      const auto users = graph.users_of(i);
      const auto weights = graph.item_edge_weights(i);
      for (std::size_t k = 0; k < users.size(); ++k) {
        out.row(i) += static_cast<Real>(weights[k]) * in.row(users[k]);
      }
    }
  });
}

// out[u] += sum_{local items} w * slots[li] for every user u of the group.
// `out` is indexed by global user id.
template <typename Real>
void add_group_users_from_slots(const MaskedLaplacian& lap,
                                const Table<Real>& slots, Table<Real>& out,
                                int threads) {
  const auto offsets = lap.user_offsets();
  const auto cols = lap.user_cols();
  const auto weights = lap.user_weights();
  const auto& users = lap.users();
  parallel_for(lap.num_local_users(), threads,
               [&](std::int64_t b, std::int64_t e) {
                 for (auto lu = b; lu < e; ++lu) {
                   auto row = out.row(users[lu]);
                   for (auto k = offsets[lu]; k < offsets[lu + 1]; ++k) {
                     row += static_cast<Real>(weights[k]) * slots.row(cols[k]);
                   }
                 }
               });
}

// slots[li] += sum_{group users of the item} w * in[u]. `in` is indexed by
// global user id; only rows of the group's users are read.
template <typename Real>
void add_group_slots_from_users(const MaskedLaplacian& lap,
                                const Table<Real>& in, Table<Real>& slots,
                                int threads) {
  const auto offsets = lap.item_offsets();
  const auto cols = lap.item_cols();
  const auto weights = lap.item_weights();
  const auto& users = lap.users();
  parallel_for(lap.num_local_items(), threads,
               [&](std::int64_t b, std::int64_t e) {
                 for (auto li = b; li < e; ++li) {
                   auto row = slots.row(li);
                   for (auto k = offsets[li]; k < offsets[li + 1]; ++k) {
                     row += static_cast<Real>(weights[k]) * in.row(users[cols[k]]);
                   }
                 }
               });
}

// items[global] += slots[local].
template <typename Real>
void scatter_slots(const MaskedLaplacian& lap, const Table<Real>& slots,
                   Table<Real>& items) {
  const auto& ids = lap.items();
  for (std::size_t li = 0; li < ids.size(); ++li) {
    items.row(ids[li]) += slots.row(static_cast<Eigen::Index>(li));
  }
}

// slots[local] = items[global].
template <typename Real>
Table<Real> gather_slots(const MaskedLaplacian& lap, const Table<Real>& items) {
  const auto& ids = lap.items();
  Table<Real> slots(static_cast<Eigen::Index>(ids.size()), items.cols());
  for (std::size_t li = 0; li < ids.size(); ++li) {
    slots.row(static_cast<Eigen::Index>(li)) = items.row(ids[li]);
  }
  return slots;
}

template <typename Real>
Table<Real> zeros_like_slots(const MaskedLaplacian& lap, Eigen::Index dim) {
  return Table<Real>::Zero(lap.num_local_items(), dim);
}

void check_inputs(const InteractionGraph& graph,
                  const SubgraphPartition& partition, Eigen::Index user_rows,
                  Eigen::Index item_rows, const PropagationOptions& options) {
  if (options.layers < 0) throw UsageError("layer count must be non-negative");
  if (options.layers > options.max_layers) {
    throw UsageError("layer count " + std::to_string(options.layers) +
                     " exceeds the configured maximum of " +
                     std::to_string(options.max_layers));
  }
  if (!partition.matches(graph)) {
    throw UsageError("subgraph partition was built for a different graph");
  }
  if (user_rows != graph.num_users() || item_rows != graph.num_items()) {
    throw UsageError("embedding tables do not match the graph");
  }
}

}  // namespace

template <typename Real>
void ModelState<Real>::reset_moments() {
  moments.first_users = Table<Real>::Zero(user_embeddings.rows(), dim());
  moments.second_users = Table<Real>::Zero(user_embeddings.rows(), dim());
  moments.first_items = Table<Real>::Zero(item_embeddings.rows(), dim());
  moments.second_items = Table<Real>::Zero(item_embeddings.rows(), dim());
  moments.step = 0;
}

template <typename Real>
ModelState<Real> ModelState<Real>::initialize(NodeId num_users,
                                              NodeId num_items,
                                              Eigen::Index dim,
                                              NodeId num_groups, Rng& rng,
                                              double leaky_slope) {
  if (num_users <= 0 || num_items <= 0 || dim <= 0) {
    throw UsageError("model needs positive user, item and dimension counts");
  }
  ModelState s;
  s.user_embeddings.resize(num_users, dim);
  s.item_embeddings.resize(num_items, dim);
  const auto d = static_cast<double>(dim);
  xavier_uniform(s.user_embeddings, d, d, rng);
  xavier_uniform(s.item_embeddings, d, d, rng);
  s.grouping = GroupingParams<Real>::xavier(dim, num_groups, rng, leaky_slope);
  s.reset_moments();
  return s;
}

template <typename Real>
void ModelState<Real>::validate() const {
  if (item_embeddings.cols() != dim()) {
    throw UsageError("user and item embeddings differ in dimension");
  }
  if (!user_embeddings.allFinite() || !item_embeddings.allFinite()) {
    throw NumericalError("embedding table contains non-finite values");
  }
  grouping.validate();
  if (grouping.dim() != dim()) {
    throw UsageError("grouping network dimension differs from embeddings");
  }
}

template <typename Real>
LayerStack<Real> forward(const Table<Real>& user_embeddings,
                         const Table<Real>& item_embeddings,
                         const InteractionGraph& graph,
                         const SubgraphPartition& partition,
                         const PropagationOptions& options) {
  check_inputs(graph, partition, user_embeddings.rows(),
               item_embeddings.rows(), options);
  const int K = options.layers;
  const auto d = user_embeddings.cols();
  const int threads = options.threads;
  const auto& laps = partition.laplacians();

  LayerStack<Real> st;
  st.layers = K;
  st.alpha = 1.0 / (K + 1);
  st.ablate_first_order = options.ablate_first_order;
  st.partition_generation = partition.generation();
  st.users.reserve(K + 1);
  st.items.reserve(K + 1);
  st.users.push_back(user_embeddings);
  st.items.push_back(item_embeddings);
  st.group_items.resize(K + 1);

  for (int k = 1; k <= K; ++k) {
    Table<Real> users = Table<Real>::Zero(graph.num_users(), d);
    Table<Real> items = Table<Real>::Zero(graph.num_items(), d);
    auto& slots = st.group_items[k];
    slots.reserve(laps.size());
    for (const auto& lap : laps) {
      Table<Real> s = zeros_like_slots<Real>(lap, d);
      add_group_slots_from_users(lap, st.users[k - 1], s, threads);
      slots.push_back(std::move(s));
    }
    if (k == 1) {
      if (options.ablate_first_order) {
        for (std::size_t s = 0; s < laps.size(); ++s) {
          const Table<Real> items0 = gather_slots(laps[s], st.items[0]);
          add_group_users_from_slots(laps[s], items0, users, threads);
          scatter_slots(laps[s], slots[s], items);
        }
      } else {
        add_users_from_items(graph, st.items[0], users, threads);
        add_items_from_users(graph, st.users[0], items, threads);
      }
    } else {
      for (std::size_t s = 0; s < laps.size(); ++s) {
        add_group_users_from_slots(laps[s], st.group_items[k - 1][s], users,
                                   threads);
        scatter_slots(laps[s], slots[s], items);
      }
    }
    st.users.push_back(std::move(users));
    st.items.push_back(std::move(items));
  }

  const auto alpha = static_cast<Real>(st.alpha);
  st.final_users = alpha * st.users[0];
  st.final_items = alpha * st.items[0];
  for (int k = 1; k <= K; ++k) {
    st.final_users += alpha * st.users[k];
    st.final_items += alpha * st.items[k];
  }
  return st;
}

template <typename Real>
EmbeddingGradients<Real> backward(const LayerStack<Real>& stack,
                                  const InteractionGraph& graph,
                                  const SubgraphPartition& partition,
                                  const Table<Real>& grad_final_users,
                                  const Table<Real>& grad_final_items,
                                  int threads) {
  if (stack.partition_generation != partition.generation()) {
    throw UsageError("layer stack is stale: the partition changed since forward");
  }
  if (!partition.matches(graph) ||
      grad_final_users.rows() != graph.num_users() ||
      grad_final_items.rows() != graph.num_items() ||
      grad_final_users.cols() != grad_final_items.cols()) {
    throw UsageError("gradient shapes do not match the graph");
  }
  const int K = stack.layers;
  const auto d = grad_final_users.cols();
  const auto alpha = static_cast<Real>(stack.alpha);
  const auto& laps = partition.laplacians();

  // Every layer feeds the combination directly with weight alpha; the
  // recursion below adds what flows back from the layers above.
  const Table<Real> direct_users = alpha * grad_final_users;
  const Table<Real> direct_items = alpha * grad_final_items;

  std::vector<Table<Real>> grad_users(K + 1, direct_users);
  std::vector<std::vector<Table<Real>>> grad_slots(K + 1);
  for (int k = 1; k <= K; ++k) {
    const bool summed = k >= 2 || stack.ablate_first_order;
    for (const auto& lap : laps) {
      grad_slots[k].push_back(summed ? gather_slots(lap, direct_items)
                                     : zeros_like_slots<Real>(lap, d));
    }
  }

  for (int k = K; k >= 2; --k) {
    for (std::size_t s = 0; s < laps.size(); ++s) {
      add_group_slots_from_users(laps[s], grad_users[k], grad_slots[k - 1][s],
                                 threads);
      add_group_users_from_slots(laps[s], grad_slots[k][s], grad_users[k - 1],
                                 threads);
    }
  }

  EmbeddingGradients<Real> out{grad_users[0], direct_items};
  if (K >= 1) {
    if (stack.ablate_first_order) {
      for (const auto& lap : laps) {
        Table<Real> g = zeros_like_slots<Real>(lap, d);
        add_group_slots_from_users(lap, grad_users[1], g, threads);
        scatter_slots(lap, g, out.items);
      }
    } else {
      add_items_from_users(graph, grad_users[1], out.items, threads);
      add_users_from_items(graph, direct_items, out.users, threads);
    }
    for (std::size_t s = 0; s < laps.size(); ++s) {
      add_group_users_from_slots(laps[s], grad_slots[1][s], out.users, threads);
    }
  }
  return out;
}

#define IMPGCN_INSTANTIATE(Real)                                            \
  template struct ModelState<Real>;                                         \
  template LayerStack<Real> forward<Real>(                                  \
      const Table<Real>&, const Table<Real>&, const InteractionGraph&,      \
      const SubgraphPartition&, const PropagationOptions&);                 \
  template EmbeddingGradients<Real> backward<Real>(                         \
      const LayerStack<Real>&, const InteractionGraph&,                     \
      const SubgraphPartition&, const Table<Real>&, const Table<Real>&, int);

IMPGCN_INSTANTIATE(float)
IMPGCN_INSTANTIATE(double)

#undef IMPGCN_INSTANTIATE

}  // namespace impgcn
