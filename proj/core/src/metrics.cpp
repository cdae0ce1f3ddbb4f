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
#include <string>

namespace impgcn {
namespace {

template <typename Real>
std::vector<NodeId> candidates(std::span<const Real> scores,
                               std::span<const NodeId> exclusions) {
  std::vector<NodeId> out;
  out.reserve(scores.size());
  auto ex = exclusions.begin();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto item = static_cast<NodeId>(i);
    while (ex != exclusions.end() && *ex < item) ++ex;
    if (ex != exclusions.end() && *ex == item) continue;
    if (!std::isfinite(static_cast<double>(scores[i]))) {
      throw NumericalError("non-finite score for item " + std::to_string(i));
    }
    out.push_back(item);
  }
  if (out.empty()) throw DataError("every item is excluded from the ranking");
  return out;
}

template <typename Real>
auto by_score(std::span<const Real> scores) {
  return [scores](NodeId a, NodeId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
}

std::size_t count_hits(std::span<const NodeId> ranked,
                       std::span<const NodeId> targets, std::size_t n) {
  std::size_t hits = 0;
  const auto depth = std::min(n, ranked.size());
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(targets.begin(), targets.end(), ranked[p])) ++hits;
  }
  return hits;
}

std::vector<NodeId> sorted_copy(std::span<const NodeId> v) {
  std::vector<NodeId> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

template <typename Real>
std::vector<NodeId> rank_items(std::span<const Real> scores,
                               std::span<const NodeId> exclusions) {
  auto order = candidates(scores, exclusions);
  std::sort(order.begin(), order.end(), by_score(scores));
  return order;
}

template <typename Real>
std::vector<NodeId> top_n_items(std::span<const Real> scores,
                                std::span<const NodeId> exclusions,
                                std::size_t n) {
  auto order = candidates(scores, exclusions);
  const auto keep = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), by_score(scores));
  order.resize(keep);
  return order;
}

std::optional<double> recall_at_n(std::span<const NodeId> ranked,
                                  std::span<const NodeId> targets,
                                  std::size_t n) {
  if (targets.empty()) return std::nullopt;
  const auto sorted = sorted_copy(targets);
  return static_cast<double>(count_hits(ranked, sorted, n)) /
         static_cast<double>(sorted.size());
}

std::optional<double> ndcg_at_n(std::span<const NodeId> ranked,
                                std::span<const NodeId> targets,
                                std::size_t n) {
  if (targets.empty()) return std::nullopt;
  const auto sorted = sorted_copy(targets);
  double dcg = 0.0;
  const auto depth = std::min(n, ranked.size());
  for (std::size_t p = 0; p < depth; ++p) {
    if (std::binary_search(sorted.begin(), sorted.end(), ranked[p])) {
      dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min(n, sorted.size());
  for (std::size_t p = 0; p < ideal; ++p) {
    idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  if (idcg == 0.0) return 0.0;
  return dcg / idcg;
}

EvalTask EvalTask::from_interactions(
    NodeId num_users, NodeId num_items, std::span<const Interaction> targets,
    std::span<const std::span<const Interaction>> exclude) {
  EvalTask task;
  task.num_items = num_items;
  task.targets.resize(static_cast<std::size_t>(num_users));
  task.exclusions.resize(static_cast<std::size_t>(num_users));
  auto check = [&](const Interaction& x) {
    if (x.user < 0 || x.user >= num_users || x.item < 0 || x.item >= num_items) {
      throw DataError("evaluation interaction (" + std::to_string(x.user) +
                      ", " + std::to_string(x.item) + ") out of range");
    }
  };
  for (const auto& x : targets) {
    check(x);
    task.targets[x.user].push_back(x.item);
  }
  for (const auto& list : exclude) {
    for (const auto& x : list) {
      check(x);
      task.exclusions[x.user].push_back(x.item);
    }
  }
  for (auto* lists : {&task.targets, &task.exclusions}) {
    for (auto& v : *lists) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }
  return task;
}

template <typename Real>
MetricsReport evaluate(const Table<Real>& user_embeddings,
                       const Table<Real>& item_embeddings,
                       const EvalTask& task, const EvalOptions& options) {
  const auto n_users = static_cast<NodeId>(task.targets.size());
  if (user_embeddings.rows() < n_users ||
      item_embeddings.rows() != task.num_items ||
      user_embeddings.cols() != item_embeddings.cols()) {
    throw UsageError("embedding tables do not match the evaluation task");
  }
  if (!task.exclusions.empty() &&
      static_cast<NodeId>(task.exclusions.size()) != n_users) {
    throw UsageError("exclusion lists do not match the evaluated users");
  }
  if (options.group_of_user != nullptr &&
      static_cast<NodeId>(options.group_of_user->size()) < n_users) {
    throw UsageError("group assignment does not cover every evaluated user");
  }

  std::vector<double> recall(static_cast<std::size_t>(n_users), 0.0);
  std::vector<double> ndcg(static_cast<std::size_t>(n_users), 0.0);
  std::vector<char> counted(static_cast<std::size_t>(n_users), 0);
  parallel_for(n_users, options.threads, [&](std::int64_t b, std::int64_t e) {
    Vector<Real> scores(item_embeddings.rows());
    for (auto u = b; u < e; ++u) {
      const auto& targets = task.targets[u];
      if (targets.empty()) continue;
      scores.noalias() = item_embeddings * user_embeddings.row(u).transpose();
      const auto top = top_n_items<Real>(
          std::span<const Real>(scores.data(), static_cast<std::size_t>(scores.size())),
          task.exclusions.empty() ? std::span<const NodeId>{}
                                  : std::span<const NodeId>(task.exclusions[u]),
          options.cutoff);
      recall[u] = *recall_at_n(top, targets, options.cutoff);
      ndcg[u] = *ndcg_at_n(top, targets, options.cutoff);
      counted[u] = 1;
    }
  });

  MetricsReport report;
  report.cutoff = options.cutoff;
  std::vector<GroupMetrics> groups(static_cast<std::size_t>(
      options.group_of_user != nullptr ? options.num_groups : 0));
  for (std::size_t s = 0; s < groups.size(); ++s) {
    groups[s].group = static_cast<NodeId>(s);
  }
  for (NodeId u = 0; u < n_users; ++u) {
    if (!counted[u]) continue;
    ++report.num_users;
    report.recall += recall[u];
    report.ndcg += ndcg[u];
    if (options.keep_per_user) report.per_user.push_back({u, recall[u], ndcg[u]});
    if (!groups.empty()) {
      auto& g = groups.at(static_cast<std::size_t>((*options.group_of_user)[u]));
      ++g.num_users;
      g.recall += recall[u];
      g.ndcg += ndcg[u];
    }
  }
  if (report.num_users == 0) {
    throw DataError("evaluation split has no user with target items");
  }
  report.recall /= static_cast<double>(report.num_users);
  report.ndcg /= static_cast<double>(report.num_users);
  for (auto& g : groups) {
    if (g.num_users > 0) {
      g.recall /= static_cast<double>(g.num_users);
      g.ndcg /= static_cast<double>(g.num_users);
    }
  }
  report.per_group = std::move(groups);
  return report;
}

#define IMPGCN_INSTANTIATE(Real)                                             \
  template std::vector<NodeId> rank_items<Real>(std::span<const Real>,       \
                                                std::span<const NodeId>);    \
  template std::vector<NodeId> top_n_items<Real>(                            \
      std::span<const Real>, std::span<const NodeId>, std::size_t);          \
  template MetricsReport evaluate<Real>(const Table<Real>&,                  \
                                        const Table<Real>&, const EvalTask&, \
                                        const EvalOptions&);

IMPGCN_INSTANTIATE(float)
IMPGCN_INSTANTIATE(double)

#undef IMPGCN_INSTANTIATE

}  // namespace impgcn
