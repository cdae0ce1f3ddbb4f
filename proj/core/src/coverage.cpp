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

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "impgcn/graph.hpp"
#include "impgcn/subgraph.hpp"

namespace impgcn {
namespace {

// Restricts traversal to edges whose user endpoint is in `group`.
struct EdgeFilter {
  const std::vector<NodeId>* group_of_user = nullptr;
  NodeId group = -1;

  bool allows(NodeId user) const {
    return group_of_user == nullptr || (*group_of_user)[user] == group;
  }
};

class BoundedBfs {
 public:
  explicit BoundedBfs(const InteractionGraph& graph)
      : graph_(graph),
        depth_(static_cast<std::size_t>(graph.num_nodes()), -1) {}

  // reached[k] = number of nodes at distance <= k, for k in [0, max_hops].
  void run(std::int64_t source, int max_hops, const EdgeFilter& filter,
           std::span<std::int64_t> reached) {
    const std::int64_t n_users = graph_.num_users();
    std::fill(reached.begin(), reached.end(), 0);
    frontier_.clear();
    frontier_.push_back(source);
    depth_[source] = 0;
    std::size_t head = 0;
    while (head < frontier_.size()) {
      const std::int64_t node = frontier_[head++];
      const int d = depth_[node];
      ++reached[d];
      if (d == max_hops) continue;
      auto visit = [&](std::int64_t next) {
        if (depth_[next] < 0) {
          depth_[next] = d + 1;
          frontier_.push_back(next);
        }
      };
      if (node < n_users) {
        const auto u = static_cast<NodeId>(node);
        if (!filter.allows(u)) continue;
        for (NodeId i : graph_.items_of(u)) visit(n_users + i);
      } else {
        for (NodeId u : graph_.users_of(static_cast<NodeId>(node - n_users))) {
          if (filter.allows(u)) visit(u);
        }
      }
    }
    for (std::int64_t node : frontier_) depth_[node] = -1;
    for (std::size_t k = 1; k < reached.size(); ++k) reached[k] += reached[k - 1];
  }

 private:
  const InteractionGraph& graph_;
  std::vector<int> depth_;
  std::vector<std::int64_t> frontier_;
};

void check_node(const InteractionGraph& graph, std::int64_t node) {
  if (node < 0 || node >= graph.num_nodes()) {
    throw UsageError("node id " + std::to_string(node) + " out of range [0, " +
                     std::to_string(graph.num_nodes()) + ")");
  }
}

void check_hops(int hops) {
  if (hops < 0) throw UsageError("hop count must be non-negative");
}

std::vector<std::int64_t> pick_sources(std::vector<std::int64_t> candidates,
                                       const CoverageOptions& options) {
  const auto n = static_cast<std::int64_t>(candidates.size());
  if (n <= options.exact_node_cap || options.sample_size >= n) return candidates;
  std::mt19937_64 rng(options.seed);
  for (std::int64_t k = 0; k < options.sample_size; ++k) {
    std::uniform_int_distribution<std::int64_t> pick(k, n - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
  }
  candidates.resize(static_cast<std::size_t>(options.sample_size));
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<double> average_profile(const InteractionGraph& graph,
                                    std::span<const std::int64_t> sources,
                                    int max_hops, const EdgeFilter& filter,
                                    int threads) {
  const auto width = static_cast<std::size_t>(max_hops + 1);
  std::vector<std::int64_t> reached(sources.size() * width, 0);
  parallel_for(static_cast<std::int64_t>(sources.size()), threads,
               [&](std::int64_t begin, std::int64_t end) {
                 BoundedBfs bfs(graph);
                 for (std::int64_t s = begin; s < end; ++s) {
                   bfs.run(sources[s], max_hops, filter,
                           std::span(reached).subspan(s * width, width));
                 }
               });
  std::vector<double> profile(width, 0.0);
  if (sources.empty()) return profile;
  const double total = static_cast<double>(graph.num_nodes());
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (std::size_t k = 0; k < width; ++k) {
      profile[k] += static_cast<double>(reached[s * width + k]) / total;
    }
  }
  for (double& p : profile) p /= static_cast<double>(sources.size());
  return profile;
}

}  // namespace

double coverage_ratio(const InteractionGraph& graph, std::int64_t node,
                      int hops) {
  check_node(graph, node);
  check_hops(hops);
  std::vector<std::int64_t> reached(static_cast<std::size_t>(hops + 1));
  BoundedBfs bfs(graph);
  bfs.run(node, hops, EdgeFilter{}, reached);
  return static_cast<double>(reached.back()) /
         static_cast<double>(graph.num_nodes());
}

std::vector<double> coverage_profile(const InteractionGraph& graph,
                                     int max_hops,
                                     const CoverageOptions& options) {
  check_hops(max_hops);
  const std::int64_t count =
      options.users_only ? graph.num_users() : graph.num_nodes();
  std::vector<std::int64_t> candidates(static_cast<std::size_t>(count));
  std::iota(candidates.begin(), candidates.end(), std::int64_t{0});
  const auto sources = pick_sources(std::move(candidates), options);
  return average_profile(graph, sources, max_hops, EdgeFilter{},
                         options.threads);
}

double mean_coverage(const InteractionGraph& graph, int hops,
                     const CoverageOptions& options) {
  return coverage_profile(graph, hops, options).back();
}

std::vector<GroupCoverage> group_coverage_profile(
    const InteractionGraph& graph, const SubgraphPartition& partition,
    int max_hops, const CoverageOptions& options) {
  check_hops(max_hops);
  std::vector<GroupCoverage> out;
  for (NodeId s = 0; s < partition.num_groups(); ++s) {
    const auto& members = partition.laplacian(s).users();
    std::vector<std::int64_t> sources(members.begin(), members.end());
    sources = pick_sources(std::move(sources), options);
    GroupCoverage row;
    row.group = s;
    row.num_users = static_cast<std::int64_t>(members.size());
    row.whole_graph = average_profile(graph, sources, max_hops, EdgeFilter{},
                                      options.threads);
    row.within_group =
        average_profile(graph, sources, max_hops,
                        EdgeFilter{&partition.group_of_user(), s},
                        options.threads);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace impgcn
