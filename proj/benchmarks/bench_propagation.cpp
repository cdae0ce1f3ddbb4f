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

#include <random>

#include <benchmark/benchmark.h>

#include "impgcn/graph.hpp"
#include "impgcn/metrics.hpp"
#include "impgcn/propagation.hpp"
#include "impgcn/subgraph.hpp"
#include "impgcn/training.hpp"

namespace {

using namespace impgcn;

struct Fixture {
  InteractionGraph graph;
  ModelState<float> state;
  SubgraphPartition partition;
};

// Power-law-ish random interactions, every node touched at least once.
Fixture make_fixture(NodeId users, NodeId items, int per_user, NodeId groups) {
  Rng rng(42);
  std::vector<Interaction> edges;
  std::geometric_distribution<NodeId> popular(4.0 / items);
  for (NodeId u = 0; u < users; ++u) {
    edges.push_back({u, u % items});
    for (int k = 0; k < per_user; ++k) edges.push_back({u, popular(rng) % items});
  }
  for (NodeId i = 0; i < items; ++i) edges.push_back({i % users, i});
  Fixture f;
  f.graph = build_graph(edges, users, items);
  f.state = ModelState<float>::initialize(users, items, 64, groups, rng);
  f.partition = build_partition(f.graph, f.state.user_embeddings, f.state.item_embeddings,
                                f.state.grouping);
  return f;
}

const Fixture& fixture() {
  static const Fixture f = make_fixture(5000, 4000, 20, 3);
  return f;
}

void BM_Forward(benchmark::State& st) {
  const auto& f = fixture();
  PropagationOptions opts;
  opts.layers = static_cast<int>(st.range(0));
  for (auto _ : st) {
    auto stack = forward(f.state, f.graph, f.partition, opts);
    benchmark::DoNotOptimize(stack.final_users.data());
  }
  st.counters["edges"] = static_cast<double>(f.graph.num_edges());
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& st) {
  const auto& f = fixture();
  PropagationOptions opts;
  opts.layers = static_cast<int>(st.range(0));
  const auto stack = forward(f.state, f.graph, f.partition, opts);
  const Table<float> gu = Table<float>::Ones(f.graph.num_users(), 64);
  const Table<float> gi = Table<float>::Ones(f.graph.num_items(), 64);
  for (auto _ : st) {
    auto g = backward(stack, f.graph, f.partition, gu, gi);
    benchmark::DoNotOptimize(g.users.data());
  }
}
BENCHMARK(BM_Backward)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_BuildPartition(benchmark::State& st) {
  const auto& f = fixture();
  for (auto _ : st) {
    auto p = build_partition(f.graph, f.state.user_embeddings, f.state.item_embeddings,
                             f.state.grouping);
    benchmark::DoNotOptimize(p.num_groups());
  }
}
BENCHMARK(BM_BuildPartition)->Unit(benchmark::kMillisecond);

void BM_BatchStep(benchmark::State& st) {
  const auto& f = fixture();
  Rng rng(1);
  const auto triplets = sample_epoch(f.graph, rng);
  const std::span<const Triplet> batch(triplets.data(), 1024);
  PropagationOptions opts;
  EmbeddingGradients<float> grads;
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        batch_loss_and_gradients(f.state, f.graph, f.partition, batch, 1e-4, opts, &grads));
  }
}
BENCHMARK(BM_BatchStep)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& st) {
  const auto& f = fixture();
  std::vector<std::vector<NodeId>> targets(f.graph.num_users());
  for (NodeId u = 0; u < f.graph.num_users(); ++u) targets[u] = {u % f.graph.num_items()};
  const EvalTask task{f.graph.num_items(), targets, {}};
  for (auto _ : st) {
    auto r = evaluate(f.state.user_embeddings, f.state.item_embeddings, task, {});
    benchmark::DoNotOptimize(r.recall);
  }
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

void BM_CoverageProfile(benchmark::State& st) {
  const auto& f = fixture();
  CoverageOptions opts;
  opts.exact_node_cap = 0;
  opts.sample_size = 200;
  for (auto _ : st) {
    auto p = coverage_profile(f.graph, 7, opts);
    benchmark::DoNotOptimize(p.back());
  }
}
BENCHMARK(BM_CoverageProfile)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
