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

#ifndef IMPGCN_TRAINING_HPP_
#define IMPGCN_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "impgcn/common.hpp"
#include "impgcn/graph.hpp"
#include "impgcn/metrics.hpp"
#include "impgcn/propagation.hpp"
#include "impgcn/subgraph.hpp"

namespace impgcn {

/// (user, observed item, unobserved item).
struct Triplet {
  NodeId user = 0;
  NodeId positive = 0;
  NodeId negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Uniform item the user has not interacted with, by rejection sampling.
/// nullopt when the user has interacted with every item.
std::optional<NodeId> sample_negative(const InteractionGraph& graph,
                                      NodeId user, Rng& rng);

/// Pairs each positive with a fresh negative. Positives whose user has no
/// possible negative are skipped (with a warning).
std::vector<Triplet> sample_batch(const InteractionGraph& graph,
                                  std::span<const Interaction> positives,
                                  Rng& rng);

/// One triplet per training edge, in shuffled order.
std::vector<Triplet> sample_epoch(const InteractionGraph& graph, Rng& rng);

struct BprLoss {
  double loss = 0.0;
  double grad_positive = 0.0;  // d loss / d score_pos = -sigmoid(-delta)
  double grad_negative = 0.0;  // d loss / d score_neg = +sigmoid(-delta)
};

/// -ln sigmoid(pos - neg) + reg_weight * squared_norm, evaluated without
/// overflow for large |pos - neg|. Throws NumericalError on non-finite input.
BprLoss bpr_loss(double score_positive, double score_negative,
                 double reg_weight = 0.0, double squared_norm = 0.0);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of `param` at step t >= 1. Throws
/// NumericalError, leaving everything untouched, if `grad` is not finite.
template <typename Real>
void adam_step(Table<Real>& param, const Table<Real>& grad,
               Table<Real>& first_moment, Table<Real>& second_moment,
               std::int64_t step, const AdamConfig& config);

enum class PartitionRefresh { kEpoch, kBatch };
enum class Precision { kFloat, kDouble };

/// Propagation settings shared by training and inference.
struct ModelOptions {
  int layers = 3;
  bool ablate_structure = false;
  bool ablate_first_order = false;
  DegreeNormalization normalization = DegreeNormalization::kFullGraph;
  int max_layers = 8;
  int threads = 1;

  PartitionOptions partition_options() const {
    return {ablate_structure, normalization, threads};
  }
  PropagationOptions propagation_options() const {
    return {layers, ablate_first_order, max_layers, threads};
  }
};

struct TrainConfig {
  ModelOptions model;
  NodeId groups = 3;
  Eigen::Index dim = 64;
  double learning_rate = 1e-3;
  std::size_t batch_size = 1024;
  double reg = 1e-4;
  int max_epochs = 1000;
  int eval_every = 5;
  int patience = 10;
  std::size_t cutoff = 20;
  std::uint64_t seed = 2020;
  PartitionRefresh refresh = PartitionRefresh::kEpoch;
  double leaky_slope = 0.2;
  Precision precision = Precision::kFloat;

  /// Throws UsageError on non-positive sizes or negative regularisation.
  void validate() const;
};

struct CurvePoint {
  int epoch = 0;
  double loss = 0.0;
  // NaN on epochs without validation.
  double val_recall = std::numeric_limits<double>::quiet_NaN();
  double val_ndcg = std::numeric_limits<double>::quiet_NaN();
};

struct PartitionSnapshot {
  int epoch = 0;
  std::vector<std::int64_t> group_sizes;
  double entropy = 0.0;
};

template <typename Real>
struct TrainResult {
  ModelState<Real> best_state;
  int best_epoch = 0;
  double best_recall = -1.0;
  int epochs_run = 0;
  bool early_stopped = false;
  std::vector<CurvePoint> curve;
  std::vector<PartitionSnapshot> partitions;
};

template <typename Real>
struct Inference {
  SubgraphPartition partition;
  LayerStack<Real> stack;
};

/// Groups users from the current state and propagates.
template <typename Real>
Inference<Real> infer(const ModelState<Real>& state,
                      const InteractionGraph& graph,
                      const ModelOptions& options);

/// Mean BPR loss plus regularisation over one batch, with gradients on
/// E^(0). The regulariser is reg * sum of squared E^(0) rows touched by the
/// batch (counted per occurrence), divided by the batch size.
template <typename Real>
double batch_loss_and_gradients(const ModelState<Real>& state,
                                const InteractionGraph& graph,
                                const SubgraphPartition& partition,
                                std::span<const Triplet> batch, double reg,
                                const PropagationOptions& options,
                                EmbeddingGradients<Real>* gradients);

using EpochCallback = std::function<void(const CurvePoint&)>;

/// Mini-batch BPR training with Adam and early stopping on validation
/// Recall@cutoff. Returns the state with the best validation recall.
template <typename Real>
TrainResult<Real> train(const InteractionGraph& graph,
                        const EvalTask& validation, const TrainConfig& config,
                        const EpochCallback& on_epoch = {});

}  // namespace impgcn

#endif  // IMPGCN_TRAINING_HPP_
