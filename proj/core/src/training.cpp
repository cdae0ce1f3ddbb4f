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

#include "impgcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

namespace impgcn {

std::optional<NodeId> sample_negative(const InteractionGraph& graph,
                                      NodeId user, Rng& rng) {
  if (graph.user_degree(user) >= graph.num_items()) return std::nullopt;
  std::uniform_int_distribution<NodeId> pick(0, graph.num_items() - 1);
  while (true) {
    const NodeId item = pick(rng);
    if (!graph.has_edge(user, item)) return item;
  }
}

std::vector<Triplet> sample_batch(const InteractionGraph& graph,
                                  std::span<const Interaction> positives,
                                  Rng& rng) {
  std::vector<Triplet> out;
  out.reserve(positives.size());
  std::size_t skipped = 0;
  for (const auto& [u, i] : positives) {
    if (const auto neg = sample_negative(graph, u, rng)) {
      out.push_back({u, i, *neg});
    } else {
      ++skipped;
    }
  }
  if (skipped > 0) {
    spdlog::warn("skipped {} positives of users who interacted with every item",
                 skipped);
  }
  return out;
}

std::vector<Triplet> sample_epoch(const InteractionGraph& graph, Rng& rng) {
  auto edges = graph.edges();
  std::shuffle(edges.begin(), edges.end(), rng);
  return sample_batch(graph, edges, rng);
}

BprLoss bpr_loss(double score_positive, double score_negative,
                 double reg_weight, double squared_norm) {
  if (!std::isfinite(score_positive) || !std::isfinite(score_negative)) {
    throw NumericalError("non-finite score in BPR loss");
  }
  const double delta = score_positive - score_negative;
  // -ln sigmoid(delta) = softplus(-delta).
  const double softplus = std::log1p(std::exp(-std::abs(delta))) +
                          std::max(-delta, 0.0);
  // sigmoid(-delta), without overflow.
  const double s = delta >= 0.0 ? std::exp(-delta) / (1.0 + std::exp(-delta))
                                : 1.0 / (1.0 + std::exp(delta));
  return {softplus + reg_weight * squared_norm, -s, s};
}

template <typename Real>
void adam_step(Table<Real>& param, const Table<Real>& grad,
               Table<Real>& first_moment, Table<Real>& second_moment,
               std::int64_t step, const AdamConfig& config) {
  if (step < 1) throw UsageError("Adam step counter starts at 1");
  if (grad.rows() != param.rows() || grad.cols() != param.cols() ||
      first_moment.rows() != param.rows() ||
      first_moment.cols() != param.cols() ||
      second_moment.rows() != param.rows() ||
      second_moment.cols() != param.cols()) {
    throw UsageError("Adam tensors differ in shape");
  }
  if (!grad.allFinite()) throw NumericalError("non-finite gradient");
  const auto b1 = static_cast<Real>(config.beta1);
  const auto b2 = static_cast<Real>(config.beta2);
  const auto c1 = static_cast<Real>(
      1.0 - std::pow(config.beta1, static_cast<double>(step)));
  const auto c2 = static_cast<Real>(
      1.0 - std::pow(config.beta2, static_cast<double>(step)));
  const auto lr = static_cast<Real>(config.learning_rate);
  const auto eps = static_cast<Real>(config.epsilon);

  auto m = first_moment.array();
  auto v = second_moment.array();
  const auto g = grad.array();
  m = b1 * m + (Real(1) - b1) * g;
  v = b2 * v + (Real(1) - b2) * g.square();
  param.array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
}

void TrainConfig::validate() const {
  if (model.layers < 0 || model.layers > model.max_layers) {
    throw UsageError("layers must lie in [0, " +
                     std::to_string(model.max_layers) + "]");
  }
  if (groups < 1) throw UsageError("groups must be at least 1");
  if (dim < 1) throw UsageError("dim must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (batch_size < 1) throw UsageError("batch size must be positive");
  if (!(reg >= 0.0)) throw UsageError("regularisation must be non-negative");
  if (max_epochs < 1) throw UsageError("max_epochs must be positive");
  if (eval_every < 1) throw UsageError("eval_every must be positive");
  if (patience < 1) throw UsageError("patience must be positive");
  if (cutoff < 1) throw UsageError("cutoff must be positive");
  if (model.threads < 1) throw UsageError("threads must be positive");
}

template <typename Real>
Inference<Real> infer(const ModelState<Real>& state,
                      const InteractionGraph& graph,
                      const ModelOptions& options) {
  auto partition =
      build_partition(graph, state.user_embeddings, state.item_embeddings,
                      state.grouping, options.partition_options());
  auto stack = forward(state, graph, partition, options.propagation_options());
  return {std::move(partition), std::move(stack)};
}

template <typename Real>
double batch_loss_and_gradients(const ModelState<Real>& state,
                                const InteractionGraph& graph,
                                const SubgraphPartition& partition,
                                std::span<const Triplet> batch, double reg,
                                const PropagationOptions& options,
                                EmbeddingGradients<Real>* gradients) {
  if (batch.empty()) throw UsageError("empty training batch");
  const auto stack = forward(state, graph, partition, options);
  const auto d = state.dim();
  Table<Real> grad_users = Table<Real>::Zero(graph.num_users(), d);
  Table<Real> grad_items = Table<Real>::Zero(graph.num_items(), d);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const auto scale = static_cast<Real>(inv_batch);

  double loss = 0.0;
  double squared_norm = 0.0;
  for (const auto& t : batch) {
    const auto eu = stack.final_users.row(t.user);
    const auto ep = stack.final_items.row(t.positive);
    const auto en = stack.final_items.row(t.negative);
    const auto terms = bpr_loss(static_cast<double>(eu.dot(ep)),
                                static_cast<double>(eu.dot(en)));
    loss += terms.loss;
    const auto gp = static_cast<Real>(terms.grad_positive) * scale;
    const auto gn = static_cast<Real>(terms.grad_negative) * scale;
    grad_users.row(t.user) += gp * ep + gn * en;
    grad_items.row(t.positive) += gp * eu;
    grad_items.row(t.negative) += gn * eu;
    squared_norm +=
        static_cast<double>(state.user_embeddings.row(t.user).squaredNorm() +
                            state.item_embeddings.row(t.positive).squaredNorm() +
                            state.item_embeddings.row(t.negative).squaredNorm());
  }
  const double total = (loss + reg * squared_norm) * inv_batch;
  if (!std::isfinite(total)) throw NumericalError("training loss diverged");
  if (gradients == nullptr) return total;

  *gradients = backward(stack, graph, partition, grad_users, grad_items,
                        options.threads);
  if (reg > 0.0) {
    const auto r = static_cast<Real>(2.0 * reg * inv_batch);
    for (const auto& t : batch) {
      gradients->users.row(t.user) += r * state.user_embeddings.row(t.user);
      gradients->items.row(t.positive) +=
          r * state.item_embeddings.row(t.positive);
      gradients->items.row(t.negative) +=
          r * state.item_embeddings.row(t.negative);
    }
  }
  return total;
}

template <typename Real>
TrainResult<Real> train(const InteractionGraph& graph,
                        const EvalTask& validation, const TrainConfig& config,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (validation.num_items != graph.num_items() ||
      static_cast<NodeId>(validation.targets.size()) != graph.num_users()) {
    throw DataError("validation task does not match the training graph");
  }
  if (std::all_of(validation.targets.begin(), validation.targets.end(),
                  [](const auto& v) { return v.empty(); })) {
    throw DataError("validation set is empty");
  }

  Rng rng(config.seed);
  auto state = ModelState<Real>::initialize(graph.num_users(), graph.num_items(),
                                            config.dim, config.groups, rng,
                                            config.leaky_slope);
  const auto partition_options = config.model.partition_options();
  const auto propagation = config.model.propagation_options();
  const AdamConfig adam{config.learning_rate};

  TrainResult<Real> result;
  result.best_state = state;
  int evaluations_without_gain = 0;

  auto refresh = [&] {
    return build_partition(graph, state.user_embeddings, state.item_embeddings,
                           state.grouping, partition_options);
  };

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto partition = refresh();
    result.partitions.push_back(
        {epoch, partition.group_sizes(), partition.size_entropy()});

    const auto triplets = sample_epoch(graph, rng);
    if (triplets.empty()) throw DataError("no trainable triplets");
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    EmbeddingGradients<Real> grads;
    for (std::size_t begin = 0; begin < triplets.size();
         begin += config.batch_size) {
      const auto end = std::min(triplets.size(), begin + config.batch_size);
      if (config.refresh == PartitionRefresh::kBatch && begin > 0) {
        partition = refresh();
      }
      epoch_loss += batch_loss_and_gradients(
          state, graph, partition,
          std::span(triplets).subspan(begin, end - begin), config.reg,
          propagation, &grads);
      ++batches;
      const auto step = ++state.moments.step;
      adam_step(state.user_embeddings, grads.users, state.moments.first_users,
                state.moments.second_users, step, adam);
      adam_step(state.item_embeddings, grads.items, state.moments.first_items,
                state.moments.second_items, step, adam);
    }

    CurvePoint point;
    point.epoch = epoch;
    point.loss = epoch_loss / static_cast<double>(batches);
    result.epochs_run = epoch;

    bool stop = false;
    if (epoch % config.eval_every == 0) {
      const auto inference = infer(state, graph, config.model);
      EvalOptions eval;
      eval.cutoff = config.cutoff;
      eval.threads = config.model.threads;
      const auto report = evaluate(inference.stack.final_users,
                                   inference.stack.final_items, validation,
                                   eval);
      point.val_recall = report.recall;
      point.val_ndcg = report.ndcg;
      spdlog::info("epoch {:4d}  loss {:.6f}  recall@{} {:.5f}  ndcg@{} {:.5f}",
                   epoch, point.loss, config.cutoff, report.recall,
                   config.cutoff, report.ndcg);
      if (report.recall > result.best_recall) {
        result.best_recall = report.recall;
        result.best_epoch = epoch;
        result.best_state = state;
        evaluations_without_gain = 0;
      } else if (++evaluations_without_gain >= config.patience) {
        stop = true;
      }
    }
    result.curve.push_back(point);
    if (on_epoch) on_epoch(point);
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }
  if (result.best_epoch == 0) {
    // Never validated (max_epochs < eval_every): keep the final state.
    result.best_state = state;
    result.best_epoch = result.epochs_run;
  }
  return result;
}

#define IMPGCN_INSTANTIATE(Real)                                              \
  template void adam_step<Real>(Table<Real>&, const Table<Real>&,             \
                                Table<Real>&, Table<Real>&, std::int64_t,     \
                                const AdamConfig&);                           \
  template Inference<Real> infer<Real>(const ModelState<Real>&,               \
                                       const InteractionGraph&,               \
                                       const ModelOptions&);                  \
  template double batch_loss_and_gradients<Real>(                             \
      const ModelState<Real>&, const InteractionGraph&,                       \
      const SubgraphPartition&, std::span<const Triplet>, double,             \
      const PropagationOptions&, EmbeddingGradients<Real>*);                  \
  template TrainResult<Real> train<Real>(const InteractionGraph&,             \
                                         const EvalTask&, const TrainConfig&, \
                                         const EpochCallback&);

IMPGCN_INSTANTIATE(float)
IMPGCN_INSTANTIATE(double)

#undef IMPGCN_INSTANTIATE

}  // namespace impgcn
