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

#ifndef IMPGCN_DATASET_HPP_
#define IMPGCN_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "impgcn/common.hpp"
#include "impgcn/graph.hpp"

namespace impgcn {

struct RawInteraction {
  std::string user;
  std::string item;

  friend bool operator==(const RawInteraction&, const RawInteraction&) = default;
  friend auto operator<=>(const RawInteraction&, const RawInteraction&) = default;
};

/// Reads `user<sep>item[<sep>extra...]` lines. The separator (tab, comma or
/// whitespace) is detected from the first non-blank line; blank lines are
/// skipped and extra columns ignored. Duplicates are kept.
std::vector<RawInteraction> ingest(const std::filesystem::path& path);

/// Same parser over in-memory text; `source` names it in error messages.
std::vector<RawInteraction> parse_interactions(const std::string& text,
                                               const std::string& source);

/// Deduplicates, then removes users and items with fewer than `k`
/// interactions. By default peels until every survivor has degree >= k;
/// `single_pass` applies one simultaneous pass over the input degrees.
/// Output keeps the first-occurrence order of the input.
std::vector<RawInteraction> k_core_filter(std::span<const RawInteraction> input,
                                          int k, bool single_pass = false);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

/// Train/validation/test interactions over dense internal ids.
struct DatasetSplit {
  std::vector<std::string> user_ids;  // internal -> external
  std::vector<std::string> item_ids;
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  // Held-out interactions on items absent from training that could not be
  // swapped into the training set.
  std::int64_t dropped = 0;

  NodeId num_users() const { return static_cast<NodeId>(user_ids.size()); }
  NodeId num_items() const { return static_cast<NodeId>(item_ids.size()); }

  InteractionGraph train_graph() const;
};

/// Deduplicates and, per user, shuffles with a seeded generator and holds
/// out max(1, floor(ratio * count)) interactions for validation and for
/// test. Held-out interactions on items unseen in training are swapped with
/// a training interaction of the same user whose item stays covered, or
/// dropped when no such swap exists. Internal ids follow first appearance.
DatasetSplit split_per_user(std::span<const RawInteraction> interactions,
                            const SplitRatios& ratios, std::uint64_t seed);

struct DatasetStats {
  std::int64_t users = 0;
  std::int64_t items = 0;
  std::int64_t interactions = 0;
  double sparsity = 0.0;  // 1 - interactions / (users * items)
};

DatasetStats compute_stats(const DatasetSplit& split);

/// Writes train.txt, validation.txt, test.txt (internal `user<TAB>item`),
/// users.txt and items.txt (`internal<TAB>external`) into `dir`.
void write_split(const DatasetSplit& split, const std::filesystem::path& dir);

DatasetSplit read_split(const std::filesystem::path& dir);

}  // namespace impgcn

#endif  // IMPGCN_DATASET_HPP_
