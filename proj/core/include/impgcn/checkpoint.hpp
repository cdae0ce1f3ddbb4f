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

#ifndef IMPGCN_CHECKPOINT_HPP_
#define IMPGCN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "impgcn/propagation.hpp"

namespace impgcn {

inline constexpr char kCheckpointMagic[4] = {'I', 'M', 'P', 'G'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Persisted model: E^(0), the grouping network, the layer count and the
/// external id maps. Adam moments are not stored.
///
/// Layout, all integers little-endian u32 and all floats little-endian
/// IEEE-754 binary32:
///
///   "IMPG" | version | N | M | d | N_s | K
///   E0_users (N*d, row-major) | E0_items (M*d, row-major)
///   W1 (d*d) | b1 (d) | W2 (d*d) | b2 (d) | W3 (d*N_s) | b3 (N_s)
///   N user entries, then M item entries, each:
///     internal id (u32) | byte length (u32) | UTF-8 bytes
struct Checkpoint {
  ModelState<float> state;
  std::uint32_t layers = 0;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

/// Missing id maps are written as decimal internal ids.
void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);

/// Throws DataError on a bad magic, an unknown version, truncation or
/// trailing bytes, and on a shape that differs from `expected_users` /
/// `expected_items` when given.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<NodeId> expected_users = std::nullopt,
                           std::optional<NodeId> expected_items = std::nullopt);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

}  // namespace impgcn

#endif  // IMPGCN_CHECKPOINT_HPP_
