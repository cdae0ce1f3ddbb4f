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
#include <thread>
#include <vector>

#include "impgcn/common.hpp"

namespace impgcn {

void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (count <= 0) return;
  // Small ranges are not worth a thread launch.
  constexpr std::int64_t kMinPerThread = 256;
  const std::int64_t workers = std::clamp<std::int64_t>(
      std::min<std::int64_t>(threads, count / kMinPerThread), 1, count);
  if (workers <= 1) {
    fn(0, count);
    return;
  }
  const std::int64_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min(count, chunk));
}

}  // namespace impgcn
