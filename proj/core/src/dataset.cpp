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

#include "impgcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace impgcn {
namespace {

enum class Separator { kTab, kComma, kWhitespace };

Separator detect_separator(std::string_view line) {
  if (line.find('\t') != std::string_view::npos) return Separator::kTab;
  if (line.find(',') != std::string_view::npos) return Separator::kComma;
  return Separator::kWhitespace;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, Separator sep) {
  std::vector<std::string_view> fields;
  if (sep == Separator::kWhitespace) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      const auto end = line.find_first_of(" \t", start);
      fields.push_back(line.substr(start, end == std::string_view::npos
                                              ? std::string_view::npos
                                              : end - start));
      pos = end == std::string_view::npos ? line.size() : end;
    }
    return fields;
  }
  const char c = sep == Separator::kTab ? '\t' : ',';
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(c, pos);
    fields.push_back(trim(line.substr(pos, end == std::string_view::npos
                                               ? std::string_view::npos
                                               : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return fields;
}

// Dense ids in order of first appearance.
class IdMap {
 public:
  NodeId intern(const std::string& key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<NodeId>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }
  const std::vector<std::string>& keys() const { return keys_; }
  NodeId size() const { return static_cast<NodeId>(keys_.size()); }

 private:
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::string> keys_;
};

struct Indexed {
  IdMap users;
  IdMap items;
  std::vector<Interaction> edges;  // deduplicated, first-occurrence order
};

Indexed index_interactions(std::span<const RawInteraction> input) {
  Indexed out;
  std::unordered_set<std::uint64_t> seen;
  for (const auto& raw : input) {
    const NodeId u = out.users.intern(raw.user);
    const NodeId i = out.items.intern(raw.item);
    const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
                     static_cast<std::uint32_t>(i);
    if (seen.insert(key).second) out.edges.push_back({u, i});
  }
  return out;
}

std::int64_t held_out_count(double ratio, std::size_t count) {
  if (ratio <= 0.0) return 0;
  const auto n = static_cast<std::int64_t>(
      std::floor(ratio * static_cast<double>(count) + 1e-9));
  return std::max<std::int64_t>(1, n);
}

std::vector<Interaction> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Interaction> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_fields(t, Separator::kTab);
    Interaction x;
    if (fields.size() != 2 ||
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), x.user).ec != std::errc{} ||
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), x.item).ec != std::errc{}) {
      throw DataError(path.string() + ":" + std::to_string(number) +
                      ": expected `user<TAB>item` with integer ids");
    }
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> read_id_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    NodeId id = -1;
    if (tab == std::string::npos ||
        std::from_chars(line.data(), line.data() + tab, id).ec != std::errc{} ||
        id != static_cast<NodeId>(out.size())) {
      throw DataError(path.string() + ":" + std::to_string(number) +
                      ": expected `<next internal id><TAB><external id>`");
    }
    out.push_back(line.substr(tab + 1));
  }
  return out;
}

void write_pairs(const std::filesystem::path& path,
                 std::span<const Interaction> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [u, i] : pairs) out << u << '\t' << i << '\n';
}

void write_id_map(const std::filesystem::path& path,
                  const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t k = 0; k < ids.size(); ++k) out << k << '\t' << ids[k] << '\n';
}

}  // namespace

std::vector<RawInteraction> parse_interactions(const std::string& text,
                                               const std::string& source) {
  std::vector<RawInteraction> out;
  std::optional<Separator> sep;
  std::size_t number = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!sep) sep = detect_separator(t);
    const auto fields = split_fields(t, *sep);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(source + ":" + std::to_string(number) +
                      ": malformed line, expected user and item columns");
    }
    out.push_back({std::string(fields[0]), std::string(fields[1])});
  }
  if (out.empty()) throw DataError(source + ": no interactions found");
  return out;
}

std::vector<RawInteraction> ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_interactions(buffer.str(), path.string());
}

std::vector<RawInteraction> k_core_filter(std::span<const RawInteraction> input,
                                          int k, bool single_pass) {
  if (k < 1) throw UsageError("k-core threshold must be at least 1");
  const auto indexed = index_interactions(input);
  const auto& edges = indexed.edges;
  const NodeId n_users = indexed.users.size();
  const NodeId n_items = indexed.items.size();

  std::vector<std::int64_t> user_deg(n_users, 0), item_deg(n_items, 0);
  for (const auto& [u, i] : edges) {
    ++user_deg[u];
    ++item_deg[i];
  }
  std::vector<char> alive(edges.size(), 1);

  if (single_pass) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      alive[e] = user_deg[edges[e].user] >= k && item_deg[edges[e].item] >= k;
    }
  } else {
    // Peel nodes below the threshold, cascading through their edges.
    std::vector<std::vector<std::size_t>> user_edges(n_users), item_edges(n_items);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      user_edges[edges[e].user].push_back(e);
      item_edges[edges[e].item].push_back(e);
    }
    // Node ids: users [0, N), items [N, N + M).
    std::vector<char> removed(static_cast<std::size_t>(n_users) + n_items, 0);
    std::vector<std::int64_t> queue;
    for (NodeId u = 0; u < n_users; ++u) {
      if (user_deg[u] < k) {
        removed[u] = 1;
        queue.push_back(u);
      }
    }
    for (NodeId i = 0; i < n_items; ++i) {
      if (item_deg[i] < k) {
        removed[n_users + i] = 1;
        queue.push_back(std::int64_t{n_users} + i);
      }
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto node = queue[head];
      const bool is_user = node < n_users;
      const auto& incident = is_user ? user_edges[node] : item_edges[node - n_users];
      for (auto e : incident) {
        if (!alive[e]) continue;
        alive[e] = 0;
        if (is_user) {
          const NodeId i = edges[e].item;
          if (--item_deg[i] < k && !removed[n_users + i]) {
            removed[n_users + i] = 1;
            queue.push_back(std::int64_t{n_users} + i);
          }
        } else {
          const NodeId u = edges[e].user;
          if (--user_deg[u] < k && !removed[u]) {
            removed[u] = 1;
            queue.push_back(u);
          }
        }
      }
    }
  }

  std::vector<RawInteraction> out;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!alive[e]) continue;
    out.push_back({indexed.users.keys()[edges[e].user],
                   indexed.items.keys()[edges[e].item]});
  }
  if (out.empty()) {
    throw DataError("empty after filtering: no " + std::to_string(k) +
                    "-core among " + std::to_string(edges.size()) +
                    " distinct interactions");
  }
  return out;
}

InteractionGraph DatasetSplit::train_graph() const {
  return build_graph(train, num_users(), num_items());
}

DatasetSplit split_per_user(std::span<const RawInteraction> interactions,
                            const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train <= 0.0 || ratios.validation < 0.0 || ratios.test < 0.0 ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-6) {
    throw UsageError("split ratios must be non-negative, with a positive "
                     "training share, and sum to 1");
  }
  if (interactions.empty()) throw DataError("no interactions to split");
  const auto indexed = index_interactions(interactions);
  const NodeId n_users = indexed.users.size();
  const NodeId n_items = indexed.items.size();

  std::vector<std::vector<NodeId>> per_user(n_users);
  for (const auto& [u, i] : indexed.edges) per_user[u].push_back(i);

  Rng rng(seed);
  std::vector<std::vector<NodeId>> train(n_users), held(n_users);
  std::vector<std::vector<char>> held_kind(n_users);
  for (NodeId u = 0; u < n_users; ++u) {
    auto items = per_user[u];
    std::sort(items.begin(), items.end());
    const auto n_test = held_out_count(ratios.test, items.size());
    const auto n_val = held_out_count(ratios.validation, items.size());
    if (n_test + n_val >= static_cast<std::int64_t>(items.size())) {
      throw DataError("user '" + indexed.users.keys()[u] + "' has " +
                      std::to_string(items.size()) +
                      " interactions, too few to split");
    }
    std::shuffle(items.begin(), items.end(), rng);
    for (std::int64_t k = 0; k < n_test + n_val; ++k) {
      held[u].push_back(items[k]);
      held_kind[u].push_back(k < n_test ? 1 : 0);
    }
    train[u].assign(items.begin() + n_test + n_val, items.end());
  }

  // Keep every held-out item rankable: it must also occur in training.
  std::vector<std::int64_t> train_count(n_items, 0);
  for (const auto& list : train) {
    for (NodeId i : list) ++train_count[i];
  }
  DatasetSplit split;
  split.ratios = ratios;
  split.seed = seed;
  for (NodeId u = 0; u < n_users; ++u) {
    for (std::size_t h = 0; h < held[u].size(); ++h) {
      const NodeId item = held[u][h];
      if (train_count[item] > 0) continue;
      auto& tr = train[u];
      const auto donor = std::find_if(tr.begin(), tr.end(), [&](NodeId j) {
        return train_count[j] >= 2;
      });
      if (donor != tr.end()) {
        --train_count[*donor];
        ++train_count[item];
        std::swap(*donor, held[u][h]);
      } else {
        held[u][h] = -1;
        ++split.dropped;
      }
    }
  }

  // Items left without training interactions (all dropped) are removed.
  std::vector<NodeId> remap(n_items, -1);
  for (NodeId i = 0; i < n_items; ++i) {
    if (train_count[i] > 0) {
      remap[i] = static_cast<NodeId>(split.item_ids.size());
      split.item_ids.push_back(indexed.items.keys()[i]);
    }
  }
  split.user_ids = indexed.users.keys();
  for (NodeId u = 0; u < n_users; ++u) {
    for (NodeId i : train[u]) split.train.push_back({u, remap[i]});
    for (std::size_t h = 0; h < held[u].size(); ++h) {
      const NodeId i = held[u][h];
      if (i < 0) continue;
      (held_kind[u][h] ? split.test : split.validation).push_back({u, remap[i]});
    }
  }
  for (auto* list : {&split.train, &split.validation, &split.test}) {
    std::sort(list->begin(), list->end());
  }
  return split;
}

DatasetStats compute_stats(const DatasetSplit& split) {
  DatasetStats s;
  s.users = split.num_users();
  s.items = split.num_items();
  s.interactions = static_cast<std::int64_t>(
      split.train.size() + split.validation.size() + split.test.size());
  s.sparsity = 1.0 - static_cast<double>(s.interactions) /
                         (static_cast<double>(s.users) * static_cast<double>(s.items));
  return s;
}

void write_split(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_pairs(dir / "train.txt", split.train);
  write_pairs(dir / "validation.txt", split.validation);
  write_pairs(dir / "test.txt", split.test);
  write_id_map(dir / "users.txt", split.user_ids);
  write_id_map(dir / "items.txt", split.item_ids);
}

DatasetSplit read_split(const std::filesystem::path& dir) {
  DatasetSplit split;
  split.user_ids = read_id_map(dir / "users.txt");
  split.item_ids = read_id_map(dir / "items.txt");
  split.train = read_pairs(dir / "train.txt");
  split.validation = read_pairs(dir / "validation.txt");
  split.test = read_pairs(dir / "test.txt");
  for (const auto* list : {&split.train, &split.validation, &split.test}) {
    for (const auto& [u, i] : *list) {
      if (u < 0 || u >= split.num_users() || i < 0 || i >= split.num_items()) {
        throw DataError("split in " + dir.string() +
                        " references ids outside users.txt/items.txt");
      }
    }
  }
  if (split.train.empty()) throw DataError("training split is empty");
  return split;
}

}  // namespace impgcn
