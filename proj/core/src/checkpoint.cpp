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

#include "impgcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace impgcn {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  template <typename Derived>
  void tensor(const Eigen::DenseBase<Derived>& t) {
    // Row-major traversal regardless of storage order.
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) f32(t(r, c));
    }
  }
  void text(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{bytes_[pos_ + k]} << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  template <typename Matrix>
  void tensor(Matrix& t, Eigen::Index rows, Eigen::Index cols) {
    need(static_cast<std::size_t>(rows * cols) * 4);
    t.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = f32();
    }
  }
  void vector(Vector<float>& v, Eigen::Index n) {
    need(static_cast<std::size_t>(n) * 4);
    v.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) v[k] = f32();
  }
  std::string text() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void write_ids(Writer& w, const std::vector<std::string>& ids, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) {
    w.u32(static_cast<std::uint32_t>(k));
    w.text(ids.empty() ? std::to_string(k) : ids[k]);
  }
}

std::vector<std::string> read_ids(Reader& r, std::uint32_t count) {
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    if (r.u32() != k) throw DataError("checkpoint id map is out of order");
    ids.push_back(r.text());
  }
  return ids;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  const auto& s = checkpoint.state;
  s.validate();
  const auto n = static_cast<std::size_t>(s.num_users());
  const auto m = static_cast<std::size_t>(s.num_items());
  if ((!checkpoint.user_ids.empty() && checkpoint.user_ids.size() != n) ||
      (!checkpoint.item_ids.empty() && checkpoint.item_ids.size() != m)) {
    throw UsageError("id maps do not match the embedding tables");
  }
  auto bytes = std::vector<std::uint8_t>(kCheckpointMagic, kCheckpointMagic + 4);
  Writer body;
  body.u32(kCheckpointVersion);
  body.u32(static_cast<std::uint32_t>(n));
  body.u32(static_cast<std::uint32_t>(m));
  body.u32(static_cast<std::uint32_t>(s.dim()));
  body.u32(static_cast<std::uint32_t>(s.num_groups()));
  body.u32(checkpoint.layers);
  body.tensor(s.user_embeddings);
  body.tensor(s.item_embeddings);
  body.tensor(s.grouping.w1);
  body.tensor(s.grouping.b1.transpose());
  body.tensor(s.grouping.w2);
  body.tensor(s.grouping.b2.transpose());
  body.tensor(s.grouping.w3);
  body.tensor(s.grouping.b3.transpose());
  write_ids(body, checkpoint.user_ids, n);
  write_ids(body, checkpoint.item_ids, m);
  const auto rest = body.take();
  bytes.insert(bytes.end(), rest.begin(), rest.end());
  return bytes;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw DataError("not an impgcn checkpoint (bad magic bytes)");
  }
  const std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const auto n = r.u32();
  const auto m = r.u32();
  const auto d = r.u32();
  const auto groups = r.u32();
  Checkpoint c;
  c.layers = r.u32();
  if (n == 0 || m == 0 || d == 0 || groups == 0) {
    throw DataError("checkpoint header has a zero dimension");
  }
  auto& s = c.state;
  r.tensor(s.user_embeddings, n, d);
  r.tensor(s.item_embeddings, m, d);
  r.tensor(s.grouping.w1, d, d);
  r.vector(s.grouping.b1, d);
  r.tensor(s.grouping.w2, d, d);
  r.vector(s.grouping.b2, d);
  r.tensor(s.grouping.w3, d, groups);
  r.vector(s.grouping.b3, groups);
  c.user_ids = read_ids(r, n);
  c.item_ids = read_ids(r, m);
  if (!r.done()) throw DataError("checkpoint has trailing bytes");
  s.reset_moments();
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<NodeId> expected_users,
                           std::optional<NodeId> expected_items) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  auto c = decode_checkpoint(bytes);
  if ((expected_users && c.state.num_users() != *expected_users) ||
      (expected_items && c.state.num_items() != *expected_items)) {
    throw DataError("checkpoint shape " + std::to_string(c.state.num_users()) +
                    "x" + std::to_string(c.state.num_items()) +
                    " does not match the dataset");
  }
  return c;
}

}  // namespace impgcn
