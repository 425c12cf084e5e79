// Copyright 2026 The domainrag Authors
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

#include "domainrag/background_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_set>

#include "domainrag/errors.hpp"
#include "domainrag/file_util.hpp"

namespace domainrag {
namespace {

constexpr char kMagic[8] = {'D', 'R', 'A', 'G', 'I', 'D', 'X', '1'};

std::vector<float> narrow(std::span<const double> values) {
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(values[i]);
    if (!std::isfinite(out[i])) {
      throw ValidationError("value " + std::to_string(values[i]) + " does not fit in float32");
    }
  }
  return out;
}

std::vector<double> widen(std::span<const float> values) {
  return std::vector<double>(values.begin(), values.end());
}

double norm_of(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

// Cosine similarity against a stored row, with the same operation order as
// cosine_similarity() on widened values.
double score_row(std::span<const double> query, double query_sq, std::span<const float> row) {
  double dot = 0.0;
  double row_sq = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const double r = row[i];
    dot += query[i] * r;
    row_sq += r * r;
  }
  return std::clamp(dot / (std::sqrt(query_sq) * std::sqrt(row_sq)), -1.0, 1.0);
}

bool semantic_before(const RankedCandidate& a, const RankedCandidate& b) {
  if (a.semantic_score != b.semantic_score) return a.semantic_score > b.semantic_score;
  return a.id < b.id;
}

bool style_before(const RankedCandidate& a, const RankedCandidate& b) {
  if (*a.style_distance != *b.style_distance) return *a.style_distance < *b.style_distance;
  return a.id < b.id;
}

void check_record_dims(const BackgroundRecord& r, std::size_t edim, std::size_t sdim) {
  if (r.embedding.dim() != edim || r.style.size() != sdim) {
    throw DimensionError("record " + std::to_string(r.id) + " has dims (" +
                         std::to_string(r.embedding.dim()) + ", " + std::to_string(r.style.size()) +
                         "), index expects (" + std::to_string(edim) + ", " +
                         std::to_string(sdim) + ")");
  }
}

// Little-endian byte sink / source for the index container.
class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("index file truncated at byte " + std::to_string(pos_));
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<RecordId> RetrievalResult::ids() const {
  std::vector<RecordId> out;
  out.reserve(ranked.size());
  for (const auto& c : ranked) out.push_back(c.id);
  return out;
}

std::span<const float> BackgroundIndex::embedding_at(std::size_t pos) const {
  return std::span<const float>(embeddings_).subspan(pos * embedding_dim_, embedding_dim_);
}

std::span<const float> BackgroundIndex::style_at(std::size_t pos) const {
  return std::span<const float>(styles_).subspan(pos * style_dim_, style_dim_);
}

std::optional<std::size_t> BackgroundIndex::position_of(RecordId id) const {
  auto it = positions_.find(id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

BackgroundRecord BackgroundIndex::record(std::size_t pos) const {
  return BackgroundRecord{ids_.at(pos), refs_[pos], EmbeddingVector(widen(embedding_at(pos))),
                          StyleVector(widen(style_at(pos))), sources_[pos]};
}

bool BackgroundIndex::operator==(const BackgroundIndex& other) const {
  auto same_bits = [](const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  };
  return embedding_dim_ == other.embedding_dim_ && style_dim_ == other.style_dim_ &&
         ids_ == other.ids_ && refs_ == other.refs_ && sources_ == other.sources_ &&
         same_bits(embeddings_, other.embeddings_) && same_bits(styles_, other.styles_);
}

void BackgroundIndex::append(RecordId id, std::string image_ref, std::span<const float> embedding,
                             std::span<const float> style, RecordSource source) {
  if (embedding.size() != embedding_dim_ || style.size() != style_dim_) {
    throw DimensionError("record " + std::to_string(id) + " does not match index dims");
  }
  if (positions_.contains(id)) throw DuplicateIdError("duplicate record id " + std::to_string(id));
  if (norm_of(embedding) == 0.0) throw DegenerateVectorError("record " + std::to_string(id) + " has a zero embedding");
  for (std::size_t c = style_dim_ / 2; c < style_dim_; ++c) {
    if (style[c] < 0.0f) throw ValidationError("record " + std::to_string(id) + " has negative sigma");
  }

  positions_.emplace(id, ids_.size());
  ids_.push_back(id);
  refs_.push_back(std::move(image_ref));
  sources_.push_back(source);
  embeddings_.insert(embeddings_.end(), embedding.begin(), embedding.end());
  styles_.insert(styles_.end(), style.begin(), style.end());
}

void BackgroundIndex::append(const BackgroundRecord& record) {
  check_record_dims(record, embedding_dim_, style_dim_);
  append(record.id, record.image_ref, narrow(record.embedding.values()),
         narrow(record.style.values()), record.source);
}

BackgroundIndex build_index(std::vector<BackgroundRecord> records) {
  if (records.empty()) throw EmptyInputError("cannot build an index from zero records");
  BackgroundIndex index(records.front().embedding.dim(), records.front().style.size());
  index.ids_.reserve(records.size());
  index.embeddings_.reserve(records.size() * index.embedding_dim_);
  index.styles_.reserve(records.size() * index.style_dim_);
  for (const auto& r : records) index.append(r);
  return index;
}

RetrievalResult retrieve_semantic(const BackgroundIndex& index, const EmbeddingVector& query,
                                  std::size_t m, std::span<const RecordId> excluded) {
  if (m == 0) throw ValidationError("m must be positive");
  if (query.dim() != index.embedding_dim()) {
    throw DimensionError("query dim " + std::to_string(query.dim()) + " != index dim " +
                         std::to_string(index.embedding_dim()));
  }
  const auto q = query.values();
  double query_sq = 0.0;
  for (double v : q) query_sq += v * v;
  if (query_sq == 0.0) throw DegenerateVectorError("retrieve_semantic: zero-norm query");

  std::unordered_set<RecordId> skip(excluded.begin(), excluded.end());
  std::vector<RankedCandidate> all;
  all.reserve(index.size());
  for (std::size_t pos = 0; pos < index.size(); ++pos) {
    const RecordId id = index.id_at(pos);
    if (skip.contains(id)) continue;
    all.push_back({id, score_row(q, query_sq, index.embedding_at(pos)), std::nullopt});
  }

  const std::size_t k = std::min(m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    semantic_before);
  all.resize(k);
  return RetrievalResult{RetrievalStage::kSemantic, std::move(all)};
}

RetrievalResult rerank_style(const BackgroundIndex& index, const RetrievalResult& candidates,
                             const StyleVector& query_style, std::size_t n) {
  if (candidates.stage != RetrievalStage::kSemantic) {
    throw StageError("rerank_style expects semantic-stage candidates");
  }
  if (n == 0) throw ValidationError("n must be positive");
  if (query_style.size() != index.style_dim()) {
    throw DimensionError("query style length " + std::to_string(query_style.size()) +
                         " != index style dim " + std::to_string(index.style_dim()));
  }
  const auto qs = query_style.values();
  std::vector<RankedCandidate> out;
  out.reserve(candidates.ranked.size());
  for (const auto& c : candidates.ranked) {
    auto pos = index.position_of(c.id);
    if (!pos) throw ValidationError("candidate id " + std::to_string(c.id) + " not in index");
    const auto row = widen(index.style_at(*pos));
    out.push_back({c.id, c.semantic_score, style_distance(qs, row)});
  }
  const std::size_t k = std::min(n, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(),
                    style_before);
  out.resize(k);
  return RetrievalResult{RetrievalStage::kReranked, std::move(out)};
}

RetrievalResult retrieve(const BackgroundIndex& index, const EmbeddingVector& query_embedding,
                         const StyleVector& query_style, std::size_t m, std::size_t n,
                         std::span<const RecordId> excluded) {
  return rerank_style(index, retrieve_semantic(index, query_embedding, m, excluded), query_style, n);
}

BackgroundIndex augment_pool_with_support(const BackgroundIndex& index,
                                          std::vector<BackgroundRecord> inpainted_supports) {
  BackgroundIndex out = index;
  for (auto& r : inpainted_supports) {
    r.source = RecordSource::kInpaintedSupport;
    out.append(r);
  }
  return out;
}

std::vector<std::uint8_t> serialize_index(const BackgroundIndex& index) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(static_cast<std::uint32_t>(index.embedding_dim()));
  w.u32(static_cast<std::uint32_t>(index.style_dim()));
  w.u64(index.size());
  for (std::size_t pos = 0; pos < index.size(); ++pos) {
    w.u64(index.id_at(pos));
    const auto& ref = index.image_ref_at(pos);
    w.u32(static_cast<std::uint32_t>(ref.size()));
    w.raw(ref.data(), ref.size());
    for (float v : index.embedding_at(pos)) w.f32(v);
    for (float v : index.style_at(pos)) w.f32(v);
    w.u8(static_cast<std::uint8_t>(index.source_at(pos)));
  }
  return w.take();
}

void save_index(const BackgroundIndex& index, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_index(index));
}

BackgroundIndex deserialize_index(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a background index file (bad magic)");
  }
  const std::uint32_t edim = r.u32();
  const std::uint32_t sdim = r.u32();
  const std::uint64_t count = r.u64();
  if (edim == 0 || sdim == 0 || sdim % 2 != 0) throw FormatError("invalid dims in index header");
  if (count == 0) throw FormatError("index file holds zero records");
  // Each record needs at least this many bytes; reject absurd counts early.
  const std::uint64_t min_record = 8 + 4 + 4ull * edim + 4ull * sdim + 1;
  if (count > r.remaining() / min_record) throw FormatError("index file truncated (record count)");

  BackgroundIndex index(edim, sdim);
  std::vector<float> emb(edim);
  std::vector<float> sty(sdim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const RecordId id = r.u64();
    const std::uint32_t len = r.u32();
    auto ref_bytes = r.take(len);
    std::string ref(ref_bytes.begin(), ref_bytes.end());
    for (auto& v : emb) v = r.f32();
    for (auto& v : sty) v = r.f32();
    const std::uint8_t tag = r.u8();
    if (tag > static_cast<std::uint8_t>(RecordSource::kInpaintedSupport)) {
      throw FormatError("invalid source tag " + std::to_string(tag));
    }
    for (float v : emb) if (!std::isfinite(v)) throw FormatError("non-finite embedding value");
    for (float v : sty) if (!std::isfinite(v)) throw FormatError("non-finite style value");
    try {
      index.append(id, std::move(ref), emb, sty, static_cast<RecordSource>(tag));
    } catch (const Error& e) {
      throw FormatError(std::string("corrupt index record: ") + e.what());
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after index records");
  return index;
}

BackgroundIndex load_index(const std::filesystem::path& path) {
  return deserialize_index(read_file_bytes(path));
}

}  // namespace domainrag
