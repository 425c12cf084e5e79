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

// Exact two-stage background retrieval.
//
// Stage one ranks every record by cosine similarity between the query
// embedding and the record embedding and keeps the best m. Stage two
// re-orders those m candidates by the L2 distance between style descriptors
// and keeps the best n. Ties are broken by ascending record id in both
// stages, so results are a deterministic function of the index and query.
//
// Vectors are stored as 32-bit floats (the on-disk representation) and
// widened to double for all arithmetic.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "domainrag/embedding.hpp"

namespace domainrag {

using RecordId = std::uint64_t;

enum class RecordSource : std::uint8_t {
  kDatabase = 0,
  kInpaintedSupport = 1,
};

struct BackgroundRecord {
  RecordId id = 0;
  std::string image_ref;
  EmbeddingVector embedding;
  StyleVector style;
  RecordSource source = RecordSource::kDatabase;
};

enum class RetrievalStage { kSemantic, kReranked };

struct RankedCandidate {
  RecordId id = 0;
  double semantic_score = 0.0;
  std::optional<double> style_distance;  // set once re-ranked

  bool operator==(const RankedCandidate&) const = default;
};

struct RetrievalResult {
  RetrievalStage stage = RetrievalStage::kSemantic;
  std::vector<RankedCandidate> ranked;

  std::vector<RecordId> ids() const;
  bool operator==(const RetrievalResult&) const = default;
};

class BackgroundIndex {
 public:
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t embedding_dim() const noexcept { return embedding_dim_; }
  std::size_t style_dim() const noexcept { return style_dim_; }

  RecordId id_at(std::size_t pos) const { return ids_.at(pos); }
  const std::string& image_ref_at(std::size_t pos) const { return refs_.at(pos); }
  RecordSource source_at(std::size_t pos) const { return sources_.at(pos); }
  std::span<const float> embedding_at(std::size_t pos) const;
  std::span<const float> style_at(std::size_t pos) const;

  std::optional<std::size_t> position_of(RecordId id) const;
  bool contains(RecordId id) const { return positions_.contains(id); }

  // Record at `pos`, with its stored floats widened to double.
  BackgroundRecord record(std::size_t pos) const;

  // Bitwise equality of every stored field, including insertion order.
  bool operator==(const BackgroundIndex& other) const;

 private:
  friend BackgroundIndex build_index(std::vector<BackgroundRecord> records);
  friend BackgroundIndex augment_pool_with_support(
      const BackgroundIndex& index, std::vector<BackgroundRecord> inpainted_supports);
  friend BackgroundIndex deserialize_index(std::span<const std::uint8_t> bytes);

  BackgroundIndex(std::size_t embedding_dim, std::size_t style_dim)
      : embedding_dim_(embedding_dim), style_dim_(style_dim) {}

  void append(RecordId id, std::string image_ref, std::span<const float> embedding,
              std::span<const float> style, RecordSource source);
  void append(const BackgroundRecord& record);

  std::size_t embedding_dim_;
  std::size_t style_dim_;
  std::vector<RecordId> ids_;
  std::vector<std::string> refs_;
  std::vector<RecordSource> sources_;
  std::vector<float> embeddings_;  // size() x embedding_dim_, row-major
  std::vector<float> styles_;      // size() x style_dim_, row-major
  std::unordered_map<RecordId, std::size_t> positions_;
};

// Throws EmptyInputError, DimensionError, DuplicateIdError, or
// DegenerateVectorError for a zero-norm embedding.
BackgroundIndex build_index(std::vector<BackgroundRecord> records);

// Top-min(m, |index|) records by cosine similarity, descending. Records whose
// ids appear in `excluded` are skipped.
RetrievalResult retrieve_semantic(const BackgroundIndex& index, const EmbeddingVector& query,
                                  std::size_t m, std::span<const RecordId> excluded = {});

// Re-orders semantic candidates by style distance to `query_style`,
// ascending, and keeps min(n, |candidates|).
RetrievalResult rerank_style(const BackgroundIndex& index, const RetrievalResult& candidates,
                             const StyleVector& query_style, std::size_t n);

RetrievalResult retrieve(const BackgroundIndex& index, const EmbeddingVector& query_embedding,
                         const StyleVector& query_style, std::size_t m, std::size_t n,
                         std::span<const RecordId> excluded = {});

// Returns a new index holding every existing record followed by the given
// supports, re-tagged as kInpaintedSupport.
BackgroundIndex augment_pool_with_support(const BackgroundIndex& index,
                                          std::vector<BackgroundRecord> inpainted_supports);

// Binary container: "DRAGIDX1", u32 embedding_dim, u32 style_dim, u64 count,
// then per record u64 id, u32 ref length, ref bytes, f32 embedding, f32
// style, u8 source. All integers and floats little-endian.
void save_index(const BackgroundIndex& index, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_index(const BackgroundIndex& index);
BackgroundIndex load_index(const std::filesystem::path& path);
BackgroundIndex deserialize_index(std::span<const std::uint8_t> bytes);

}  // namespace domainrag
