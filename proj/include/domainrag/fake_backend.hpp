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

#pragma once

#include <cstdint>

#include "domainrag/gateway.hpp"

namespace domainrag {

// Deterministic stand-ins for every capability, for offline runs and tests.
// Every method is a pure function of its inputs and the construction
// options.
//
//   encode / prompt_encode  keyed BLAKE2b of the pixels, expanded to the
//                           declared dim and L2-normalised
//   feature_map             cell-averaged colour projections on a coarse grid
//   inpaint                 foreground (mask 0) set to the mean background colour
//   generate                1024x1024 procedural texture keyed by prompt + params
//   fill                    mask-1 pixels blended toward a prompt-derived palette
//                           by noise_strength; mask-0 pixels copied verbatim
class FakeBackend final : public ModelBackend {
 public:
  struct Options {
    DeclaredDims dims;
    int feature_grid = 16;  // max cells per spatial axis
    std::uint64_t salt = 0;
  };

  FakeBackend() : FakeBackend(Options{}) {}
  explicit FakeBackend(Options options);

  const Options& options() const noexcept { return options_; }

  EmbeddingVector encode_image(const ImageBuffer& image) override;
  FeatureMap extract_feature_map(const ImageBuffer& image) override;
  ImageBuffer inpaint_background(const ImageBuffer& image, const BinaryMask& mask) override;
  EmbeddingVector encode_prompt(const ImageBuffer& image) override;
  ImageBuffer generate_background(const EmbeddingVector& prompt,
                                  const GenerationParams& params) override;
  ImageBuffer fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                          const EmbeddingVector& prompt, const GenerationParams& params) override;

 private:
  EmbeddingVector hash_embedding(const ImageBuffer& image, std::string_view domain,
                                 std::size_t dim) const;

  Options options_;
};

}  // namespace domainrag
