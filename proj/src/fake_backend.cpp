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

#include "domainrag/fake_backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "domainrag/codec.hpp"
#include "domainrag/errors.hpp"

namespace domainrag {
namespace {

Digest params_digest(std::string_view domain, std::uint64_t salt, const EmbeddingVector& prompt,
                     const GenerationParams& params) {
  Hasher h;
  h.update(domain).update_u64(salt);
  h.update_u64(prompt.dim());
  for (double v : prompt.values()) h.update_f64(v);
  h.update_f64(params.guidance_scale)
      .update_u64(static_cast<std::uint64_t>(params.num_steps))
      .update_f64(params.noise_strength)
      .update_u64(params.seed);
  return h.finish();
}

void require_mask_extent(const ImageBuffer& image, const BinaryMask& mask) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw ProtocolViolation("mask and image dimensions differ");
  }
}

// Fixed per-channel colour projection weights in [-1, 1].
std::array<double, 3> channel_weights(std::size_t c) {
  const auto k = static_cast<double>(c);
  return {std::fmod(0.37 * k + 0.11, 2.0) - 1.0, std::fmod(0.61 * k + 0.53, 2.0) - 1.0,
          std::fmod(0.83 * k + 0.29, 2.0) - 1.0};
}

}  // namespace

FakeBackend::FakeBackend(Options options) : options_(options) {
  if (options_.feature_grid < 1) throw ConfigError("feature_grid must be positive");
  if (options_.dims.embedding_dim == 0 || options_.dims.prompt_dim == 0 ||
      options_.dims.feature_channels == 0) {
    throw ConfigError("declared dimensions must be positive");
  }
}

EmbeddingVector FakeBackend::hash_embedding(const ImageBuffer& image, std::string_view domain,
                                            std::size_t dim) const {
  const Digest digest = Hasher()
                            .update(domain)
                            .update_u64(options_.salt)
                            .update_u64(static_cast<std::uint64_t>(image.width()))
                            .update_u64(static_cast<std::uint64_t>(image.height()))
                            .update(image.pixels())
                            .finish();
  const Bytes stream = expand_digest(digest, dim * 8);
  std::vector<double> values(dim);
  double sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t word = 0;
    for (int b = 0; b < 8; ++b) word |= static_cast<std::uint64_t>(stream[i * 8 + b]) << (8 * b);
    // 53 random bits mapped to [-1, 1).
    values[i] = static_cast<double>(word >> 11) * 0x1.0p-52 - 1.0;
    sq += values[i] * values[i];
  }
  if (sq == 0.0) {
    values[0] = 1.0;
    sq = 1.0;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& v : values) v *= inv;
  return EmbeddingVector(std::move(values));
}

EmbeddingVector FakeBackend::encode_image(const ImageBuffer& image) {
  return hash_embedding(image, "encode", options_.dims.embedding_dim);
}

EmbeddingVector FakeBackend::encode_prompt(const ImageBuffer& image) {
  return hash_embedding(image, "prompt_encode", options_.dims.prompt_dim);
}

FeatureMap FakeBackend::extract_feature_map(const ImageBuffer& image) {
  const int gh = std::min(image.height(), options_.feature_grid);
  const int gw = std::min(image.width(), options_.feature_grid);
  const std::size_t channels = options_.dims.feature_channels;
  const std::size_t plane = static_cast<std::size_t>(gh) * static_cast<std::size_t>(gw);
  std::vector<double> data(channels * plane);

  for (int gy = 0; gy < gh; ++gy) {
    const int y0 = gy * image.height() / gh;
    const int y1 = (gy + 1) * image.height() / gh;
    for (int gx = 0; gx < gw; ++gx) {
      const int x0 = gx * image.width() / gw;
      const int x1 = (gx + 1) * image.width() / gw;
      std::array<double, 3> mean{};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int c = 0; c < 3; ++c) mean[c] += image.at(x, y, c);
        }
      }
      const double count = static_cast<double>((y1 - y0) * (x1 - x0)) * 255.0;
      for (auto& m : mean) m /= count;
      const std::size_t cell = static_cast<std::size_t>(gy) * static_cast<std::size_t>(gw) +
                               static_cast<std::size_t>(gx);
      for (std::size_t c = 0; c < channels; ++c) {
        const auto w = channel_weights(c);
        const double v = w[0] * mean[0] + w[1] * mean[1] + w[2] * mean[2];
        // Odd channels are rectified so the statistics are not purely linear.
        data[c * plane + cell] = (c % 2 == 1) ? std::max(0.0, v) : v;
      }
    }
  }
  return FeatureMap(channels, static_cast<std::size_t>(gh), static_cast<std::size_t>(gw), std::move(data));
}

ImageBuffer FakeBackend::inpaint_background(const ImageBuffer& image, const BinaryMask& mask) {
  require_mask_extent(image, mask);
  std::array<std::uint64_t, 3> sum{};
  std::uint64_t count = 0;
  const auto m = mask.values();
  const auto px = image.pixels();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 1) {
      for (int c = 0; c < 3; ++c) sum[c] += px[i * 3 + c];
      ++count;
    }
  }
  std::array<std::uint8_t, 3> fill{128, 128, 128};
  if (count > 0) {
    for (int c = 0; c < 3; ++c) fill[c] = static_cast<std::uint8_t>((sum[c] + count / 2) / count);
  }
  ImageBuffer out = image;
  auto dst = out.pixels();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) {
      for (int c = 0; c < 3; ++c) dst[i * 3 + c] = fill[c];
    }
  }
  return out;
}

ImageBuffer FakeBackend::generate_background(const EmbeddingVector& prompt, const GenerationParams& params) {
  const Digest d = params_digest("generate", options_.salt, prompt, params);
  const std::array<int, 3> c0{d[0], d[1], d[2]};
  const std::array<int, 3> c1{d[3], d[4], d[5]};
  const int fx = 1 + d[6] % 7;
  const int fy = 1 + d[7] % 7;
  const int shift = 7 + d[8] % 5;

  ImageBuffer out(kGeneratedSize, kGeneratedSize);
  for (int y = 0; y < kGeneratedSize; ++y) {
    for (int x = 0; x < kGeneratedSize; ++x) {
      const int t = (((x * fx + y * fy) >> 2) ^ ((x * y) >> shift)) & 255;
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<std::uint8_t>((c0[c] * (255 - t) + c1[c] * t + 127) / 255);
      }
    }
  }
  return out;
}

ImageBuffer FakeBackend::fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                                     const EmbeddingVector& prompt, const GenerationParams& params) {
  require_mask_extent(image, mask);
  const Digest d = params_digest("fill", options_.salt, prompt, params);
  const double s = params.noise_strength;

  ImageBuffer out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      const int slot = (((x >> 4) + (y >> 4)) & 3) * 3;
      for (int c = 0; c < 3; ++c) {
        const double blended = (1.0 - s) * image.at(x, y, c) + s * d[static_cast<std::size_t>(slot + c)];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(blended + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace domainrag
