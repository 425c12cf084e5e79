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

#include "domainrag/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "domainrag/errors.hpp"

namespace domainrag {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" +
                         std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) throw EmptyInputError("embedding must have dim >= 1");
  if (!all_finite(values_)) throw ValidationError("embedding contains non-finite entries");
}

double EmbeddingVector::norm() const noexcept {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                       std::vector<double> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (channels_ == 0 || height_ * width_ == 0) {
    throw EmptyInputError("feature map has an empty extent");
  }
  if (data_.size() != channels_ * height_ * width_) {
    throw DimensionError("feature map data length " + std::to_string(data_.size()) +
                         " != C*H*W = " + std::to_string(channels_ * height_ * width_));
  }
  if (!all_finite(data_)) throw ValidationError("feature map contains non-finite entries");
}

std::span<const double> FeatureMap::channel(std::size_t c) const {
  const std::size_t plane = height_ * width_;
  return std::span<const double>(data_).subspan(c * plane, plane);
}

StyleVector::StyleVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty() || values_.size() % 2 != 0) {
    throw DimensionError("style vector length must be 2*C with C >= 1, got " +
                         std::to_string(values_.size()));
  }
  if (!all_finite(values_)) throw ValidationError("style vector contains non-finite entries");
  for (double s : stddevs()) {
    if (s < 0.0) throw ValidationError("style vector has a negative standard deviation");
  }
}

FusionWeights::FusionWeights(double l1, double l2) : lambda1(l1), lambda2(l2) {
  if (!std::isfinite(l1) || !std::isfinite(l2) || l1 < 0.0 || l2 < 0.0) {
    throw ValidationError("fusion weights must be finite and non-negative");
  }
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "cosine_similarity");
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DegenerateVectorError("cosine_similarity: zero-norm input");
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(a.values(), b.values());
}

StyleVector style_vector(const FeatureMap& map) {
  const std::size_t channels = map.channels();
  const auto count = static_cast<double>(map.height() * map.width());
  std::vector<double> out(2 * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto plane = map.channel(c);
    // Shifting by the first value keeps constant planes exact.
    const double shift = plane[0];
    double sum = 0.0;
    for (double v : plane) sum += v - shift;
    const double mean = shift + sum / count;
    double sq = 0.0;
    for (double v : plane) sq += (v - mean) * (v - mean);
    out[c] = mean;
    out[channels + c] = std::sqrt(sq / count);
  }
  return StyleVector(std::move(out));
}

double style_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size(), "style_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double style_distance(const StyleVector& a, const StyleVector& b) {
  return style_distance(a.values(), b.values());
}

EmbeddingVector fuse(const EmbeddingVector& background, const EmbeddingVector& retrieved,
                     FusionWeights weights) {
  require_same_length(background.dim(), retrieved.dim(), "fuse");
  std::vector<double> out(background.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = weights.lambda1 * background[i] + weights.lambda2 * retrieved[i];
  }
  return EmbeddingVector(std::move(out));
}

}  // namespace domainrag
