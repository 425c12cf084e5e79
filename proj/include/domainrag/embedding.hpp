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

// Numerical kernel shared by retrieval, generation and metrics: cosine
// similarity, channel-statistics style descriptors, style distance and
// weighted embedding fusion. Everything is computed in double precision.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace domainrag {

// Non-empty vector of finite reals.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const noexcept;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

// C x H x W activations, channel-major.
class FeatureMap {
 public:
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
             std::vector<double> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> channel(std::size_t c) const;

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t channels_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> data_;
};

// Layout [mu_1..mu_C, sigma_1..sigma_C].
class StyleVector {
 public:
  explicit StyleVector(std::vector<double> values);

  std::size_t channels() const noexcept { return values_.size() / 2; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> means() const noexcept {
    return std::span<const double>(values_).first(channels());
  }
  std::span<const double> stddevs() const noexcept {
    return std::span<const double>(values_).last(channels());
  }

  bool operator==(const StyleVector&) const = default;

 private:
  std::vector<double> values_;
};

struct FusionWeights {
  FusionWeights(double l1, double l2);

  double lambda1;
  double lambda2;
};

// <a,b> / (|a||b|), clamped to [-1, 1].
// Throws DimensionError on length mismatch, DegenerateVectorError on a zero
// vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Per-channel spatial mean and population standard deviation.
StyleVector style_vector(const FeatureMap& map);

// Euclidean distance between two style descriptors.
double style_distance(std::span<const double> a, std::span<const double> b);
double style_distance(const StyleVector& a, const StyleVector& b);

// lambda1 * background + lambda2 * retrieved, elementwise.
EmbeddingVector fuse(const EmbeddingVector& background,
                     const EmbeddingVector& retrieved, FusionWeights weights);

}  // namespace domainrag
