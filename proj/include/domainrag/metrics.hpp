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

#include <cstddef>
#include <span>
#include <vector>

#include "domainrag/embedding.hpp"

namespace domainrag {

// Non-empty collection of equal-length embeddings.
class FeatureSet {
 public:
  // EmptyInputError when empty, DimensionError on mixed lengths.
  explicit FeatureSet(std::vector<EmbeddingVector> vectors);

  std::size_t size() const noexcept { return vectors_.size(); }
  std::size_t dim() const noexcept { return vectors_.front().dim(); }
  const std::vector<EmbeddingVector>& vectors() const noexcept { return vectors_; }

 private:
  std::vector<EmbeddingVector> vectors_;
};

class GaussianStats {
 public:
  // `covariance` is row-major D x D (DimensionError otherwise). ValidationError
  // unless it is symmetric within 1e-9 with a non-negative diagonal and
  // everything is finite.
  GaussianStats(std::vector<double> mean, std::vector<double> covariance);

  std::size_t dim() const noexcept { return mean_.size(); }
  std::span<const double> mean() const noexcept { return mean_; }
  std::span<const double> covariance() const noexcept { return covariance_; }
  double cov(std::size_t i, std::size_t j) const { return covariance_[i * mean_.size() + j]; }

 private:
  std::vector<double> mean_;
  std::vector<double> covariance_;
};

// Mean cosine similarity of every generated vector to the target.
double clip_i(const EmbeddingVector& target, const FeatureSet& generated);

// Sample mean and population covariance. InsufficientSamplesError below two
// vectors.
GaussianStats fit_gaussian(const FeatureSet& features);

// Squared Frechet distance between two Gaussians. The cross term is the trace
// of sqrt(S1^1/2 S2 S1^1/2), computed by symmetric eigendecomposition.
// Eigenvalues in [-1e-8, 0) are treated as zero, anything lower raises
// NumericalError.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

}  // namespace domainrag
