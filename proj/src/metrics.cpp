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

#include "domainrag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "domainrag/errors.hpp"

namespace domainrag {
namespace {

constexpr double kEigenFloor = -1e-8;

using Matrix = Eigen::MatrixXd;

Matrix to_matrix(const GaussianStats& g) {
  const auto d = static_cast<Eigen::Index>(g.dim());
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      m(i, j) = g.cov(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return m;
}

Eigen::VectorXd clamped_eigenvalues(const Eigen::VectorXd& values, const char* what) {
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out(i))) throw NumericalError(std::string(what) + ": non-finite eigenvalue");
    if (out(i) < kEigenFloor) {
      throw NumericalError(std::string(what) + ": eigenvalue " + std::to_string(out(i)) +
                           " is not positive semi-definite");
    }
    out(i) = std::max(out(i), 0.0);
  }
  return out;
}

}  // namespace

FeatureSet::FeatureSet(std::vector<EmbeddingVector> vectors) : vectors_(std::move(vectors)) {
  if (vectors_.empty()) throw EmptyInputError("feature set is empty");
  for (const auto& v : vectors_) {
    if (v.dim() != vectors_.front().dim()) {
      throw DimensionError("feature set mixes dims " + std::to_string(vectors_.front().dim()) + " and " +
                           std::to_string(v.dim()));
    }
  }
}

GaussianStats::GaussianStats(std::vector<double> mean, std::vector<double> covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const std::size_t d = mean_.size();
  if (d == 0) throw ValidationError("gaussian has zero dimension");
  if (covariance_.size() != d * d) {
    throw DimensionError("covariance has " + std::to_string(covariance_.size()) + " entries, expected " +
                          std::to_string(d * d));
  }
  for (double v : mean_) {
    if (!std::isfinite(v)) throw ValidationError("mean is not finite");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!(cov(i, i) >= 0.0)) throw ValidationError("covariance diagonal is negative");
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(cov(i, j))) throw ValidationError("covariance is not finite");
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-9) throw ValidationError("covariance is not symmetric");
    }
  }
}

double clip_i(const EmbeddingVector& target, const FeatureSet& generated) {
  if (target.dim() != generated.dim()) {
    throw DimensionError("target dim " + std::to_string(target.dim()) + " != generated dim " +
                         std::to_string(generated.dim()));
  }
  double sum = 0.0;
  for (const auto& g : generated.vectors()) sum += cosine_similarity(target, g);
  return std::clamp(sum / static_cast<double>(generated.size()), -1.0, 1.0);
}

GaussianStats fit_gaussian(const FeatureSet& features) {
  const std::size_t n = features.size();
  if (n < 2) {
    throw InsufficientSamplesError("a gaussian fit needs at least 2 samples, got " + std::to_string(n));
  }
  const std::size_t d = features.dim();
  std::vector<double> mean(d, 0.0);
  for (const auto& v : features.vectors()) {
    const auto x = v.values();
    for (std::size_t i = 0; i < d; ++i) mean[i] += x[i];
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<double> cov(d * d, 0.0);
  std::vector<double> centered(d);
  for (const auto& v : features.vectors()) {
    const auto x = v.values();
    for (std::size_t i = 0; i < d; ++i) centered[i] = x[i] - mean[i];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) cov[i * d + j] += centered[i] * centered[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov[i * d + j] /= static_cast<double>(n);
      cov[j * d + i] = cov[i * d + j];
    }
  }
  return GaussianStats(std::move(mean), std::move(cov));
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("gaussian dims differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double diff = a.mean()[i] - b.mean()[i];
    mean_term += diff * diff;
  }

  const Matrix s1 = to_matrix(a);
  const Matrix s2 = to_matrix(b);

  Eigen::SelfAdjointEigenSolver<Matrix> eig1(s1);
  if (eig1.info() != Eigen::Success) throw NumericalError("eigendecomposition of the first covariance failed");
  const Eigen::VectorXd l1 = clamped_eigenvalues(eig1.eigenvalues(), "first covariance");
  Eigen::SelfAdjointEigenSolver<Matrix> eig2(s2, Eigen::EigenvaluesOnly);
  if (eig2.info() != Eigen::Success) throw NumericalError("eigendecomposition of the second covariance failed");
  clamped_eigenvalues(eig2.eigenvalues(), "second covariance");

  const Matrix root1 = eig1.eigenvectors() * l1.cwiseSqrt().asDiagonal() * eig1.eigenvectors().transpose();
  Matrix product = root1 * s2 * root1;
  product = 0.5 * (product + product.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(product, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the covariance product failed");
  const double cross = clamped_eigenvalues(eig.eigenvalues(), "covariance product").cwiseSqrt().sum();

  const double result = mean_term + s1.trace() + s2.trace() - 2.0 * cross;
  if (!std::isfinite(result)) throw NumericalError("frechet distance is not finite");
  return std::max(result, 0.0);
}

}  // namespace domainrag
