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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "domainrag/errors.hpp"
#include "domainrag/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace domainrag {
namespace {

using testing::Rng;

EmbeddingVector ev(std::vector<double> v) { return EmbeddingVector(std::move(v)); }

GaussianStats diagonal(const std::vector<double>& mean, const std::vector<double>& var) {
  const std::size_t d = mean.size();
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = var[i];
  return GaussianStats(mean, cov);
}

// Random symmetric PSD matrix A A^T with A of shape d x r.
std::vector<double> random_psd(Rng& rng, std::size_t d, std::size_t r) {
  std::vector<double> a(d * r);
  for (auto& x : a) x = rng.normal();
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < r; ++k) s += a[i * r + k] * a[j * r + k];
      out[i * d + j] = out[j * d + i] = s;
    }
  }
  return out;
}

TEST(FeatureSet, Errors) {
  EXPECT_THROW(FeatureSet({}), EmptyInputError);
  EXPECT_THROW(FeatureSet({ev({1, 0}), ev({1, 0, 0})}), DimensionError);
  EXPECT_EQ(FeatureSet({ev({1, 0}), ev({0, 1})}).dim(), 2u);
}

TEST(ClipI, Examples) {
  const auto target = ev({1, 0});
  EXPECT_EQ(clip_i(target, FeatureSet({target, target})), 1.0);
  EXPECT_EQ(clip_i(target, FeatureSet({target, ev({0, 1})})), 0.5);
  EXPECT_NEAR(clip_i(ev({1, 1}), FeatureSet({ev({1, 0})})), 0.70710678, 1e-8);
  EXPECT_THROW(clip_i(ev({1, 0, 0}), FeatureSet({target})), DimensionError);
}

TEST(ClipI, PermutationInvariant) {
  Rng rng(101);
  for (int t = 0; t < 50; ++t) {
    std::vector<EmbeddingVector> v;
    for (int i = 0; i < 7; ++i) v.push_back(rng.embedding(12));
    const auto target = rng.embedding(12);
    const double a = clip_i(target, FeatureSet(v));
    std::shuffle(v.begin(), v.end(), rng.engine());
    EXPECT_NEAR(clip_i(target, FeatureSet(v)), a, 1e-12);
  }
}

TEST(FitGaussian, Examples) {
  const auto g = fit_gaussian(FeatureSet({ev({0}), ev({2})}));
  EXPECT_EQ(g.mean()[0], 1.0);
  EXPECT_EQ(g.cov(0, 0), 1.0);
  const auto same = fit_gaussian(FeatureSet({ev({1, 2, 3}), ev({1, 2, 3})}));
  for (double c : same.covariance()) EXPECT_EQ(c, 0.0);
  EXPECT_THROW(fit_gaussian(FeatureSet({ev({1, 2})})), InsufficientSamplesError);
}

TEST(FitGaussian, MatchesBruteForcePopulationCovariance) {
  Rng rng(102);
  std::vector<EmbeddingVector> v;
  for (int i = 0; i < 30; ++i) v.push_back(rng.embedding(4));
  const auto g = fit_gaussian(FeatureSet(v));
  for (std::size_t a = 0; a < 4; ++a) {
    long double ma = 0, mb = 0;
    for (const auto& x : v) ma += x.values()[a];
    ma /= 30;
    EXPECT_NEAR(g.mean()[a], static_cast<double>(ma), 1e-12);
    for (std::size_t b = 0; b < 4; ++b) {
      mb = 0;
      for (const auto& x : v) mb += x.values()[b];
      mb /= 30;
      long double c = 0;
      for (const auto& x : v) c += (x.values()[a] - ma) * (x.values()[b] - mb);
      EXPECT_NEAR(g.cov(a, b), static_cast<double>(c / 30), 1e-12);
    }
  }
}

TEST(GaussianStats, Validation) {
  EXPECT_THROW(GaussianStats({0, 0}, {1, 0.5, 0.4, 1}), ValidationError);
  EXPECT_THROW(GaussianStats({0}, {-1}), ValidationError);
  EXPECT_THROW(GaussianStats({0, 0}, {1, 0, 0}), DimensionError);
  EXPECT_THROW(GaussianStats({NAN}, {1}), ValidationError);
}

TEST(Frechet, ScalarClosedForm) {
  Rng rng(103);
  for (int t = 0; t < 50; ++t) {
    const double m1 = rng.uniform(-10, 10), m2 = rng.uniform(-10, 10);
    const double v1 = rng.uniform(0, 25), v2 = rng.uniform(0, 25);
    EXPECT_NEAR(frechet_distance(GaussianStats({m1}, {v1}), GaussianStats({m2}, {v2})),
                oracle::frechet_1d(m1, v1, m2, v2), 1e-6);
  }
}

TEST(Frechet, IdenticalSetsAreZero) {
  Rng rng(104);
  for (int t = 0; t < 20; ++t) {
    std::vector<EmbeddingVector> v;
    for (int i = 0; i < 25; ++i) v.push_back(rng.embedding(16));
    const auto g = fit_gaussian(FeatureSet(v));
    EXPECT_LT(frechet_distance(g, g), 1e-8);
  }
}

TEST(Frechet, DiagonalSeparability) {
  Rng rng(105);
  for (int t = 0; t < 50; ++t) {
    const auto m1 = rng.vector(5, -3, 3), m2 = rng.vector(5, -3, 3);
    const auto v1 = rng.vector(5, 0, 4), v2 = rng.vector(5, 0, 4);
    double want = 0.0;
    for (int i = 0; i < 5; ++i) want += oracle::frechet_1d(m1[i], v1[i], m2[i], v2[i]);
    EXPECT_NEAR(frechet_distance(diagonal(m1, v1), diagonal(m2, v2)), want, 1e-7);
  }
}

// For 2 x 2 PSD S1, S2 the product S1 S2 has non-negative real eigenvalues,
// so tr sqrt(S1 S2) = sqrt(tr(S1 S2) + 2 sqrt(det(S1 S2))).
TEST(Frechet, TwoDimensionalTraceIdentity) {
  Rng rng(106);
  for (int t = 0; t < 100; ++t) {
    const auto s1 = random_psd(rng, 2, 3), s2 = random_psd(rng, 2, 3);
    const auto m1 = rng.vector(2), m2 = rng.vector(2);
    const double p00 = s1[0] * s2[0] + s1[1] * s2[2], p11 = s1[2] * s2[1] + s1[3] * s2[3];
    const double det = (s1[0] * s1[3] - s1[1] * s1[2]) * (s2[0] * s2[3] - s2[1] * s2[2]);
    const double cross = std::sqrt(p00 + p11 + 2.0 * std::sqrt(std::max(0.0, det)));
    const double dm = (m1[0] - m2[0]) * (m1[0] - m2[0]) + (m1[1] - m2[1]) * (m1[1] - m2[1]);
    const double want = dm + s1[0] + s1[3] + s2[0] + s2[3] - 2.0 * cross;
    EXPECT_NEAR(frechet_distance(GaussianStats(m1, s1), GaussianStats(m2, s2)), want, 1e-8 * (1 + want));
  }
}

TEST(Frechet, SymmetricAndNonNegative) {
  Rng rng(107);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = static_cast<std::size_t>(rng.integer(1, 12));
    const GaussianStats a(rng.vector(d), random_psd(rng, d, static_cast<std::size_t>(rng.integer(1, 14))));
    const GaussianStats b(rng.vector(d), random_psd(rng, d, static_cast<std::size_t>(rng.integer(1, 14))));
    const double ab = frechet_distance(a, b);
    EXPECT_NEAR(ab, frechet_distance(b, a), 1e-8 * (1 + ab));
    EXPECT_GE(ab, 0.0);
  }
}

TEST(Frechet, DimensionMismatch) {
  EXPECT_THROW(frechet_distance(GaussianStats({0}, {1}), GaussianStats({0, 0}, {1, 0, 0, 1})), DimensionError);
}

}  // namespace
}  // namespace domainrag
