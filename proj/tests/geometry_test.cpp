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
#include <cstdlib>

#include <gtest/gtest.h>

#include "domainrag/errors.hpp"
#include "domainrag/geometry.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace domainrag {
namespace {

using testing::Rng;

ResamplePlan up(std::int64_t k) { return {ResampleDirection::kUpsample, {k, 1}, ResamplePolicy::kNone}; }
ResamplePlan down(std::int64_t k) { return {ResampleDirection::kDownsample, {1, k}, ResamplePolicy::kNone}; }

int max_coord_diff(const BoundingBox& a, const BoundingBox& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.w - b.w), std::abs(a.h - b.h)});
}

TEST(BuildMask, Examples) {
  const std::vector<BoundingBox> full{{0, 0, 7, 5}};
  EXPECT_EQ(build_mask(7, 5, full).count_zeros(), 35u);
  EXPECT_EQ(build_mask(7, 5, {}).count_zeros(), 0u);
  const std::vector<BoundingBox> one{{2, 2, 3, 3}};
  const auto mask = build_mask(10, 10, one);
  EXPECT_EQ(mask.count_zeros(), 9u);
  EXPECT_EQ(mask.at(2, 2), 0);
  EXPECT_EQ(mask.at(4, 4), 0);
  EXPECT_EQ(mask.at(5, 4), 1);
  EXPECT_EQ(mask.at(1, 2), 1);
}

TEST(BuildMask, Errors) {
  const std::vector<BoundingBox> outside{{8, 0, 3, 3}};
  EXPECT_THROW(build_mask(10, 10, outside), GeometryError);
  const std::vector<BoundingBox> negative{{-1, 0, 3, 3}};
  EXPECT_THROW(build_mask(10, 10, negative), GeometryError);
  const std::vector<BoundingBox> empty{{0, 0, 0, 3}};
  EXPECT_THROW(build_mask(10, 10, empty), GeometryError);
  EXPECT_THROW(build_mask(0, 10, {}), GeometryError);
}

TEST(BuildMask, ZeroCountEqualsUnionArea) {
  Rng rng(41);
  for (int t = 0; t < 500; ++t) {
    const int w = rng.integer(1, 256);
    const int h = rng.integer(1, 256);
    std::vector<BoundingBox> boxes(static_cast<std::size_t>(rng.integer(0, 6)));
    for (auto& b : boxes) b = rng.box(w, h);
    const auto mask = build_mask(w, h, boxes);
    EXPECT_EQ(mask.count_zeros(), oracle::union_area(w, h, boxes));
    for (auto v : mask.values()) ASSERT_LE(v, 1);
  }
}

TEST(NeedsUpsample, TruthTable) {
  EXPECT_EQ(needs_upsample(1025, 1025), 0);
  EXPECT_EQ(needs_upsample(1024, 1025), 1);
  EXPECT_EQ(needs_upsample(1025, 1024), 1);
  EXPECT_EQ(needs_upsample(1024, 1024), 1);
  EXPECT_EQ(needs_upsample(800, 600), 1);
  EXPECT_EQ(needs_upsample(2000, 1500), 0);
  EXPECT_EQ(needs_upsample(1024, 2000), 1);
  EXPECT_EQ(needs_upsample(ImageBuffer(3, 2)), 1);
}

TEST(NeedsUpsample, InverseIndicatorMirrorsForward) {
  Rng rng(42);
  for (int t = 0; t < 100; ++t) {
    const int w = rng.integer(1, 3000);
    const int h = rng.integer(1, 3000);
    const auto plan = plan_resample(w, h, ResamplePolicy::kUpsample1024);
    EXPECT_EQ(downsample_indicator(plan), needs_upsample(w, h));
    EXPECT_EQ(needs_downsample(w, h), needs_upsample(w, h));
  }
}

TEST(PlanResample, WorkedSizes) {
  const auto a = plan_resample(500, 400, ResamplePolicy::kLongestSide2048);
  EXPECT_EQ(a.direction, ResampleDirection::kUpsample);
  EXPECT_EQ(a.factor, (Ratio{8, 1}));
  const auto b = plan_resample(4032, 3024, ResamplePolicy::kIntegerEdge2800);
  EXPECT_EQ(b.direction, ResampleDirection::kDownsample);
  EXPECT_EQ(b.factor, (Ratio{1, 2}));
  EXPECT_EQ(scaled_size(4032, b.factor), 2016);
  EXPECT_EQ(scaled_size(3024, b.factor), 1512);
  const auto c = plan_resample(3000, 3000, ResamplePolicy::kUpsample1024);
  EXPECT_EQ(c.direction, ResampleDirection::kNone);
  EXPECT_EQ(c.factor, (Ratio{1, 1}));
  EXPECT_EQ(plan_resample(800, 600, ResamplePolicy::kUpsample1024).factor, (Ratio{2, 1}));
  EXPECT_EQ(plan_resample(2049, 10, ResamplePolicy::kLongestSide2048).direction, ResampleDirection::kNone);
  EXPECT_EQ(plan_resample(1024, 10, ResamplePolicy::kLongestSide2048).factor, (Ratio{4, 1}));
  EXPECT_EQ(plan_resample(2800, 2800, ResamplePolicy::kIntegerEdge2800).direction, ResampleDirection::kNone);
  EXPECT_EQ(plan_resample(9000, 100, ResamplePolicy::kIntegerEdge2800).factor, (Ratio{1, 4}));
  EXPECT_EQ(plan_resample(5, 5, ResamplePolicy::kNone).direction, ResampleDirection::kNone);
}

TEST(PlanResample, PoliciesMeetTheirRules) {
  Rng rng(43);
  for (int t = 0; t < 500; ++t) {
    const int w = rng.integer(1, 12000);
    const int h = rng.integer(1, 12000);
    const int longer = std::max(w, h);
    const auto ls = plan_resample(w, h, ResamplePolicy::kLongestSide2048);
    if (longer > 2048) {
      EXPECT_EQ(ls.direction, ResampleDirection::kNone);
    } else {
      const auto f = ls.factor.num;
      EXPECT_EQ(ls.factor.den, 1);
      EXPECT_EQ(f & (f - 1), 0);
      EXPECT_GT(longer * f, 2048);
      EXPECT_LE(longer * f / 2, 2048);
    }
    const auto ie = plan_resample(w, h, ResamplePolicy::kIntegerEdge2800);
    if (w <= 2800 && h <= 2800) {
      EXPECT_EQ(ie.direction, ResampleDirection::kNone);
    } else {
      const auto k = ie.factor.den;
      EXPECT_EQ(ie.factor.num, 1);
      EXPECT_GE(k, 2);
      EXPECT_LE(scaled_size(w, ie.factor), 2800);
      EXPECT_LE(scaled_size(h, ie.factor), 2800);
      if (k > 2) {
        const Ratio prev{1, k - 1};
        EXPECT_TRUE(scaled_size(w, prev) > 2800 || scaled_size(h, prev) > 2800);
      }
    }
  }
}

TEST(PolicyNames, RoundTrip) {
  for (auto p : {ResamplePolicy::kNone, ResamplePolicy::kUpsample1024, ResamplePolicy::kLongestSide2048,
                 ResamplePolicy::kIntegerEdge2800}) {
    EXPECT_EQ(parse_policy(policy_name(p)), p);
  }
  EXPECT_EQ(policy_name(ResamplePolicy::kUpsample1024), "upsample_1024");
  EXPECT_THROW(parse_policy("bicubic"), ConfigError);
}

TEST(PlanInverse, FlipsDirectionAndFactor) {
  const auto inv = up(8).inverse();
  EXPECT_EQ(inv.direction, ResampleDirection::kDownsample);
  EXPECT_EQ(inv.factor, (Ratio{1, 8}));
  EXPECT_EQ(inv.inverse(), up(8));
  const ResamplePlan none;
  EXPECT_EQ(none.inverse(), none);
}

TEST(ApplyResample, Examples) {
  Rng rng(44);
  const auto img = rng.image(5, 3);
  EXPECT_EQ(apply_resample(img, ResamplePlan{}), img);

  ImageBuffer constant(4, 4);
  std::fill(constant.pixels().begin(), constant.pixels().end(), std::uint8_t{137});
  const auto big = apply_resample(constant, up(2));
  EXPECT_EQ(big.width(), 8);
  EXPECT_EQ(big.height(), 8);
  for (auto p : big.pixels()) EXPECT_EQ(p, 137);

  ImageBuffer checker(4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      for (int c = 0; c < 3; ++c) checker.at(x, y, c) = ((x + y) % 2 == 0) ? 255 : 0;
    }
  }
  const auto back = apply_resample(apply_resample(checker, up(2)), down(2));
  ASSERT_EQ(back.width(), 4);
  for (std::size_t i = 0; i < back.pixels().size(); ++i) {
    EXPECT_LE(std::abs(int(back.pixels()[i]) - int(checker.pixels()[i])), 2);
  }
}

TEST(ApplyResample, IntegerUpThenDownIsExact) {
  Rng rng(45);
  for (int k : {2, 4, 8}) {
    const auto img = rng.image(rng.integer(1, 20), rng.integer(1, 20));
    EXPECT_EQ(apply_resample(apply_resample(img, up(k)), down(k)), img);
  }
}

TEST(ApplyResample, SizesAndErrors) {
  Rng rng(46);
  const auto img = rng.image(7, 5);
  const auto half = apply_resample(img, down(2));
  EXPECT_EQ(half.width(), 4);  // round(3.5) away from zero
  EXPECT_EQ(half.height(), 3);
  EXPECT_THROW(apply_resample(ImageBuffer(2, 2), down(8)), GeometryError);
  EXPECT_THROW(apply_resample_mask(BinaryMask(2, 2, 1), down(8)), GeometryError);
  const ResamplePlan bad{ResampleDirection::kUpsample, {1, 2}, ResamplePolicy::kNone};
  EXPECT_THROW(apply_resample(img, bad), GeometryError);
  const ResamplePlan zero{ResampleDirection::kUpsample, {0, 1}, ResamplePolicy::kNone};
  EXPECT_THROW(apply_resample(img, zero), GeometryError);
}

TEST(ApplyResampleMask, Examples) {
  const std::vector<BoundingBox> block{{3, 4, 3, 3}};
  const auto mask = build_mask(10, 10, block);
  EXPECT_EQ(apply_resample_mask(mask, ResamplePlan{}), mask);
  const auto big = apply_resample_mask(mask, up(2));
  const std::vector<BoundingBox> scaled{{6, 8, 6, 6}};
  EXPECT_EQ(big, build_mask(20, 20, scaled));
  for (int k : {2, 3, 5}) {
    const auto ones = apply_resample_mask(BinaryMask(9, 6, 1), down(k));
    EXPECT_EQ(ones.count_zeros(), 0u);
  }
}

TEST(ApplyResampleMask, BinaryAlphabet) {
  Rng rng(47);
  for (int t = 0; t < 200; ++t) {
    const auto mask = rng.mask(rng.integer(1, 40), rng.integer(1, 40));
    const auto plan = rng.coin() ? up(rng.integer(1, 4)) : down(rng.integer(1, 3));
    if (plan.factor == Ratio{1, 1}) continue;
    BinaryMask out(1, 1, 1);
    try {
      out = apply_resample_mask(mask, plan);
    } catch (const GeometryError&) {
      continue;
    }
    for (auto v : out.values()) ASSERT_LE(v, 1);
  }
}

TEST(TransformBbox, Examples) {
  const BoundingBox box{10, 10, 20, 20};
  EXPECT_EQ(transform_bbox(box, ResamplePlan{}), box);
  EXPECT_EQ(transform_bbox(box, up(2)), (BoundingBox{20, 20, 40, 40}));
  EXPECT_EQ(inverse_transform_bbox(BoundingBox{20, 20, 40, 40}, up(2)), box);
  EXPECT_EQ(transform_bbox(BoundingBox{0, 0, 1, 1}, down(8)), (BoundingBox{0, 0, 1, 1}));
  EXPECT_THROW(transform_bbox(BoundingBox{0, 0, 0, 1}, up(2)), GeometryError);
  EXPECT_THROW(transform_bbox(BoundingBox{-1, 0, 1, 1}, up(2)), GeometryError);
}

TEST(TransformBbox, UpsampleFirstRoundTripWithinOnePixel) {
  Rng rng(48);
  for (int k : {2, 4, 8}) {
    for (int t = 0; t < 1000; ++t) {
      const auto box = rng.box(2048, 2048);
      const auto back = inverse_transform_bbox(transform_bbox(box, up(k)), up(k));
      EXPECT_LE(max_coord_diff(box, back), 1) << k;
    }
  }
}

// Downsampling first discards sub-pixel position: a coordinate comes back to
// the nearest multiple of k, so the error bound grows to ceil(k/2). Sizes
// below k/2 are floored at one pixel and come back as exactly k.
TEST(TransformBbox, DownsampleFirstRoundTripBound) {
  Rng rng(49);
  for (int k : {2, 4, 8}) {
    const int bound = (k + 1) / 2;
    for (int t = 0; t < 1000; ++t) {
      const auto box = rng.box(rng.coin() ? 2048 : 16, 2048);
      const auto back = inverse_transform_bbox(transform_bbox(box, down(k)), down(k));
      EXPECT_LE(std::abs(back.x - box.x), bound);
      EXPECT_LE(std::abs(back.y - box.y), bound);
      if (2 * box.w < k) {
        EXPECT_EQ(back.w, k);
      } else {
        EXPECT_LE(std::abs(back.w - box.w), bound);
      }
      if (2 * box.h < k) {
        EXPECT_EQ(back.h, k);
      } else {
        EXPECT_LE(std::abs(back.h - box.h), bound);
      }
    }
  }
}

TEST(Compose, Examples) {
  Rng rng(50);
  const auto original = rng.image(16, 16);
  const auto filled = rng.image(16, 16);
  EXPECT_EQ(compose(original, BinaryMask(16, 16, 0), filled), original);
  EXPECT_EQ(compose(original, BinaryMask(16, 16, 1), filled), filled);
  const auto mask = rng.mask(16, 16);
  const auto out = compose(original, mask, filled);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const auto& src = mask.at(x, y) == 0 ? original : filled;
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(x, y, c), src.at(x, y, c));
    }
  }
  EXPECT_THROW(compose(original, BinaryMask(15, 16, 0), filled), DimensionError);
  EXPECT_THROW(compose(original, mask, rng.image(16, 15)), DimensionError);
}

TEST(Compose, ForegroundIsBitExact) {
  Rng rng(51);
  for (int t = 0; t < 200; ++t) {
    const int w = rng.integer(1, 64);
    const int h = rng.integer(1, 64);
    const auto original = rng.image(w, h);
    const auto mask = rng.mask(w, h);
    const auto out = compose(original, mask, rng.image(w, h));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (mask.at(x, y) != 0) continue;
        for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), original.at(x, y, c));
      }
    }
  }
}

}  // namespace
}  // namespace domainrag
