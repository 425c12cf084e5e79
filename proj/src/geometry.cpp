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

#include "domainrag/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "domainrag/errors.hpp"

namespace domainrag {
namespace {

constexpr int kUpsampleThreshold = 1024;
constexpr int kLongestSideTarget = 2048;
constexpr int kMaxEdge = 2800;

void require_extent(int width, int height, const char* what) {
  if (width < 1 || height < 1) {
    throw GeometryError(std::string(what) + ": extent must be positive, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
}

// round(value * num / den) for non-negative value, half rounds up.
std::int64_t round_scaled(std::int64_t value, Ratio f) {
  return (2 * value * f.num + f.den) / (2 * f.den);
}

void validate_plan(const ResamplePlan& plan) {
  if (plan.factor.num <= 0 || plan.factor.den <= 0) {
    throw GeometryError("resample factor must be positive");
  }
  const bool consistent =
      (plan.direction == ResampleDirection::kNone && plan.factor.num == plan.factor.den) ||
      (plan.direction == ResampleDirection::kUpsample && plan.factor.num > plan.factor.den) ||
      (plan.direction == ResampleDirection::kDownsample && plan.factor.num < plan.factor.den);
  if (!consistent) {
    throw GeometryError("resample direction does not match factor");
  }
}

std::uint8_t round_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height) : width_(width), height_(height) {
  require_extent(width, height, "ImageBuffer");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels, 0);
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  require_extent(width, height, "ImageBuffer");
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels;
  if (pixels_.size() != expected) {
    throw DimensionError("ImageBuffer: expected " + std::to_string(expected) + " bytes, got " +
                         std::to_string(pixels_.size()));
  }
}

void BoundingBox::validate(int width, int height) const {
  if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > width || y + h > height) {
    throw GeometryError("box (" + std::to_string(x) + "," + std::to_string(y) + "," +
                        std::to_string(w) + "," + std::to_string(h) + ") invalid for " +
                        std::to_string(width) + "x" + std::to_string(height) + " image");
  }
}

BinaryMask::BinaryMask(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  require_extent(width, height, "BinaryMask");
  if (fill > 1) throw ValidationError("mask values must be 0 or 1");
  values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> values)
    : width_(width), height_(height), values_(std::move(values)) {
  require_extent(width, height, "BinaryMask");
  if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionError("BinaryMask: value count does not match extent");
  }
  if (std::any_of(values_.begin(), values_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw ValidationError("mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count_zeros() const noexcept {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{0}));
}

std::string_view policy_name(ResamplePolicy policy) {
  switch (policy) {
    case ResamplePolicy::kNone: return "none";
    case ResamplePolicy::kUpsample1024: return "upsample_1024";
    case ResamplePolicy::kLongestSide2048: return "longest_side_2048";
    case ResamplePolicy::kIntegerEdge2800: return "integer_edge_2800";
  }
  return "none";
}

ResamplePolicy parse_policy(std::string_view name) {
  for (auto p : {ResamplePolicy::kNone, ResamplePolicy::kUpsample1024, ResamplePolicy::kLongestSide2048,
                 ResamplePolicy::kIntegerEdge2800}) {
    if (policy_name(p) == name) return p;
  }
  throw ConfigError("unknown resample policy '" + std::string(name) + "'");
}

ResamplePlan ResamplePlan::inverse() const {
  ResamplePlan out = *this;
  out.factor = factor.reciprocal();
  switch (direction) {
    case ResampleDirection::kUpsample: out.direction = ResampleDirection::kDownsample; break;
    case ResampleDirection::kDownsample: out.direction = ResampleDirection::kUpsample; break;
    case ResampleDirection::kNone: break;
  }
  return out;
}

BinaryMask build_mask(int width, int height, std::span<const BoundingBox> boxes) {
  require_extent(width, height, "build_mask");
  std::vector<std::uint8_t> values(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 1);
  for (const auto& box : boxes) {
    box.validate(width, height);
    for (int y = box.y; y < box.y + box.h; ++y) {
      auto row = values.begin() + static_cast<std::ptrdiff_t>(y) * width;
      std::fill(row + box.x, row + box.x + box.w, std::uint8_t{0});
    }
  }
  return BinaryMask(width, height, std::move(values));
}

int needs_upsample(int width, int height) noexcept {
  return (width > kUpsampleThreshold && height > kUpsampleThreshold) ? 0 : 1;
}

int needs_upsample(const ImageBuffer& image) noexcept {
  return needs_upsample(image.width(), image.height());
}

int needs_downsample(int width, int height) noexcept { return needs_upsample(width, height); }

int downsample_indicator(const ResamplePlan& forward) noexcept {
  return forward.inverse().direction == ResampleDirection::kDownsample ? 1 : 0;
}

int scaled_size(int size, Ratio factor) {
  return static_cast<int>(round_scaled(size, factor));
}

ResamplePlan plan_resample(int width, int height, ResamplePolicy policy) {
  require_extent(width, height, "plan_resample");
  ResamplePlan plan;
  plan.policy = policy;
  switch (policy) {
    case ResamplePolicy::kNone:
      break;
    case ResamplePolicy::kUpsample1024:
      if (needs_upsample(width, height) == 1) {
        plan.direction = ResampleDirection::kUpsample;
        plan.factor = {2, 1};
      }
      break;
    case ResamplePolicy::kLongestSide2048: {
      const std::int64_t longer = std::max(width, height);
      if (longer <= kLongestSideTarget) {
        std::int64_t f = 2;
        while (longer * f <= kLongestSideTarget) f *= 2;
        plan.direction = ResampleDirection::kUpsample;
        plan.factor = {f, 1};
      }
      break;
    }
    case ResamplePolicy::kIntegerEdge2800:
      if (width > kMaxEdge || height > kMaxEdge) {
        std::int64_t k = 2;
        while (scaled_size(width, {1, k}) > kMaxEdge || scaled_size(height, {1, k}) > kMaxEdge) ++k;
        plan.direction = ResampleDirection::kDownsample;
        plan.factor = {1, k};
      }
      break;
  }
  return plan;
}

ResamplePlan plan_resample(const ImageBuffer& image, ResamplePolicy policy) {
  return plan_resample(image.width(), image.height(), policy);
}

ImageBuffer resize_bilinear(const ImageBuffer& image, int width, int height) {
  require_extent(width, height, "resize_bilinear");
  const int in_w = image.width();
  const int in_h = image.height();
  if (width == in_w && height == in_h) return image;

  // Precompute horizontal taps once per column.
  std::vector<int> x0(static_cast<std::size_t>(width));
  std::vector<int> x1(static_cast<std::size_t>(width));
  std::vector<double> fx(static_cast<std::size_t>(width));
  for (int dx = 0; dx < width; ++dx) {
    const double sx = static_cast<double>(dx) * in_w / width;
    const int lo = std::min(static_cast<int>(sx), in_w - 1);
    x0[dx] = lo;
    x1[dx] = std::min(lo + 1, in_w - 1);
    fx[dx] = sx - lo;
  }

  ImageBuffer out(width, height);
  for (int dy = 0; dy < height; ++dy) {
    const double sy = static_cast<double>(dy) * in_h / height;
    const int y0 = std::min(static_cast<int>(sy), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double fy = sy - y0;
    for (int dx = 0; dx < width; ++dx) {
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        const double top = image.at(x0[dx], y0, c) * (1.0 - fx[dx]) + image.at(x1[dx], y0, c) * fx[dx];
        const double bottom = image.at(x0[dx], y1, c) * (1.0 - fx[dx]) + image.at(x1[dx], y1, c) * fx[dx];
        out.at(dx, dy, c) = round_pixel(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  require_extent(width, height, "resize_nearest");
  if (width == mask.width() && height == mask.height()) return mask;
  std::vector<std::uint8_t> values(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int dy = 0; dy < height; ++dy) {
    const int sy = static_cast<int>(static_cast<std::int64_t>(dy) * mask.height() / height);
    for (int dx = 0; dx < width; ++dx) {
      const int sx = static_cast<int>(static_cast<std::int64_t>(dx) * mask.width() / width);
      values[static_cast<std::size_t>(dy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(dx)] =
          mask.at(sx, sy);
    }
  }
  return BinaryMask(width, height, std::move(values));
}

ImageBuffer apply_resample(const ImageBuffer& image, const ResamplePlan& plan) {
  validate_plan(plan);
  if (plan.direction == ResampleDirection::kNone) return image;
  const int w = scaled_size(image.width(), plan.factor);
  const int h = scaled_size(image.height(), plan.factor);
  if (w < 1 || h < 1) throw GeometryError("resample would produce an empty image");
  return resize_bilinear(image, w, h);
}

BinaryMask apply_resample_mask(const BinaryMask& mask, const ResamplePlan& plan) {
  validate_plan(plan);
  if (plan.direction == ResampleDirection::kNone) return mask;
  const int w = scaled_size(mask.width(), plan.factor);
  const int h = scaled_size(mask.height(), plan.factor);
  if (w < 1 || h < 1) throw GeometryError("resample would produce an empty mask");
  return resize_nearest(mask, w, h);
}

BoundingBox transform_bbox(const BoundingBox& box, const ResamplePlan& plan) {
  validate_plan(plan);
  if (box.x < 0 || box.y < 0 || box.w < 1 || box.h < 1) {
    throw GeometryError("cannot transform a degenerate box");
  }
  if (plan.direction == ResampleDirection::kNone) return box;
  const Ratio f = plan.factor;
  return BoundingBox{static_cast<int>(round_scaled(box.x, f)), static_cast<int>(round_scaled(box.y, f)),
                     std::max(1, static_cast<int>(round_scaled(box.w, f))),
                     std::max(1, static_cast<int>(round_scaled(box.h, f)))};
}

BoundingBox inverse_transform_bbox(const BoundingBox& box, const ResamplePlan& plan) {
  return transform_bbox(box, plan.inverse());
}

ImageBuffer compose(const ImageBuffer& original, const BinaryMask& mask, const ImageBuffer& filled) {
  if (original.width() != mask.width() || original.height() != mask.height() ||
      filled.width() != original.width() || filled.height() != original.height()) {
    throw DimensionError("compose: image, mask and fill must share dimensions");
  }
  ImageBuffer out = filled;
  auto dst = out.pixels();
  const auto src = original.pixels();
  const auto m = mask.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) {
      const std::size_t o = i * ImageBuffer::kChannels;
      dst[o] = src[o];
      dst[o + 1] = src[o + 1];
      dst[o + 2] = src[o + 2];
    }
  }
  return out;
}

}  // namespace domainrag
