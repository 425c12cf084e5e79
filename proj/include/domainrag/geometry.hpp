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

// Pixel-space mechanics of foreground-preserving composition: box masks,
// resampling plans and their application to images, masks and boxes, and
// the final masked selection between original and repainted pixels.
//
// Coordinates are integer pixels with the origin at the top-left; a box
// (x, y, w, h) covers the half-open ranges [x, x+w) x [y, y+h).

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace domainrag {

// 8-bit RGB, row-major, channels interleaved.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer(int width, int height);  // zero-filled
  ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(int x, int y, int c) const {
    return pixels_[offset(x, y) + static_cast<std::size_t>(c)];
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels_[offset(x, y) + static_cast<std::size_t>(c)];
  }
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels;
  }

  bool operator==(const ImageBuffer&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  // Throws GeometryError unless the box is non-degenerate and lies inside a
  // width x height image.
  void validate(int width, int height) const;
  bool contains(int px, int py) const noexcept {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  bool operator==(const BoundingBox&) const = default;
};

// 1 = repaint (background), 0 = preserve (foreground).
class BinaryMask {
 public:
  BinaryMask(int width, int height, std::uint8_t fill);
  BinaryMask(int width, int height, std::vector<std::uint8_t> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  std::uint8_t at(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(x)];
  }
  std::size_t count_zeros() const noexcept;

  bool operator==(const BinaryMask&) const = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> values_;
};

// Positive rational scale factor.
struct Ratio {
  std::int64_t num = 1;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  Ratio reciprocal() const noexcept { return {den, num}; }
  bool operator==(const Ratio&) const = default;
};

enum class ResampleDirection { kNone, kUpsample, kDownsample };

enum class ResamplePolicy {
  kNone,             // never resample
  kUpsample1024,     // x2 unless both edges exceed 1024
  kLongestSide2048,  // power-of-two upsample until the longer edge exceeds 2048
  kIntegerEdge2800,  // integer downsample until both edges are <= 2800
};

std::string_view policy_name(ResamplePolicy policy);
// Throws ConfigError for an unknown name.
ResamplePolicy parse_policy(std::string_view name);

struct ResamplePlan {
  ResampleDirection direction = ResampleDirection::kNone;
  Ratio factor;
  ResamplePolicy policy = ResamplePolicy::kNone;

  // Undoes this plan: direction flipped, factor inverted.
  ResamplePlan inverse() const;
  bool operator==(const ResamplePlan&) const = default;
};

BinaryMask build_mask(int width, int height, std::span<const BoundingBox> boxes);

// 0 when both edges exceed 1024, 1 otherwise.
int needs_upsample(int width, int height) noexcept;
int needs_upsample(const ImageBuffer& image) noexcept;
// Downsampling after generation mirrors the upsampling indicator.
int needs_downsample(int width, int height) noexcept;
// 1 when applying `plan.inverse()` downsamples.
int downsample_indicator(const ResamplePlan& forward) noexcept;

ResamplePlan plan_resample(int width, int height, ResamplePolicy policy);
ResamplePlan plan_resample(const ImageBuffer& image, ResamplePolicy policy);

// round(size * factor), half away from zero.
int scaled_size(int size, Ratio factor);

// Bilinear resize. Destination pixel d samples source coordinate
// d * in / out, so integer upsampling keeps every source pixel on the grid
// and the matching integer downsample recovers it exactly.
ImageBuffer resize_bilinear(const ImageBuffer& image, int width, int height);
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

// Throws GeometryError if a scaled edge would fall below one pixel.
ImageBuffer apply_resample(const ImageBuffer& image, const ResamplePlan& plan);
BinaryMask apply_resample_mask(const BinaryMask& mask, const ResamplePlan& plan);

// Scales coordinates and sizes by the plan factor (sizes floored at 1).
BoundingBox transform_bbox(const BoundingBox& box, const ResamplePlan& plan);
BoundingBox inverse_transform_bbox(const BoundingBox& box, const ResamplePlan& plan);

// Original pixel where mask is 0, filled pixel where mask is 1.
// Throws DimensionError unless all three share dimensions.
ImageBuffer compose(const ImageBuffer& original, const BinaryMask& mask, const ImageBuffer& filled);

}  // namespace domainrag
