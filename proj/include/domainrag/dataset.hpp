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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "domainrag/gateway.hpp"
#include "domainrag/geometry.hpp"

namespace domainrag {

using ImageId = std::uint64_t;
using CategoryId = std::uint64_t;

struct ImageInfo {
  ImageId id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  bool operator==(const ImageInfo&) const = default;
};

struct Annotation {
  std::uint64_t id = 0;
  ImageId image_id = 0;
  CategoryId category_id = 0;
  BoundingBox bbox;
  bool operator==(const Annotation&) const = default;
};

struct Category {
  CategoryId id = 0;
  std::string name;
  bool operator==(const Category&) const = default;
};

// A COCO-style dataset. Boxes are integer pixel boxes; fractional boxes are
// widened to the enclosing integer box at load time.
class DetectionDataset {
 public:
  DetectionDataset() = default;
  // Throws ValidationError on duplicate ids, dangling references or boxes
  // outside their image.
  DetectionDataset(std::vector<ImageInfo> images, std::vector<Annotation> annotations,
                   std::vector<Category> categories);

  const std::vector<ImageInfo>& images() const noexcept { return images_; }
  const std::vector<Annotation>& annotations() const noexcept { return annotations_; }
  const std::vector<Category>& categories() const noexcept { return categories_; }

  const ImageInfo* find_image(ImageId id) const;
  std::vector<const Annotation*> annotations_for(ImageId id) const;
  // Ascending image ids of images holding at least one box of `category`.
  std::vector<ImageId> images_with(CategoryId category) const;

  bool operator==(const DetectionDataset&) const = default;

 private:
  std::vector<ImageInfo> images_;
  std::vector<Annotation> annotations_;
  std::vector<Category> categories_;
};

DetectionDataset parse_coco(std::string_view text);
// FormatError on unparsable JSON or schema violations, ValidationError on
// dangling ids and out-of-bounds boxes, IoError if unreadable.
DetectionDataset load_coco(const std::filesystem::path& path);
std::string dump_coco(const DetectionDataset& dataset);
void write_coco(const DetectionDataset& dataset, const std::filesystem::path& path);

struct LabeledBox {
  BoundingBox box;
  CategoryId category_id = 0;
  bool operator==(const LabeledBox&) const = default;
};

struct SupportSample {
  ImageId id = 0;
  std::string image_path;  // as written in the annotation file
  int width = 0;
  int height = 0;
  std::vector<LabeledBox> boxes;  // never empty
  bool operator==(const SupportSample&) const = default;
};

using SupportSet = std::vector<SupportSample>;

struct EpisodeSpec {
  int n_way = 1;
  int k_shot = 1;
  std::uint64_t seed = 0;
};

struct SupportEntry {
  CategoryId category_id = 0;
  ImageId image_id = 0;
  bool operator==(const SupportEntry&) const = default;
};

struct Episode {
  std::vector<CategoryId> categories;  // in sampling order
  std::vector<SupportEntry> support;   // n_way * k_shot entries, grouped by category
  std::vector<ImageId> query_image_ids;  // ascending, disjoint from support images

  std::vector<ImageId> support_image_ids() const;  // ascending, deduplicated
  bool operator==(const Episode&) const = default;
};

// Seeded N-way K-shot sampling. A category is eligible when at least K
// images contain it; an image may serve several categories.
// ValidationError if N exceeds the category count or N, K < 1;
// InsufficientDataError if fewer than N categories are eligible.
Episode sample_episode(const DetectionDataset& dataset, const EpisodeSpec& spec);

// Fixed support lists: {"support": [{"category_id", "image_id"}, ...]} with
// an optional "query_image_ids" array. Without it the query pool is derived
// as in sample_episode.
Episode parse_episode(const DetectionDataset& dataset, std::string_view text);
Episode load_episode(const DetectionDataset& dataset, const std::filesystem::path& path);
std::string dump_episode(const Episode& episode);

// One sample per distinct support image, keeping only boxes of the episode
// categories.
SupportSet episode_support(const DetectionDataset& dataset, const Episode& episode);
// Every image with at least one box becomes a sample (all boxes kept).
SupportSet all_samples(const DetectionDataset& dataset);
// Sub-dataset restricted to `image_ids` and to annotations of `categories`
// (all categories when empty).
DetectionDataset subset(const DetectionDataset& dataset, const std::vector<ImageId>& image_ids,
                        const std::vector<CategoryId>& categories = {});

struct Provenance {
  ImageId source_sample_id = 0;
  std::uint64_t background_record_id = 0;
  std::string background_source;  // "database" or "inpainted_support"
  int variant = 0;                // j in [0, n)
  std::uint64_t seed = 0;
  GenerationParams generator_params;
  GenerationParams filler_params;
  std::string resample_policy;
  std::string config_hash;
  bool operator==(const Provenance&) const = default;
};

struct AugmentedSample {
  ImageId id = 0;
  std::string image_path;
  int width = 0;
  int height = 0;
  std::vector<LabeledBox> boxes;
  Provenance provenance;
  bool operator==(const AugmentedSample&) const = default;
};

// Per-class sample counts: a sample counts once for every class it holds.
std::map<CategoryId, std::size_t> per_class_counts(const SupportSet& support);

// Appends the generated samples to the originals. Requires exactly `n`
// generated samples per original (AccountingError) whose provenance points
// at an original and whose boxes equal that original's (ValidationError).
SupportSet expand_support(const SupportSet& support, const std::vector<AugmentedSample>& generated,
                          int n);

std::filesystem::path provenance_path(const std::filesystem::path& annotation_path);

// Writes a COCO file holding originals and augmented images (annotation ids
// renumbered from 1) plus the JSON-lines provenance sidecar, one line per
// augmented image. ValidationError on colliding image ids.
void emit_coco(const SupportSet& originals, const std::vector<AugmentedSample>& augmented,
               const std::vector<Category>& categories, const std::filesystem::path& path);

std::string provenance_line(const AugmentedSample& sample);
AugmentedSample parse_provenance_line(std::string_view line);
std::vector<AugmentedSample> load_provenance(const std::filesystem::path& path);

}  // namespace domainrag
