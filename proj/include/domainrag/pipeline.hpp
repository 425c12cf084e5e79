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
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "domainrag/background_index.hpp"
#include "domainrag/config.hpp"
#include "domainrag/dataset.hpp"
#include "domainrag/errors.hpp"
#include "domainrag/gateway.hpp"

namespace domainrag {

// HTTP backends per configured endpoint, or one in-process FakeBackend for
// every capability when `fake` is set.
std::unique_ptr<ModelGateway> make_gateway(const PipelineConfig& config, bool fake);

// --- index-build -----------------------------------------------------------

// One record per dataset image (id = image id). Image refs are stored
// relative to the index file's directory. Nothing is written unless every
// image was encoded.
std::size_t run_index_build(const std::filesystem::path& dataset_path, const std::filesystem::path& index_path,
                            const PipelineConfig& config, ModelGateway& gateway);

// --- augment ---------------------------------------------------------------

struct AugmentFailure {
  ImageId support_id = 0;
  std::string stage;
  ErrorCode code = ErrorCode::kValidation;
  std::string message;
};

struct AugmentReport {
  SupportSet originals;
  std::vector<AugmentedSample> augmented;
  std::vector<AugmentFailure> failures;
  std::filesystem::path annotation_path;
};

// Full pipeline over every annotated image of the COCO file at
// `support_path`. Writes under `out_dir`:
//   <file_name>                 copies of the support images (support/<id>.png
//                               when file_name is absolute, climbs out of the
//                               tree or clashes with a generated folder)
//   inpainted/<id>.png          foreground-free backgrounds
//   augmented/<id>_<j>.png      augmented images
//   annotations.json            originals + augmented (COCO)
//   annotations.provenance.jsonl
//   failures.json               only when keep_going recorded failures
// Without keep_going the first failing support image (in file order) aborts
// the run with an error naming the stage and support id.
AugmentReport run_augment(const std::filesystem::path& support_path, const std::filesystem::path& index_path,
                          const std::filesystem::path& out_dir, const PipelineConfig& config,
                          ModelGateway& gateway, bool keep_going);

// --- retrieve --------------------------------------------------------------

struct RetrieveListing {
  RetrievalResult semantic;
  RetrievalResult reranked;
  std::vector<std::string> semantic_refs;
  std::vector<std::string> reranked_refs;
};

RetrieveListing run_retrieve(const std::filesystem::path& query_path, const std::filesystem::path& index_path,
                             const PipelineConfig& config, ModelGateway& gateway);
std::string retrieve_listing_json(const RetrieveListing& listing);
// FormatError on malformed input.
RetrieveListing parse_retrieve_listing(std::string_view json);

// --- metrics ---------------------------------------------------------------

struct MetricsReport {
  double clip_i = 0.0;
  std::optional<double> fid;
  std::string fid_note;  // why fid is missing
  std::size_t targets = 0;
  std::size_t generated = 0;
};

// `target` is a PNG file or a directory of PNGs; `generated_dir` holds PNGs.
MetricsReport run_metrics(const std::filesystem::path& target, const std::filesystem::path& generated_dir,
                          ModelGateway& gateway);
std::string metrics_json(const MetricsReport& report);

// --- episode ---------------------------------------------------------------

// Writes episode.json, support.json and query.json into `out_dir`. The COCO
// subsets keep only episode categories and point at the original image files.
// `fixed` loads a support list instead of sampling.
Episode run_episode(const std::filesystem::path& dataset_path, const EpisodeSpec& spec,
                    const std::optional<std::filesystem::path>& fixed, const std::filesystem::path& out_dir);

}  // namespace domainrag
