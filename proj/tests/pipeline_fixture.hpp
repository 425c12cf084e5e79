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

// End-to-end workspace: a background database, a support set and a built
// index, all written under one temporary directory.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "domainrag/codec.hpp"
#include "domainrag/config.hpp"
#include "domainrag/file_util.hpp"
#include "domainrag/pipeline.hpp"
#include "test_util.hpp"

namespace domainrag::testing {

struct Workspace {
  explicit Workspace(std::uint64_t seed, int database_images = 10, int support_images = 5) : rng(seed) {
    config.declared = {32, 32, 8};
    SyntheticSpec db_spec;
    db_spec.images = database_images;
    database = write_synthetic_dataset(dir / "db", rng, db_spec);
    SyntheticSpec support_spec;
    support_spec.images = support_images;
    support_spec.categories = 2;
    support = write_synthetic_dataset(dir / "support", rng, support_spec);
    auto gateway = make_gateway(config, true);
    run_index_build(database_path(), index_path(), config, *gateway);
  }

  std::filesystem::path database_path() const { return dir / "db" / "annotations.json"; }
  std::filesystem::path support_path() const { return dir / "support" / "annotations.json"; }
  std::filesystem::path index_path() const { return dir / "index" / "db.idx"; }

  AugmentReport augment(const std::filesystem::path& out, const PipelineConfig& c, bool keep_going = false) const {
    auto gateway = make_gateway(c, true);
    return run_augment(support_path(), index_path(), out, c, *gateway, keep_going);
  }

  Rng rng;
  TempDir dir;
  PipelineConfig config;
  DetectionDataset database;
  DetectionDataset support;
};

// Relative path -> file bytes for every regular file below `root`.
inline std::map<std::string, Bytes> snapshot(const std::filesystem::path& root) {
  std::map<std::string, Bytes> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      out[entry.path().lexically_relative(root).generic_string()] = read_file_bytes(entry.path());
    }
  }
  return out;
}

// True when every pixel inside `boxes` matches `source`.
inline bool boxes_identical(const ImageBuffer& source, const ImageBuffer& output,
                            const std::vector<LabeledBox>& boxes) {
  if (source.width() != output.width() || source.height() != output.height()) return false;
  for (const auto& b : boxes) {
    for (int y = b.box.y; y < b.box.y + b.box.h; ++y) {
      for (int x = b.box.x; x < b.box.x + b.box.w; ++x) {
        for (int c = 0; c < 3; ++c) {
          if (source.at(x, y, c) != output.at(x, y, c)) return false;
        }
      }
    }
  }
  return true;
}

}  // namespace domainrag::testing
