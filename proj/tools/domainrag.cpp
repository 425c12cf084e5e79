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

// Command-line front end.
//
//   domainrag index-build --dataset coco.json --output db.idx
//   domainrag augment --support support.json --index db.idx --output out/
//   domainrag retrieve --query img.png --index db.idx
//   domainrag metrics --target target.png --generated out/augmented
//   domainrag episode --dataset coco.json --n-way 3 --k-shot 5 --output ep/
//
// Exit codes: 0 success, 2 validation or usage error, 3 backend failure,
// 4 partial failure under --keep-going.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "domainrag/config.hpp"
#include "domainrag/errors.hpp"
#include "domainrag/file_util.hpp"
#include "domainrag/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace domainrag;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;
constexpr int kExitPartial = 4;

struct Shared {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool fake_backends = false;
  bool keep_going = false;

  PipelineConfig resolve() const {
    ConfigSources sources;
    if (!config.empty()) sources.file = fs::path(config);
    if (!preset.empty()) sources.preset = preset;
    sources.seed = seed;
    sources.workers = workers;
    if (const char* env = std::getenv("DOMAINRAG_ENDPOINTS")) sources.endpoint_override = std::string(env);
    return resolve_config(sources);
  }
};

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(output, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-guided compositional augmentation for few-shot detection"};
  app.require_subcommand(1);
  app.fallthrough();

  Shared shared;
  app.add_option("--config", shared.config, "Config file (key = value lines)");
  app.add_option("--preset", shared.preset, "Domain preset (fish, dior, artaxor, clipart1k, neu-det, nwpu-vhr10, camouflage, uodd)");
  app.add_option("--seed", shared.seed, "Global seed");
  app.add_option("--workers", shared.workers, "Support images processed concurrently");
  app.add_flag("--fake-backends", shared.fake_backends, "Use deterministic in-process model fakes");
  app.add_flag("--keep-going", shared.keep_going, "Collect per-image failures instead of aborting");

  std::string dataset, output, support, index, query, target, generated, fixed;
  int n_way = 1;
  int k_shot = 1;

  auto* build = app.add_subcommand("index-build", "Encode a COCO dataset into a background index");
  build->add_option("--dataset", dataset, "COCO annotation file")->required();
  build->add_option("--output", output, "Index file to write")->required();

  auto* augment = app.add_subcommand("augment", "Augment every annotated image of a support set");
  augment->add_option("--support", support, "COCO file of the support set")->required();
  augment->add_option("--index", index, "Background index")->required();
  augment->add_option("--output", output, "Output directory")->required();

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Show the two-stage ranking for one image");
  retrieve_cmd->add_option("--query", query, "Query PNG")->required();
  retrieve_cmd->add_option("--index", index, "Background index")->required();
  retrieve_cmd->add_option("--output", output, "Write JSON here instead of stdout");

  auto* metrics = app.add_subcommand("metrics", "CLIP-I and FID of generated images");
  metrics->add_option("--target", target, "Target PNG or directory of PNGs")->required();
  metrics->add_option("--generated", generated, "Directory of generated PNGs")->required();
  metrics->add_option("--output", output, "Write JSON here instead of stdout");

  auto* episode = app.add_subcommand("episode", "Sample or load an N-way K-shot episode");
  episode->add_option("--dataset", dataset, "COCO annotation file")->required();
  episode->add_option("--n-way", n_way, "Categories per episode");
  episode->add_option("--k-shot", k_shot, "Images per category");
  episode->add_option("--fixed", fixed, "Fixed support list instead of sampling");
  episode->add_option("--output", output, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const PipelineConfig config = shared.resolve();

    if (*build) {
      auto gateway = make_gateway(config, shared.fake_backends);
      const std::size_t count = run_index_build(dataset, output, config, *gateway);
      std::cerr << "indexed " << count << " images into " << output << "\n";
    } else if (*augment) {
      auto gateway = make_gateway(config, shared.fake_backends);
      const AugmentReport report = run_augment(support, index, output, config, *gateway, shared.keep_going);
      std::cerr << "augmented " << report.originals.size() - report.failures.size() << " of "
                << report.originals.size() << " support images into " << report.augmented.size()
                << " outputs; annotations at " << report.annotation_path.string() << "\n";
      if (!report.failures.empty()) {
        for (const auto& f : report.failures) {
          std::cerr << "failed: support " << f.support_id << ", stage " << f.stage << ": " << f.message << "\n";
        }
        return kExitPartial;
      }
    } else if (*retrieve_cmd) {
      auto gateway = make_gateway(config, shared.fake_backends);
      emit(retrieve_listing_json(run_retrieve(query, index, config, *gateway)), output);
    } else if (*metrics) {
      auto gateway = make_gateway(config, shared.fake_backends);
      emit(metrics_json(run_metrics(target, generated, *gateway)), output);
    } else if (*episode) {
      EpisodeSpec spec{n_way, k_shot, config.seed};
      std::optional<fs::path> fixed_path;
      if (!fixed.empty()) fixed_path = fs::path(fixed);
      const Episode ep = run_episode(dataset, spec, fixed_path, output);
      std::cerr << "episode: " << ep.categories.size() << " categories, " << ep.support.size()
                << " support entries, " << ep.query_image_ids.size() << " query images\n";
    }
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return e.is_backend_error() ? kExitBackend : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
