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

// Pipeline configuration.
//
// Files are flat `key = value` lines; `#` starts a comment. Keys are the
// dotted field names printed by canonical_config(), e.g.
//
//   m = 100
//   weights.lambda2 = 0.8
//   filler_params.noise_strength = 0.9
//   endpoints.generate.address = http://10.0.0.7:8765
//
// Unknown keys are rejected. Layers apply in the order defaults, preset,
// file, command line.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "domainrag/embedding.hpp"
#include "domainrag/gateway.hpp"
#include "domainrag/geometry.hpp"

namespace domainrag {

enum class GenerationMode {
  kPerCandidate,   // output j fuses the j-th retrieved candidate
  kTop1Multiseed,  // every output fuses the top candidate, seeds differ
};

std::string_view generation_mode_name(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view name);

struct DomainPreset {
  std::string name;
  double filler_noise_strength = 0.8;
  ResamplePolicy resample_policy = ResamplePolicy::kUpsample1024;
};

const std::vector<DomainPreset>& domain_presets();
// ConfigError for unknown names.
const DomainPreset& find_preset(std::string_view name);

struct PipelineConfig {
  PipelineConfig();

  std::size_t m = 100;
  std::size_t n_retrieve = 5;
  std::size_t n_generate = 5;
  GenerationMode generation_mode = GenerationMode::kPerCandidate;
  FusionWeights weights{1.0, 0.8};
  GenerationParams generator_params;  // seed is derived per output
  GenerationParams filler_params;
  ResamplePolicy resample_policy = ResamplePolicy::kUpsample1024;
  std::vector<BackendEndpoint> endpoints;  // one per capability, in kAllCapabilities order
  DeclaredDims declared;
  std::uint64_t seed = 0;
  bool include_support_in_pool = true;
  int workers = 1;
  std::string preset;  // name of the applied preset, empty for none

  BackendEndpoint& endpoint(Capability capability);
  const BackendEndpoint& endpoint(Capability capability) const;
};

// Sets one dotted key. ConfigError on unknown keys or malformed values.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

// `key = value` pairs of a config file, in order. ConfigError on syntax errors.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

void apply_preset(PipelineConfig& config, const DomainPreset& preset);

// ConfigError unless the config is internally consistent.
void validate_config(const PipelineConfig& config);

// Every key in sorted order, one `key = value` per line. Feeding the output
// back through parse_config_text/set_config_value reproduces the config.
std::string canonical_config(const PipelineConfig& config);

// BLAKE2b hex digest of the canonical form. `workers` is excluded because it
// does not change results.
std::string config_hash(const PipelineConfig& config);

// "URL" for every capability, or "cap=URL,cap=URL".
void apply_endpoint_override(PipelineConfig& config, std::string_view spec);

struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> endpoint_override;  // DOMAINRAG_ENDPOINTS
};

// defaults -> preset (command line wins over a `preset` key in the file) ->
// file -> endpoint override -> command-line seed/workers; then validated.
PipelineConfig resolve_config(const ConfigSources& sources);

}  // namespace domainrag
