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

#include "domainrag/config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "domainrag/codec.hpp"
#include "domainrag/errors.hpp"
#include "domainrag/file_util.hpp"

namespace domainrag {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                    std::string(expected));
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

int to_int(std::string_view key, std::string_view value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) bad_value(key, value, "an integer");
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty() || !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean");
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool set_params(GenerationParams& p, std::string_view field, std::string_view key, std::string_view value) {
  if (field == "guidance_scale") {
    p.guidance_scale = to_double(key, value);
  } else if (field == "num_steps") {
    p.num_steps = to_int(key, value);
  } else if (field == "noise_strength") {
    p.noise_strength = to_double(key, value);
  } else {
    return false;
  }
  return true;
}

void put_params(std::map<std::string, std::string>& out, const std::string& prefix, const GenerationParams& p) {
  out[prefix + ".guidance_scale"] = fmt(p.guidance_scale);
  out[prefix + ".num_steps"] = std::to_string(p.num_steps);
  out[prefix + ".noise_strength"] = fmt(p.noise_strength);
}

std::map<std::string, std::string> config_map(const PipelineConfig& c) {
  std::map<std::string, std::string> out;
  out["m"] = std::to_string(c.m);
  out["n_retrieve"] = std::to_string(c.n_retrieve);
  out["n_generate"] = std::to_string(c.n_generate);
  out["generation_mode"] = std::string(generation_mode_name(c.generation_mode));
  out["weights.lambda1"] = fmt(c.weights.lambda1);
  out["weights.lambda2"] = fmt(c.weights.lambda2);
  put_params(out, "generator_params", c.generator_params);
  put_params(out, "filler_params", c.filler_params);
  out["resample_policy"] = std::string(policy_name(c.resample_policy));
  out["seed"] = std::to_string(c.seed);
  out["include_support_in_pool"] = c.include_support_in_pool ? "true" : "false";
  out["workers"] = std::to_string(c.workers);
  out["preset"] = c.preset;
  out["declared.embedding_dim"] = std::to_string(c.declared.embedding_dim);
  out["declared.prompt_dim"] = std::to_string(c.declared.prompt_dim);
  out["declared.feature_channels"] = std::to_string(c.declared.feature_channels);
  for (const auto& e : c.endpoints) {
    const std::string p = "endpoints." + std::string(capability_name(e.capability));
    out[p + ".address"] = e.address;
    out[p + ".timeout_ms"] = std::to_string(e.timeout.count());
    out[p + ".max_retries"] = std::to_string(e.max_retries);
    out[p + ".max_in_flight"] = std::to_string(e.max_in_flight);
    out[p + ".backoff_ms"] = std::to_string(e.backoff.count());
  }
  return out;
}

}  // namespace

std::string_view generation_mode_name(GenerationMode mode) {
  return mode == GenerationMode::kPerCandidate ? "per_candidate" : "top1_multiseed";
}

GenerationMode parse_generation_mode(std::string_view name) {
  if (name == "per_candidate") return GenerationMode::kPerCandidate;
  if (name == "top1_multiseed") return GenerationMode::kTop1Multiseed;
  throw ConfigError("unknown generation mode '" + std::string(name) + "'");
}

const std::vector<DomainPreset>& domain_presets() {
  static const std::vector<DomainPreset> presets = {
      {"fish", 0.8, ResamplePolicy::kUpsample1024},
      {"dior", 0.8, ResamplePolicy::kUpsample1024},
      {"artaxor", 0.9, ResamplePolicy::kIntegerEdge2800},
      {"clipart1k", 0.9, ResamplePolicy::kUpsample1024},
      {"neu-det", 0.3, ResamplePolicy::kUpsample1024},
      {"nwpu-vhr10", 0.8, ResamplePolicy::kUpsample1024},
      {"camouflage", 0.6, ResamplePolicy::kUpsample1024},
      {"uodd", 0.4, ResamplePolicy::kLongestSide2048},
  };
  return presets;
}

const DomainPreset& find_preset(std::string_view name) {
  for (const auto& p : domain_presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : domain_presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

PipelineConfig::PipelineConfig() {
  generator_params = GenerationParams{2.5, 50, 1.0, 0};
  filler_params = GenerationParams{30.0, 50, 0.8, 0};
  for (Capability c : kAllCapabilities) {
    BackendEndpoint e;
    e.capability = c;
    endpoints.push_back(e);
  }
}

BackendEndpoint& PipelineConfig::endpoint(Capability capability) {
  for (auto& e : endpoints) {
    if (e.capability == capability) return e;
  }
  throw ConfigError("no endpoint for capability " + std::string(capability_name(capability)));
}

const BackendEndpoint& PipelineConfig::endpoint(Capability capability) const {
  return const_cast<PipelineConfig&>(*this).endpoint(capability);
}

void set_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
  const auto dot = key.find('.');
  const std::string_view head = key.substr(0, dot);
  const std::string_view rest = dot == std::string_view::npos ? std::string_view{} : key.substr(dot + 1);

  if (dot == std::string_view::npos) {
    if (key == "m") {
      c.m = to_u64(key, value);
    } else if (key == "n_retrieve") {
      c.n_retrieve = to_u64(key, value);
    } else if (key == "n_generate") {
      c.n_generate = to_u64(key, value);
    } else if (key == "generation_mode") {
      c.generation_mode = parse_generation_mode(value);
    } else if (key == "resample_policy") {
      c.resample_policy = parse_policy(value);
    } else if (key == "seed") {
      c.seed = to_u64(key, value);
    } else if (key == "include_support_in_pool") {
      c.include_support_in_pool = to_bool(key, value);
    } else if (key == "workers") {
      c.workers = to_int(key, value);
    } else if (key == "preset") {
      // Records the name only; resolve_config applies presets before the
      // other layers so explicit keys always win.
      if (!value.empty()) find_preset(value);
      c.preset = std::string(value);
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
    return;
  }

  if (head == "weights") {
    if (rest == "lambda1") {
      c.weights = FusionWeights(to_double(key, value), c.weights.lambda2);
      return;
    }
    if (rest == "lambda2") {
      c.weights = FusionWeights(c.weights.lambda1, to_double(key, value));
      return;
    }
  } else if (head == "generator_params") {
    if (set_params(c.generator_params, rest, key, value)) return;
  } else if (head == "filler_params") {
    if (set_params(c.filler_params, rest, key, value)) return;
  } else if (head == "declared") {
    if (rest == "embedding_dim") {
      c.declared.embedding_dim = to_u64(key, value);
      return;
    }
    if (rest == "prompt_dim") {
      c.declared.prompt_dim = to_u64(key, value);
      return;
    }
    if (rest == "feature_channels") {
      c.declared.feature_channels = to_u64(key, value);
      return;
    }
  } else if (head == "endpoints") {
    const auto dot2 = rest.find('.');
    if (dot2 != std::string_view::npos) {
      Capability cap;
      try {
        cap = parse_capability(rest.substr(0, dot2));
      } catch (const ConfigError&) {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
      }
      BackendEndpoint& e = c.endpoint(cap);
      const std::string_view field = rest.substr(dot2 + 1);
      if (field == "address") {
        e.address = std::string(value);
        return;
      }
      if (field == "timeout_ms") {
        e.timeout = std::chrono::milliseconds(to_int(key, value));
        return;
      }
      if (field == "max_retries") {
        e.max_retries = to_int(key, value);
        return;
      }
      if (field == "max_in_flight") {
        e.max_in_flight = to_int(key, value);
        return;
      }
      if (field == "backoff_ms") {
        e.backoff = std::chrono::milliseconds(to_int(key, value));
        return;
      }
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_preset(PipelineConfig& config, const DomainPreset& preset) {
  if (!(preset.filler_noise_strength >= 0.0 && preset.filler_noise_strength <= 1.0)) {
    throw ConfigError("preset '" + preset.name + "' has noise strength outside [0, 1]");
  }
  config.filler_params.noise_strength = preset.filler_noise_strength;
  config.resample_policy = preset.resample_policy;
  config.preset = preset.name;
}

void validate_config(const PipelineConfig& c) {
  if (c.m == 0) throw ConfigError("m must be positive");
  if (c.n_retrieve == 0) throw ConfigError("n_retrieve must be positive");
  if (c.n_retrieve > c.m) {
    throw ConfigError("n_retrieve (" + std::to_string(c.n_retrieve) + ") exceeds m (" + std::to_string(c.m) + ")");
  }
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.declared.embedding_dim == 0 || c.declared.prompt_dim == 0 || c.declared.feature_channels == 0) {
    throw ConfigError("declared dimensions must be positive");
  }
  try {
    c.generator_params.validate();
    c.filler_params.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("generation parameters: ") + e.what());
  }
  for (Capability cap : kAllCapabilities) {
    int found = 0;
    for (const auto& e : c.endpoints) found += e.capability == cap ? 1 : 0;
    if (found != 1) {
      throw ConfigError("capability " + std::string(capability_name(cap)) + " needs exactly one endpoint");
    }
  }
  for (const auto& e : c.endpoints) e.validate();
}

std::string canonical_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_map(config)) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const PipelineConfig& config) {
  auto map = config_map(config);
  map.erase("workers");
  std::string text;
  for (const auto& [k, v] : map) text += k + " = " + v + "\n";
  const auto* p = reinterpret_cast<const std::uint8_t*>(text.data());
  return to_hex(digest_of(std::span<const std::uint8_t>(p, text.size())));
}

void apply_endpoint_override(PipelineConfig& config, std::string_view spec) {
  spec = trim(spec);
  if (spec.empty()) return;
  if (spec.find('=') == std::string_view::npos) {
    for (auto& e : config.endpoints) e.address = std::string(spec);
    return;
  }
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    const std::string_view item = trim(spec.substr(0, comma));
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("endpoint override '" + std::string(item) + "' must be capability=URL");
    }
    config.endpoint(parse_capability(trim(item.substr(0, eq)))).address = std::string(trim(item.substr(eq + 1)));
  }
}

PipelineConfig resolve_config(const ConfigSources& sources) {
  PipelineConfig config;
  std::vector<std::pair<std::string, std::string>> entries;
  std::optional<std::string> preset = sources.preset;
  if (sources.file) {
    try {
      entries = parse_config_text(read_file_text(*sources.file));
    } catch (const ConfigError& e) {
      throw ConfigError(sources.file->string() + ": " + e.what());
    }
    for (const auto& [k, v] : entries) {
      if (k == "preset" && !preset) preset = v;
    }
  }
  if (preset && !preset->empty()) apply_preset(config, find_preset(*preset));
  for (const auto& [k, v] : entries) {
    if (k == "preset") continue;
    try {
      set_config_value(config, k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(sources.file->string() + ": " + e.what());
    }
  }
  if (sources.endpoint_override) apply_endpoint_override(config, *sources.endpoint_override);
  if (sources.seed) config.seed = *sources.seed;
  if (sources.workers) config.workers = *sources.workers;
  validate_config(config);
  return config;
}

}  // namespace domainrag
