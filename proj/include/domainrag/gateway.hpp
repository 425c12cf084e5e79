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

// Uniform access to the six model capabilities the pipeline consumes.
//
// A ModelBackend answers requests (in-process fake, HTTP client, or a test
// double). The ModelGateway owns one backend per capability and adds the
// per-endpoint policy: bounded in-flight requests, retries with exponential
// backoff on transient faults, and validation of every reply against the
// declared dimensions before it reaches the caller.

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "domainrag/embedding.hpp"
#include "domainrag/geometry.hpp"

namespace domainrag {

enum class Capability : int {
  kEncode = 0,
  kFeatureMap,
  kInpaint,
  kPromptEncode,
  kGenerate,
  kFill,
};

inline constexpr std::array<Capability, 6> kAllCapabilities = {
    Capability::kEncode,       Capability::kFeatureMap, Capability::kInpaint,
    Capability::kPromptEncode, Capability::kGenerate,   Capability::kFill};

std::string_view capability_name(Capability capability);
std::string capability_route(Capability capability);
// Throws ConfigError on an unknown name.
Capability parse_capability(std::string_view name);

inline constexpr int kGeneratedSize = 1024;

struct GenerationParams {
  double guidance_scale = 2.5;
  int num_steps = 50;
  double noise_strength = 1.0;
  std::uint64_t seed = 0;

  // Throws ValidationError.
  void validate() const;
  bool operator==(const GenerationParams&) const = default;
};

struct BackendEndpoint {
  Capability capability = Capability::kEncode;
  std::string address = "http://127.0.0.1:8765";
  std::chrono::milliseconds timeout{120000};
  int max_retries = 2;
  int max_in_flight = 1;
  std::chrono::milliseconds backoff{200};  // first retry delay, doubled after each failure

  // Throws ConfigError.
  void validate() const;
};

// Output sizes every backend of a deployment agrees on.
struct DeclaredDims {
  std::size_t embedding_dim = 64;
  std::size_t prompt_dim = 64;
  std::size_t feature_channels = 64;
};

// Implementations signal transient faults with BackendUnavailable (retried)
// and contract violations with ProtocolViolation (not retried).
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual EmbeddingVector encode_image(const ImageBuffer& image) = 0;
  virtual FeatureMap extract_feature_map(const ImageBuffer& image) = 0;
  // Mask polarity: 0 marks the foreground to erase.
  virtual ImageBuffer inpaint_background(const ImageBuffer& image, const BinaryMask& mask) = 0;
  virtual EmbeddingVector encode_prompt(const ImageBuffer& image) = 0;
  virtual ImageBuffer generate_background(const EmbeddingVector& prompt,
                                          const GenerationParams& params) = 0;
  // Mask polarity: 1 marks the region to repaint.
  virtual ImageBuffer fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                                  const EmbeddingVector& prompt, const GenerationParams& params) = 0;
};

// Counting semaphore with a runtime bound.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int max_in_flight) : max_(max_in_flight) {}

  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int max_;
  int active_ = 0;
};

class ModelGateway {
 public:
  struct Route {
    BackendEndpoint endpoint;
    std::shared_ptr<ModelBackend> backend;
  };

  // Throws ConfigError unless every capability has exactly one route.
  ModelGateway(DeclaredDims dims, std::vector<Route> routes);
  ~ModelGateway();

  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  const DeclaredDims& dims() const noexcept { return dims_; }

  EmbeddingVector encode_image(const ImageBuffer& image);
  FeatureMap extract_feature_map(const ImageBuffer& image);
  ImageBuffer inpaint_background(const ImageBuffer& image, const BinaryMask& mask);
  EmbeddingVector encode_prompt(const ImageBuffer& image);
  ImageBuffer generate_background(const EmbeddingVector& prompt, const GenerationParams& params);
  ImageBuffer fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                          const EmbeddingVector& prompt, const GenerationParams& params);

  // Total backend invocations for a capability, retries included.
  std::uint64_t attempts(Capability capability) const;

 private:
  struct Slot;

  template <typename Fn>
  auto invoke(Capability capability, Fn&& fn);

  DeclaredDims dims_;
  std::array<std::unique_ptr<Slot>, kAllCapabilities.size()> slots_;
};

}  // namespace domainrag
