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

#include "domainrag/gateway.hpp"

#include <cmath>
#include <thread>

#include "domainrag/errors.hpp"

namespace domainrag {

std::string_view capability_name(Capability capability) {
  switch (capability) {
    case Capability::kEncode: return "encode";
    case Capability::kFeatureMap: return "feature_map";
    case Capability::kInpaint: return "inpaint";
    case Capability::kPromptEncode: return "prompt_encode";
    case Capability::kGenerate: return "generate";
    case Capability::kFill: return "fill";
  }
  return "unknown";
}

std::string capability_route(Capability capability) {
  return "/v1/" + std::string(capability_name(capability));
}

Capability parse_capability(std::string_view name) {
  for (auto c : kAllCapabilities) {
    if (capability_name(c) == name) return c;
  }
  throw ConfigError("unknown capability '" + std::string(name) + "'");
}

void GenerationParams::validate() const {
  if (!std::isfinite(guidance_scale) || guidance_scale <= 0.0) {
    throw ValidationError("guidance_scale must be positive");
  }
  if (num_steps < 1) throw ValidationError("num_steps must be positive");
  if (!std::isfinite(noise_strength) || noise_strength < 0.0 || noise_strength > 1.0) {
    throw ValidationError("noise_strength must lie in [0, 1]");
  }
}

void BackendEndpoint::validate() const {
  const std::string name(capability_name(capability));
  if (address.empty()) throw ConfigError("endpoint " + name + ": empty address");
  if (timeout.count() <= 0) throw ConfigError("endpoint " + name + ": timeout must be positive");
  if (max_in_flight < 1) throw ConfigError("endpoint " + name + ": max_in_flight must be >= 1");
  if (max_retries < 0) throw ConfigError("endpoint " + name + ": max_retries must be >= 0");
  if (backoff.count() < 0) throw ConfigError("endpoint " + name + ": backoff must be >= 0");
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return active_ < max_; });
  ++active_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

struct ModelGateway::Slot {
  Slot(BackendEndpoint ep, std::shared_ptr<ModelBackend> be)
      : endpoint(std::move(ep)), backend(std::move(be)), limiter(endpoint.max_in_flight) {}

  BackendEndpoint endpoint;
  std::shared_ptr<ModelBackend> backend;
  InFlightLimiter limiter;
  std::atomic<std::uint64_t> attempts{0};
};

ModelGateway::ModelGateway(DeclaredDims dims, std::vector<Route> routes) : dims_(dims) {
  if (dims_.embedding_dim == 0 || dims_.prompt_dim == 0 || dims_.feature_channels == 0) {
    throw ConfigError("declared dimensions must be positive");
  }
  for (auto& route : routes) {
    route.endpoint.validate();
    if (!route.backend) throw ConfigError("route without a backend");
    auto& slot = slots_[static_cast<std::size_t>(route.endpoint.capability)];
    if (slot) {
      throw ConfigError("capability " + std::string(capability_name(route.endpoint.capability)) +
                        " routed twice");
    }
    slot = std::make_unique<Slot>(std::move(route.endpoint), std::move(route.backend));
  }
  for (auto c : kAllCapabilities) {
    if (!slots_[static_cast<std::size_t>(c)]) {
      throw ConfigError("no endpoint for capability " + std::string(capability_name(c)));
    }
  }
}

ModelGateway::~ModelGateway() = default;

std::uint64_t ModelGateway::attempts(Capability capability) const {
  return slots_[static_cast<std::size_t>(capability)]->attempts.load();
}

template <typename Fn>
auto ModelGateway::invoke(Capability capability, Fn&& fn) {
  Slot& slot = *slots_[static_cast<std::size_t>(capability)];
  const std::string name(capability_name(capability));
  const int max_attempts = slot.endpoint.max_retries + 1;
  auto delay = slot.endpoint.backoff;

  for (int attempt = 1;; ++attempt) {
    std::string failure;
    slot.limiter.acquire();
    ++slot.attempts;
    try {
      auto reply = fn(*slot.backend);
      slot.limiter.release();
      return reply;
    } catch (const Error& e) {
      slot.limiter.release();
      if (e.code() != ErrorCode::kBackendUnavailable) {
        throw ProtocolViolation(name + ": " + e.what());
      }
      failure = e.what();
    } catch (const std::exception& e) {
      slot.limiter.release();
      failure = e.what();
    }
    if (attempt >= max_attempts) {
      throw BackendUnavailable(name + " backend unavailable after " + std::to_string(attempt) +
                               " attempt(s): " + failure);
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

namespace {

void expect_dim(std::size_t got, std::size_t declared, std::string_view what) {
  if (got != declared) {
    throw ProtocolViolation(std::string(what) + ": reply has dimension " + std::to_string(got) +
                            ", declared " + std::to_string(declared));
  }
}

void expect_same_extent(const ImageBuffer& reply, int width, int height, std::string_view what) {
  if (reply.width() != width || reply.height() != height) {
    throw ProtocolViolation(std::string(what) + ": reply is " + std::to_string(reply.width()) + "x" +
                            std::to_string(reply.height()) + ", expected " + std::to_string(width) +
                            "x" + std::to_string(height));
  }
}

void expect_mask_matches(const ImageBuffer& image, const BinaryMask& mask, std::string_view what) {
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw ProtocolViolation(std::string(what) + ": mask and image dimensions differ");
  }
}

}  // namespace

EmbeddingVector ModelGateway::encode_image(const ImageBuffer& image) {
  auto reply = invoke(Capability::kEncode, [&](ModelBackend& b) { return b.encode_image(image); });
  expect_dim(reply.dim(), dims_.embedding_dim, "encode");
  return reply;
}

FeatureMap ModelGateway::extract_feature_map(const ImageBuffer& image) {
  auto reply = invoke(Capability::kFeatureMap, [&](ModelBackend& b) { return b.extract_feature_map(image); });
  expect_dim(reply.channels(), dims_.feature_channels, "feature_map");
  return reply;
}

ImageBuffer ModelGateway::inpaint_background(const ImageBuffer& image, const BinaryMask& mask) {
  expect_mask_matches(image, mask, "inpaint");
  auto reply = invoke(Capability::kInpaint, [&](ModelBackend& b) { return b.inpaint_background(image, mask); });
  expect_same_extent(reply, image.width(), image.height(), "inpaint");
  return reply;
}

EmbeddingVector ModelGateway::encode_prompt(const ImageBuffer& image) {
  auto reply = invoke(Capability::kPromptEncode, [&](ModelBackend& b) { return b.encode_prompt(image); });
  expect_dim(reply.dim(), dims_.prompt_dim, "prompt_encode");
  return reply;
}

ImageBuffer ModelGateway::generate_background(const EmbeddingVector& prompt, const GenerationParams& params) {
  params.validate();
  if (prompt.dim() != dims_.prompt_dim) {
    throw ProtocolViolation("generate: prompt dim " + std::to_string(prompt.dim()) + " != declared " +
                            std::to_string(dims_.prompt_dim));
  }
  auto reply = invoke(Capability::kGenerate,
                      [&](ModelBackend& b) { return b.generate_background(prompt, params); });
  expect_same_extent(reply, kGeneratedSize, kGeneratedSize, "generate");
  return reply;
}

ImageBuffer ModelGateway::fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                                      const EmbeddingVector& prompt, const GenerationParams& params) {
  params.validate();
  expect_mask_matches(image, mask, "fill");
  if (prompt.dim() != dims_.prompt_dim) {
    throw ProtocolViolation("fill: prompt dim " + std::to_string(prompt.dim()) + " != declared " +
                            std::to_string(dims_.prompt_dim));
  }
  auto reply = invoke(Capability::kFill,
                      [&](ModelBackend& b) { return b.fill_masked(image, mask, prompt, params); });
  expect_same_extent(reply, image.width(), image.height(), "fill");
  return reply;
}

}  // namespace domainrag
