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

// JSON bodies of the model wire protocol (HTTP/1.1, one POST route per
// capability under /v1/).
//
//   request   "image"   base64 PNG
//             "mask"    base64 single-channel PNG, {0,255} -> {0,1}
//             "prompt"  array of numbers
//             "params"  {"guidance_scale","num_steps","noise_strength","seed"}
//   reply     "embedding" array of numbers (feature_map adds "shape": [C,H,W])
//             "image"     base64 PNG
//   error     {"error": {"code", "message"}}, 4xx contract / 5xx backend fault

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

#include "domainrag/embedding.hpp"
#include "domainrag/gateway.hpp"
#include "domainrag/geometry.hpp"

namespace domainrag::wire {

using Json = nlohmann::json;

// Request decoding failure on the serving side.
class RequestError : public std::runtime_error {
 public:
  RequestError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

Json params_json(const GenerationParams& params);
Json image_request(const ImageBuffer& image);
Json inpaint_request(const ImageBuffer& image, const BinaryMask& mask);
Json generate_request(const EmbeddingVector& prompt, const GenerationParams& params);
Json fill_request(const ImageBuffer& image, const BinaryMask& mask, const EmbeddingVector& prompt,
                  const GenerationParams& params);

Json embedding_reply(const EmbeddingVector& embedding);
Json feature_map_reply(const FeatureMap& map);
Json image_reply(const ImageBuffer& image);
Json error_reply(std::string_view code, std::string_view message);

// Client side. Throw ProtocolViolation on malformed replies.
EmbeddingVector decode_embedding_reply(const Json& body);
FeatureMap decode_feature_map_reply(const Json& body);
ImageBuffer decode_image_reply(const Json& body);

// Server side. Throw RequestError (400 malformed, 422 semantic).
ImageBuffer request_image(const Json& body);
BinaryMask request_mask(const Json& body);
EmbeddingVector request_prompt(const Json& body);
GenerationParams request_params(const Json& body);

}  // namespace domainrag::wire
