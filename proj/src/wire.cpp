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

#include "domainrag/wire.hpp"

#include <span>
#include <vector>

#include "domainrag/codec.hpp"
#include "domainrag/errors.hpp"

namespace domainrag::wire {
namespace {

std::vector<double> numbers(const Json& array, std::string_view what) {
  if (!array.is_array()) throw ProtocolViolation(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(array.size());
  for (const auto& v : array) {
    if (!v.is_number()) throw ProtocolViolation(std::string(what) + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const Json& reply_field(const Json& body, const char* name) {
  if (!body.is_object() || !body.contains(name)) {
    throw ProtocolViolation(std::string("reply is missing \"") + name + "\"");
  }
  return body.at(name);
}

const Json& request_field(const Json& body, const char* name) {
  if (!body.is_object() || !body.contains(name)) {
    throw RequestError(400, "missing_field", std::string("request is missing \"") + name + "\"");
  }
  return body.at(name);
}

Bytes request_base64(const Json& body, const char* name) {
  const Json& field = request_field(body, name);
  if (!field.is_string()) throw RequestError(400, "invalid_field", std::string(name) + " must be a string");
  try {
    return base64_decode(field.get<std::string>());
  } catch (const FormatError& e) {
    throw RequestError(400, "invalid_" + std::string(name), e.what());
  }
}

std::vector<double> to_vector(std::span<const double> values) {
  return std::vector<double>(values.begin(), values.end());
}

}  // namespace

Json params_json(const GenerationParams& params) {
  return Json{{"guidance_scale", params.guidance_scale},
              {"num_steps", params.num_steps},
              {"noise_strength", params.noise_strength},
              {"seed", params.seed}};
}

Json image_request(const ImageBuffer& image) { return Json{{"image", base64_encode(encode_png(image))}}; }

Json inpaint_request(const ImageBuffer& image, const BinaryMask& mask) {
  Json body = image_request(image);
  body["mask"] = base64_encode(encode_mask_png(mask));
  return body;
}

Json generate_request(const EmbeddingVector& prompt, const GenerationParams& params) {
  return Json{{"prompt", to_vector(prompt.values())}, {"params", params_json(params)}};
}

Json fill_request(const ImageBuffer& image, const BinaryMask& mask, const EmbeddingVector& prompt,
                  const GenerationParams& params) {
  Json body = inpaint_request(image, mask);
  body["prompt"] = to_vector(prompt.values());
  body["params"] = params_json(params);
  return body;
}

Json embedding_reply(const EmbeddingVector& embedding) { return Json{{"embedding", to_vector(embedding.values())}}; }

Json feature_map_reply(const FeatureMap& map) {
  return Json{{"embedding", to_vector(map.data())}, {"shape", {map.channels(), map.height(), map.width()}}};
}

Json image_reply(const ImageBuffer& image) { return Json{{"image", base64_encode(encode_png(image))}}; }

Json error_reply(std::string_view code, std::string_view message) {
  return Json{{"error", {{"code", code}, {"message", message}}}};
}

EmbeddingVector decode_embedding_reply(const Json& body) {
  try {
    return EmbeddingVector(numbers(reply_field(body, "embedding"), "embedding"));
  } catch (const ProtocolViolation&) {
    throw;
  } catch (const Error& e) {
    throw ProtocolViolation(std::string("invalid embedding: ") + e.what());
  }
}

FeatureMap decode_feature_map_reply(const Json& body) {
  const Json& shape = reply_field(body, "shape");
  if (!shape.is_array() || shape.size() != 3) throw ProtocolViolation("shape must be [C, H, W]");
  std::size_t dims[3];
  for (int i = 0; i < 3; ++i) {
    if (!shape[static_cast<std::size_t>(i)].is_number_unsigned()) {
      throw ProtocolViolation("shape entries must be non-negative integers");
    }
    dims[i] = shape[static_cast<std::size_t>(i)].get<std::size_t>();
  }
  try {
    return FeatureMap(dims[0], dims[1], dims[2], numbers(reply_field(body, "embedding"), "embedding"));
  } catch (const ProtocolViolation&) {
    throw;
  } catch (const Error& e) {
    throw ProtocolViolation(std::string("invalid feature map: ") + e.what());
  }
}

ImageBuffer decode_image_reply(const Json& body) {
  const Json& field = reply_field(body, "image");
  if (!field.is_string()) throw ProtocolViolation("image must be a base64 string");
  try {
    return decode_png(base64_decode(field.get<std::string>()));
  } catch (const Error& e) {
    throw ProtocolViolation(std::string("invalid image: ") + e.what());
  }
}

ImageBuffer request_image(const Json& body) {
  const Bytes png = request_base64(body, "image");
  try {
    return decode_png(png);
  } catch (const Error& e) {
    throw RequestError(400, "invalid_image", e.what());
  }
}

BinaryMask request_mask(const Json& body) {
  const Bytes png = request_base64(body, "mask");
  try {
    return decode_mask_png(png);
  } catch (const Error& e) {
    throw RequestError(400, "invalid_mask", e.what());
  }
}

EmbeddingVector request_prompt(const Json& body) {
  const Json& field = request_field(body, "prompt");
  try {
    return EmbeddingVector(numbers(field, "prompt"));
  } catch (const Error& e) {
    throw RequestError(400, "invalid_prompt", e.what());
  }
}

GenerationParams request_params(const Json& body) {
  const Json& p = request_field(body, "params");
  if (!p.is_object()) throw RequestError(400, "invalid_params", "params must be an object");
  GenerationParams params;
  try {
    params.guidance_scale = p.at("guidance_scale").get<double>();
    params.num_steps = p.at("num_steps").get<int>();
    params.noise_strength = p.at("noise_strength").get<double>();
    if (!p.at("seed").is_number_unsigned()) throw RequestError(400, "invalid_params", "seed must be a u64");
    params.seed = p.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw RequestError(400, "invalid_params", e.what());
  }
  try {
    params.validate();
  } catch (const Error& e) {
    throw RequestError(422, "invalid_params", e.what());
  }
  return params;
}

}  // namespace domainrag::wire
