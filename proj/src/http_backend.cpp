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

#include "domainrag/http_backend.hpp"

#include "httplib.h"

#include "domainrag/errors.hpp"
#include "domainrag/wire.hpp"

namespace domainrag {

using wire::Json;

namespace {

constexpr const char* kJsonType = "application/json";

Json parse_reply(const std::string& body, Capability capability) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw ProtocolViolation(std::string(capability_name(capability)) + ": reply is not JSON: " + e.what());
  }
}

}  // namespace

HttpBackend::HttpBackend(std::string address, std::chrono::milliseconds timeout)
    : address_(std::move(address)), timeout_(timeout) {}

std::string HttpBackend::post(Capability capability, const std::string& body) {
  const std::string route = capability_route(capability);
  // One client per request: httplib clients are not meant for concurrent use.
  httplib::Client client(address_);
  if (!client.is_valid()) throw ConfigError("invalid backend address '" + address_ + "'");
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);

  auto res = client.Post(route, body, kJsonType);
  if (!res) {
    throw BackendUnavailable(address_ + route + ": " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw BackendUnavailable(address_ + route + ": HTTP " + std::to_string(res->status) + " " + res->body);
  }
  if (res->status != 200) {
    std::string detail = res->body;
    try {
      const Json err = Json::parse(res->body);
      detail = err.at("error").at("code").get<std::string>() + ": " +
               err.at("error").at("message").get<std::string>();
    } catch (const Json::exception&) {
    }
    throw ProtocolViolation(address_ + route + ": HTTP " + std::to_string(res->status) + " " + detail);
  }
  return std::move(res->body);
}

EmbeddingVector HttpBackend::encode_image(const ImageBuffer& image) {
  return wire::decode_embedding_reply(
      parse_reply(post(Capability::kEncode, wire::image_request(image).dump()), Capability::kEncode));
}

FeatureMap HttpBackend::extract_feature_map(const ImageBuffer& image) {
  return wire::decode_feature_map_reply(parse_reply(
      post(Capability::kFeatureMap, wire::image_request(image).dump()), Capability::kFeatureMap));
}

ImageBuffer HttpBackend::inpaint_background(const ImageBuffer& image, const BinaryMask& mask) {
  return wire::decode_image_reply(parse_reply(
      post(Capability::kInpaint, wire::inpaint_request(image, mask).dump()), Capability::kInpaint));
}

EmbeddingVector HttpBackend::encode_prompt(const ImageBuffer& image) {
  return wire::decode_embedding_reply(parse_reply(
      post(Capability::kPromptEncode, wire::image_request(image).dump()), Capability::kPromptEncode));
}

ImageBuffer HttpBackend::generate_background(const EmbeddingVector& prompt, const GenerationParams& params) {
  return wire::decode_image_reply(parse_reply(
      post(Capability::kGenerate, wire::generate_request(prompt, params).dump()), Capability::kGenerate));
}

ImageBuffer HttpBackend::fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                                     const EmbeddingVector& prompt, const GenerationParams& params) {
  return wire::decode_image_reply(parse_reply(
      post(Capability::kFill, wire::fill_request(image, mask, prompt, params).dump()), Capability::kFill));
}

// ---------------------------------------------------------------------------

FakeModelServer::FakeModelServer(Options options)
    : options_(options),
      backend_(options.backend),
      server_(std::make_unique<httplib::Server>()),
      remaining_failures_(options.fail_first) {
  install_routes();
}

FakeModelServer::~FakeModelServer() { stop(); }

void FakeModelServer::install_routes() {
  const DeclaredDims dims = options_.backend.dims;

  auto reply = [](httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), kJsonType);
  };

  auto check_mask = [](const ImageBuffer& image, const BinaryMask& mask) {
    if (image.width() != mask.width() || image.height() != mask.height()) {
      throw wire::RequestError(422, "dimension_mismatch", "mask and image dimensions differ");
    }
  };
  auto check_prompt = [dims](const EmbeddingVector& prompt) {
    if (prompt.dim() != dims.prompt_dim) {
      throw wire::RequestError(422, "dimension_mismatch",
                               "prompt has dim " + std::to_string(prompt.dim()) + ", expected " +
                                   std::to_string(dims.prompt_dim));
    }
  };

  auto handle = [this, reply](Capability capability, auto&& serve) {
    return [this, reply, capability, serve](const httplib::Request& req, httplib::Response& res) {
      ++served_;
      if (remaining_failures_.fetch_sub(1) > 0) {
        reply(res, 503, wire::error_reply("unavailable", "injected transient fault"));
        return;
      }
      try {
        Json body;
        try {
          body = Json::parse(req.body);
        } catch (const Json::exception& e) {
          throw wire::RequestError(400, "invalid_json", e.what());
        }
        if (!body.is_object()) throw wire::RequestError(400, "invalid_json", "body must be an object");
        reply(res, 200, serve(body));
      } catch (const wire::RequestError& e) {
        reply(res, e.status(), wire::error_reply(e.code(), e.what()));
      } catch (const std::exception& e) {
        reply(res, 500, wire::error_reply("backend_fault", e.what()));
      }
      (void)capability;
    };
  };

  auto route = [this](Capability c) { return capability_route(c); };

  server_->Post(route(Capability::kEncode), handle(Capability::kEncode, [this](const Json& body) {
    return wire::embedding_reply(backend_.encode_image(wire::request_image(body)));
  }));
  server_->Post(route(Capability::kFeatureMap), handle(Capability::kFeatureMap, [this](const Json& body) {
    return wire::feature_map_reply(backend_.extract_feature_map(wire::request_image(body)));
  }));
  server_->Post(route(Capability::kInpaint), handle(Capability::kInpaint, [this, check_mask](const Json& body) {
    const ImageBuffer image = wire::request_image(body);
    const BinaryMask mask = wire::request_mask(body);
    check_mask(image, mask);
    return wire::image_reply(backend_.inpaint_background(image, mask));
  }));
  server_->Post(route(Capability::kPromptEncode), handle(Capability::kPromptEncode, [this](const Json& body) {
    return wire::embedding_reply(backend_.encode_prompt(wire::request_image(body)));
  }));
  server_->Post(route(Capability::kGenerate), handle(Capability::kGenerate, [this, check_prompt](const Json& body) {
    const EmbeddingVector prompt = wire::request_prompt(body);
    check_prompt(prompt);
    return wire::image_reply(backend_.generate_background(prompt, wire::request_params(body)));
  }));
  server_->Post(route(Capability::kFill),
                handle(Capability::kFill, [this, check_mask, check_prompt](const Json& body) {
                  const ImageBuffer image = wire::request_image(body);
                  const BinaryMask mask = wire::request_mask(body);
                  check_mask(image, mask);
                  const EmbeddingVector prompt = wire::request_prompt(body);
                  check_prompt(prompt);
                  return wire::image_reply(backend_.fill_masked(image, mask, prompt, wire::request_params(body)));
                }));

  server_->Get("/v1/health", [dims, reply](const httplib::Request&, httplib::Response& res) {
    Json caps = Json::array();
    for (auto c : kAllCapabilities) caps.push_back(capability_name(c));
    reply(res, 200,
          Json{{"status", "ok"},
               {"capabilities", caps},
               {"dims", {{"encode", dims.embedding_dim},
                         {"prompt_encode", dims.prompt_dim},
                         {"feature_map", dims.feature_channels}}},
               {"generate_size", {kGeneratedSize, kGeneratedSize}},
               {"deterministic", true}});
  });

  server_->set_error_handler([reply](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const int status = res.status;
      reply(res, status, wire::error_reply(status == 404 ? "not_found" : "http_error",
                                           "HTTP " + std::to_string(status)));
    }
  });
}

int FakeModelServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw IoError("cannot bind fake model server on " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void FakeModelServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw IoError("cannot serve on " + host + ":" + std::to_string(port));
  }
}

void FakeModelServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace domainrag
