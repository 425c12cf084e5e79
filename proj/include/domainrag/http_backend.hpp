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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "domainrag/fake_backend.hpp"
#include "domainrag/gateway.hpp"

namespace httplib {
class Server;
}

namespace domainrag {

// Talks the wire protocol to a remote service at `address`
// ("http://host:port"). Connection failures, timeouts and 5xx replies raise
// BackendUnavailable; 4xx and malformed replies raise ProtocolViolation.
class HttpBackend final : public ModelBackend {
 public:
  HttpBackend(std::string address, std::chrono::milliseconds timeout);

  EmbeddingVector encode_image(const ImageBuffer& image) override;
  FeatureMap extract_feature_map(const ImageBuffer& image) override;
  ImageBuffer inpaint_background(const ImageBuffer& image, const BinaryMask& mask) override;
  EmbeddingVector encode_prompt(const ImageBuffer& image) override;
  ImageBuffer generate_background(const EmbeddingVector& prompt,
                                  const GenerationParams& params) override;
  ImageBuffer fill_masked(const ImageBuffer& image, const BinaryMask& mask,
                          const EmbeddingVector& prompt, const GenerationParams& params) override;

 private:
  std::string post(Capability capability, const std::string& body);

  std::string address_;
  std::chrono::milliseconds timeout_;
};

// Serves a FakeBackend over the wire protocol, plus GET /v1/health.
class FakeModelServer {
 public:
  struct Options {
    FakeBackend::Options backend;
    int fail_first = 0;  // answer this many requests with 503 before serving
  };

  explicit FakeModelServer(Options options);
  ~FakeModelServer();

  FakeModelServer(const FakeModelServer&) = delete;
  FakeModelServer& operator=(const FakeModelServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port. Throws IoError if binding fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks serving on the calling thread.
  void run(const std::string& host, int port);
  void stop();

  std::uint64_t requests_served() const noexcept { return served_.load(); }

 private:
  void install_routes();

  Options options_;
  FakeBackend backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<int> remaining_failures_;
  std::atomic<std::uint64_t> served_{0};
};

}  // namespace domainrag
