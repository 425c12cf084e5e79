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

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"

#include "domainrag/errors.hpp"
#include "domainrag/http_backend.hpp"
#include "test_util.hpp"

namespace domainrag {
namespace {

using namespace std::chrono_literals;
using Json = nlohmann::json;
using testing::Rng;

const DeclaredDims kDims{32, 16, 8};

struct Served {
  explicit Served(int fail_first = 0) : server(FakeModelServer::Options{{kDims}, fail_first}) {
    port = server.start();
    address = "http://127.0.0.1:" + std::to_string(port);
  }
  FakeModelServer server;
  int port = 0;
  std::string address;
};

std::unique_ptr<ModelGateway> http_gateway(const std::string& address, int max_retries) {
  std::vector<ModelGateway::Route> routes;
  for (auto c : kAllCapabilities) {
    BackendEndpoint ep;
    ep.capability = c;
    ep.address = address;
    ep.timeout = 5000ms;
    ep.max_retries = max_retries;
    ep.backoff = 1ms;
    routes.push_back({ep, std::make_shared<HttpBackend>(address, ep.timeout)});
  }
  return std::make_unique<ModelGateway>(kDims, std::move(routes));
}

int closed_port() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  return port;  // released when `probe` goes out of scope
}

TEST(HttpBackend, MatchesInProcessFakeOnEveryCapability) {
  Served s;
  HttpBackend http(s.address, 5000ms);
  FakeBackend local(FakeBackend::Options{kDims});
  Rng rng(81);
  const auto img = rng.image(23, 17);
  const auto mask = rng.mask(23, 17);
  GenerationParams params{30.0, 50, 0.8, 99};

  EXPECT_EQ(http.encode_image(img), local.encode_image(img));
  EXPECT_EQ(http.extract_feature_map(img), local.extract_feature_map(img));
  EXPECT_EQ(http.inpaint_background(img, mask), local.inpaint_background(img, mask));
  const auto prompt = local.encode_prompt(img);
  EXPECT_EQ(http.encode_prompt(img), prompt);
  EXPECT_EQ(http.generate_background(prompt, params), local.generate_background(prompt, params));
  EXPECT_EQ(http.fill_masked(img, mask, prompt, params), local.fill_masked(img, mask, prompt, params));
  EXPECT_EQ(s.server.requests_served(), 6u);
}

TEST(HttpBackend, TransientFaultsAreRetried) {
  Served s(2);
  auto gw = http_gateway(s.address, 2);
  EXPECT_EQ(gw->encode_image(ImageBuffer(4, 4)).dim(), 32u);
  EXPECT_EQ(gw->attempts(Capability::kEncode), 3u);
  EXPECT_EQ(s.server.requests_served(), 3u);
}

TEST(HttpBackend, ExhaustedRetriesAreUnavailable) {
  Served s(5);
  auto gw = http_gateway(s.address, 1);
  EXPECT_THROW(gw->encode_image(ImageBuffer(4, 4)), BackendUnavailable);
  EXPECT_EQ(gw->attempts(Capability::kEncode), 2u);
}

TEST(HttpBackend, UnreachableIsUnavailable) {
  const std::string address = "http://127.0.0.1:" + std::to_string(closed_port());
  HttpBackend http(address, 500ms);
  EXPECT_THROW(http.encode_image(ImageBuffer(2, 2)), BackendUnavailable);
  auto gw = http_gateway(address, 1);
  EXPECT_THROW(gw->encode_image(ImageBuffer(2, 2)), BackendUnavailable);
  EXPECT_EQ(gw->attempts(Capability::kEncode), 2u);
}

TEST(HttpBackend, ContractErrorsAreViolations) {
  Served s;
  HttpBackend http(s.address, 5000ms);
  Rng rng(82);
  const auto img = rng.image(8, 8);
  EXPECT_THROW(http.inpaint_background(img, BinaryMask(7, 8, 1)), ProtocolViolation);
  EXPECT_THROW(http.generate_background(EmbeddingVector(std::vector<double>(15, 1.0)), {}), ProtocolViolation);
  // Not retried through the gateway.
  auto gw = http_gateway(s.address, 3);
  const auto before = s.server.requests_served();
  EXPECT_THROW(gw->fill_masked(img, BinaryMask(8, 8, 1), EmbeddingVector(std::vector<double>(15, 1.0)), {}),
               ProtocolViolation);
  EXPECT_EQ(s.server.requests_served(), before);  // rejected before sending
}

TEST(FakeModelServer, ErrorBodies) {
  Served s;
  httplib::Client client(s.address);
  auto bad = client.Post("/v1/encode", "{nope", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(Json::parse(bad->body)["error"]["code"], "invalid_json");

  auto missing = client.Post("/v1/encode", "{}", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_GE(missing->status, 400);
  EXPECT_LT(missing->status, 500);
  EXPECT_TRUE(Json::parse(missing->body)["error"].contains("message"));

  auto unknown = client.Post("/v1/segment", "{}", "application/json");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(Json::parse(unknown->body)["error"]["code"], "not_found");
}

TEST(FakeModelServer, Health) {
  Served s;
  httplib::Client client(s.address);
  auto res = client.Get("/v1/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = Json::parse(res->body);
  EXPECT_EQ(body["status"], "ok");
  EXPECT_EQ(body["capabilities"].size(), 6u);
  EXPECT_EQ(body["dims"]["encode"], 32);
  EXPECT_EQ(body["dims"]["prompt_encode"], 16);
  EXPECT_EQ(body["dims"]["feature_map"], 8);
  EXPECT_EQ(body["generate_size"], Json::array({1024, 1024}));
}

TEST(FakeModelServer, ConcurrentClients) {
  Served s;
  auto gw = http_gateway(s.address, 0);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  Rng rng(83);
  const auto img = rng.image(6, 6);
  const auto want = FakeBackend(FakeBackend::Options{kDims}).encode_image(img);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) ok += gw->encode_image(img) == want;
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 20);
}

}  // namespace
}  // namespace domainrag
