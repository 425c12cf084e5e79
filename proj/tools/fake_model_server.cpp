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

// Serves the deterministic fake backends over HTTP, for wiring tests and
// for running the CLI without model weights.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "domainrag/errors.hpp"
#include "domainrag/http_backend.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fake model server"};
  std::string host = "127.0.0.1";
  int port = 8765;
  domainrag::FakeModelServer::Options options;
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--embedding-dim", options.backend.dims.embedding_dim);
  app.add_option("--prompt-dim", options.backend.dims.prompt_dim);
  app.add_option("--feature-channels", options.backend.dims.feature_channels);
  app.add_option("--fail-first", options.fail_first, "Answer this many requests with 503 first");
  CLI11_PARSE(app, argc, argv);

  try {
    domainrag::FakeModelServer server(options);
    std::cerr << "serving on " << host << ":" << port << "\n";
    server.run(host, port);
  } catch (const domainrag::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
