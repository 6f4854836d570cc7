#pragma once

#include <chrono>
#include <string>

#include "finer/providers/backend.hpp"

namespace finer::providers {

struct RetryPolicy {
  int retries = 3;                            // on top of the first attempt
  std::chrono::milliseconds base_delay{1000};  // doubles per retry: 1s, 2s, 4s
};

// JSON-over-HTTP client for one endpoint. Retries transport failures, 5xx and
// 429 with exponential backoff; any other 4xx is terminal.
class HttpBackend : public Backend {
 public:
  HttpBackend(ProviderEndpoint endpoint, RetryPolicy retry = {});

  nlohmann::json post(const std::string& route, const nlohmann::json& body) override;

 private:
  ProviderEndpoint endpoint_;
  RetryPolicy retry_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace finer::providers
