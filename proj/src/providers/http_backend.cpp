#include "finer/providers/http_backend.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <regex>
#include <thread>

namespace finer::providers {

HttpBackend::HttpBackend(ProviderEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
  endpoint_.validate();
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_.base_url, m, url_re)) {
    throw InputError("config", std::string(to_string(endpoint_.role)) + ": invalid base_url '" +
                                   endpoint_.base_url + "'");
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].str();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

nlohmann::json HttpBackend::post(const std::string& route, const nlohmann::json& body) {
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + route;
  const auto timeout = endpoint_.timeout;

  for (int attempt = 0;; ++attempt) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (!endpoint_.bearer_token.empty()) client.set_bearer_token_auth(endpoint_.bearer_token);

    std::string failure;
    int status = 0;
    bool retryable = true;
    if (auto res = client.Post(path, payload, "application/json")) {
      status = res->status;
      if (status >= 200 && status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
          throw TransportError(path + ": response is not JSON: " + e.what(), status, false);
        }
      }
      failure = path + ": HTTP " + std::to_string(status) + " " + res->body.substr(0, 200);
      retryable = status >= 500 || status == 429;
    } else {
      failure = path + ": " + httplib::to_string(res.error());
    }

    if (!retryable || attempt >= retry_.retries) {
      throw TransportError(failure + " (after " + std::to_string(attempt + 1) + " attempts)", status,
                           retryable);
    }
    const auto delay = retry_.base_delay * (1 << attempt);
    spdlog::warn("{} failed ({}); retrying in {} ms", to_string(endpoint_.role), failure,
                 delay.count());
    std::this_thread::sleep_for(delay);
  }
}

}  // namespace finer::providers
