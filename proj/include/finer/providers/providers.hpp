#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finer/core/embedding.hpp"
#include "finer/providers/backend.hpp"
#include "finer/providers/cache.hpp"

namespace finer::providers {

// One model role: a backend, its endpoint metadata, and the shared cache.
// Bounds in-flight requests to the endpoint's max_concurrency.
class RoleClient {
 public:
  RoleClient(ProviderEndpoint endpoint, std::shared_ptr<Backend> backend,
             std::shared_ptr<ResponseCache> cache, bool read_cache = true);

  // Serves `key_body` from the cache when possible, otherwise posts `body`.
  nlohmann::json call(const nlohmann::json& body, const nlohmann::json& key_body);

  std::optional<nlohmann::json> cached(const nlohmann::json& key_body) const;
  void store(const nlohmann::json& key_body, const nlohmann::json& response) const;
  nlohmann::json post(const nlohmann::json& body);

  const ProviderEndpoint& endpoint() const noexcept { return endpoint_; }
  std::size_t backend_calls() const noexcept { return calls_.load(); }
  int peak_in_flight() const noexcept { return peak_.load(); }

  // Records the dim of the first response; throws "provider dim drift" after.
  void check_dim(std::size_t dim);

 private:
  ProviderEndpoint endpoint_;
  std::shared_ptr<Backend> backend_;
  std::shared_ptr<ResponseCache> cache_;
  bool read_cache_;
  std::counting_semaphore<1024> slots_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::mutex dim_mutex_;
  std::optional<std::size_t> dim_;
};

// The five model roles behind one facade. Safe for concurrent use.
class Providers {
 public:
  Providers(std::array<std::unique_ptr<RoleClient>, 5> clients);

  std::string vqa_answer(std::span<const std::uint8_t> image, std::string_view prompt);
  std::vector<std::string> llm_complete(std::string_view prompt, double temperature, int n_samples);
  Embedding embed_image(std::span<const std::uint8_t> image);
  Embedding embed_text(std::string_view text);
  Embedding embed_sentence(std::string_view text);

  RoleClient& client(Role r) { return *clients_[static_cast<std::size_t>(r)]; }
  const RoleClient& client(Role r) const { return *clients_[static_cast<std::size_t>(r)]; }

  // Requests that reached a backend (cache misses), summed over roles.
  std::size_t backend_calls() const;

 private:
  Embedding embed(Role role, const std::string& payload, const nlohmann::json& key_payload);

  std::array<std::unique_ptr<RoleClient>, 5> clients_;
};

// Every role served by one shared backend (mock runs, single shim).
std::unique_ptr<Providers> make_providers(std::shared_ptr<Backend> backend,
                                          std::shared_ptr<ResponseCache> cache,
                                          bool read_cache = true, int max_concurrency = 4,
                                          std::string model_name = "mock");

}  // namespace finer::providers
