#include "finer/providers/cache.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "finer/core/digest.hpp"

namespace finer::providers {

std::string cache_key(Role role, std::string_view model_name, const nlohmann::json& request_body) {
  const nlohmann::json envelope = {
      {"role", to_string(role)}, {"model", std::string(model_name)}, {"body", request_body}};
  return sha256_hex(envelope.dump());
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::shared_ptr<ResponseCache> ResponseCache::from_env(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("FINER_CACHE_DIR"); env != nullptr && *env != '\0') {
    return std::make_shared<ResponseCache>(env);
  }
  return std::make_shared<ResponseCache>(fallback);
}

std::filesystem::path ResponseCache::file_for(const std::string& key) const {
  // Two-level fan-out keeps directories small on long runs.
  return dir_ / key.substr(0, 2) / key;
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(file_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void ResponseCache::put(const std::string& key, std::string_view value) const {
  write_file_atomic(file_for(key).string(), value);
}

}  // namespace finer::providers
