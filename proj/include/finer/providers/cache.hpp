#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "finer/providers/backend.hpp"

namespace finer::providers {

// Digest over (role, model, canonical request). The request must already have
// image bytes replaced by their SHA-256. nlohmann objects keep keys sorted and
// compact dumps carry no insignificant whitespace, so the serialization is
// canonical.
std::string cache_key(Role role, std::string_view model_name, const nlohmann::json& request_body);

// Append-only directory of responses, one file per digest. Readers are
// lock-free; writers publish via rename, so identical concurrent writes are
// harmless.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  // FINER_CACHE_DIR, falling back to `fallback`.
  static std::shared_ptr<ResponseCache> from_env(const std::filesystem::path& fallback);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, std::string_view value) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path file_for(const std::string& key) const;
  std::filesystem::path dir_;
};

}  // namespace finer::providers
