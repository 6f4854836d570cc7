#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "finer/core/error.hpp"

namespace finer::providers {

enum class Role { vqa, llm, image_embed, text_embed, sentence_embed };

inline constexpr Role kAllRoles[] = {Role::vqa, Role::llm, Role::image_embed, Role::text_embed,
                                     Role::sentence_embed};

const char* to_string(Role r);
Role parse_role(const std::string& s);

// Wire routes. Every backend speaks JSON bodies on these three routes.
inline constexpr const char* kVqaRoute = "/v1/vqa";
inline constexpr const char* kChatRoute = "/v1/chat";
inline constexpr const char* kEmbedRoute = "/v1/embed";

const char* route_for(Role r);
// "image" | "text" | "sentence" for the embed roles.
const char* embed_kind(Role r);

struct ProviderEndpoint {
  Role role = Role::vqa;
  std::string base_url;
  std::string model_name = "mock";
  std::chrono::milliseconds timeout{60000};
  int max_concurrency = 4;
  std::string bearer_token;

  void validate() const;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, bool retryable)
      : Error("provider", what), status_(status), retryable_(retryable) {}
  int status() const noexcept { return status_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  bool retryable_;
};

class EmptyAnswer : public Error {
 public:
  EmptyAnswer() : Error("provider", "provider returned empty") {}
};

// Anything that answers the wire contract: a remote server, or an in-process
// mock. Implementations must be safe for concurrent use.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual nlohmann::json post(const std::string& route, const nlohmann::json& body) = 0;
};

}  // namespace finer::providers
