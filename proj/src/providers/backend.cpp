#include "finer/providers/backend.hpp"

namespace finer::providers {

const char* to_string(Role r) {
  switch (r) {
    case Role::vqa: return "vqa";
    case Role::llm: return "llm";
    case Role::image_embed: return "image_embed";
    case Role::text_embed: return "text_embed";
    case Role::sentence_embed: return "sentence_embed";
  }
  return "vqa";
}

Role parse_role(const std::string& s) {
  for (Role r : kAllRoles) {
    if (s == to_string(r)) return r;
  }
  throw InputError("config", "unknown provider role '" + s + "'");
}

const char* route_for(Role r) {
  switch (r) {
    case Role::vqa: return kVqaRoute;
    case Role::llm: return kChatRoute;
    default: return kEmbedRoute;
  }
}

const char* embed_kind(Role r) {
  switch (r) {
    case Role::image_embed: return "image";
    case Role::text_embed: return "text";
    case Role::sentence_embed: return "sentence";
    default: throw Error("provider", std::string("role ") + to_string(r) + " is not an embed role");
  }
}

void ProviderEndpoint::validate() const {
  if (max_concurrency < 1) {
    throw InputError("config", std::string(to_string(role)) + ": max_concurrency must be >= 1");
  }
  if (timeout.count() <= 0) {
    throw InputError("config", std::string(to_string(role)) + ": timeout must be positive");
  }
}

}  // namespace finer::providers
