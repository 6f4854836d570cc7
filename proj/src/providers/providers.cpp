#include "finer/providers/providers.hpp"

#include <algorithm>

#include "finer/core/digest.hpp"

namespace finer::providers {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RoleClient::RoleClient(ProviderEndpoint endpoint, std::shared_ptr<Backend> backend,
                       std::shared_ptr<ResponseCache> cache, bool read_cache)
    : endpoint_(std::move(endpoint)),
      backend_(std::move(backend)),
      cache_(std::move(cache)),
      read_cache_(read_cache),
      slots_(std::min(endpoint_.max_concurrency, 1024)) {
  endpoint_.validate();
}

std::optional<json> RoleClient::cached(const json& key_body) const {
  if (!cache_ || !read_cache_) return std::nullopt;
  const auto hit = cache_->get(cache_key(endpoint_.role, endpoint_.model_name, key_body));
  if (!hit) return std::nullopt;
  try {
    return json::parse(*hit);
  } catch (const json::exception&) {
    return std::nullopt;  // torn or foreign file; refetch
  }
}

void RoleClient::store(const json& key_body, const json& response) const {
  if (cache_) cache_->put(cache_key(endpoint_.role, endpoint_.model_name, key_body), response.dump());
}

json RoleClient::post(const json& body) {
  slots_.acquire();
  const int now = ++in_flight_;
  int peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  ++calls_;
  try {
    json out = backend_->post(route_for(endpoint_.role), body);
    --in_flight_;
    slots_.release();
    return out;
  } catch (...) {
    --in_flight_;
    slots_.release();
    throw;
  }
}

json RoleClient::call(const json& body, const json& key_body) {
  if (auto hit = cached(key_body)) return *hit;
  json response = post(body);
  store(key_body, response);
  return response;
}

void RoleClient::check_dim(std::size_t dim) {
  std::lock_guard lock(dim_mutex_);
  if (!dim_) {
    dim_ = dim;
  } else if (*dim_ != dim) {
    throw Error("provider", std::string(to_string(endpoint_.role)) + ": provider dim drift (" +
                                std::to_string(*dim_) + " then " + std::to_string(dim) + ")");
  }
}

Providers::Providers(std::array<std::unique_ptr<RoleClient>, 5> clients)
    : clients_(std::move(clients)) {
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    if (!clients_[i] || clients_[i]->endpoint().role != kAllRoles[i]) {
      throw Error("provider", "provider clients must be given in role order");
    }
  }
}

std::string Providers::vqa_answer(std::span<const std::uint8_t> image, std::string_view prompt) {
  if (prompt.empty()) throw Error("provider", "vqa: empty prompt");
  const json body = {{"image_b64", base64_encode(image)}, {"prompt", std::string(prompt)}};
  const json key = {{"image_sha256", sha256_hex(image)}, {"prompt", std::string(prompt)}};
  const json response = client(Role::vqa).call(body, key);
  std::string answer = trim(response.at("answer").get<std::string>());
  if (answer.empty()) throw EmptyAnswer();
  return answer;
}

std::vector<std::string> Providers::llm_complete(std::string_view prompt, double temperature,
                                                 int n_samples) {
  if (temperature < 0.0 || temperature > 2.0) throw Error("provider", "llm: temperature outside [0,2]");
  if (n_samples < 1) throw Error("provider", "llm: n_samples must be >= 1");
  auto& c = client(Role::llm);
  auto key_for = [&](int i) {
    return json{{"prompt", std::string(prompt)}, {"temperature", temperature}, {"sample_index", i}};
  };

  std::vector<std::string> out(static_cast<std::size_t>(n_samples));
  std::vector<int> missing;
  for (int i = 0; i < n_samples; ++i) {
    if (auto hit = c.cached(key_for(i))) {
      out[i] = hit->at("text").get<std::string>();
    } else {
      missing.push_back(i);
    }
  }
  if (missing.empty()) return out;

  const json body = {{"prompt", std::string(prompt)},
                     {"temperature", temperature},
                     {"n", static_cast<int>(missing.size())}};
  const json response = c.post(body);
  const auto& choices = response.at("choices");
  if (choices.size() < missing.size()) {
    throw Error("provider", "llm: asked for " + std::to_string(missing.size()) + " completions, got " +
                                std::to_string(choices.size()));
  }
  for (std::size_t k = 0; k < missing.size(); ++k) {
    const int i = missing[k];
    out[i] = choices[k].get<std::string>();
    c.store(key_for(i), json{{"text", out[i]}});
  }
  return out;
}

Embedding Providers::embed(Role role, const std::string& payload, const json& key_payload) {
  if (payload.empty()) throw Error("provider", std::string(to_string(role)) + ": empty input");
  const json body = {{"kind", embed_kind(role)}, {"payload", payload}};
  const json key = {{"kind", embed_kind(role)}, {"payload", key_payload}};
  auto& c = client(role);
  const json response = c.call(body, key);
  auto values = response.at("vector").get<std::vector<double>>();
  const auto declared = response.value("dim", values.size());
  if (declared != values.size() || values.empty()) {
    throw Error("provider", std::string(to_string(role)) + ": vector length does not match dim");
  }
  c.check_dim(values.size());
  return Embedding(std::move(values));
}

Embedding Providers::embed_image(std::span<const std::uint8_t> image) {
  if (image.empty()) throw Error("provider", "image_embed: empty input");
  return embed(Role::image_embed, base64_encode(image), json{{"image_sha256", sha256_hex(image)}});
}

Embedding Providers::embed_text(std::string_view text) {
  return embed(Role::text_embed, std::string(text), std::string(text));
}

Embedding Providers::embed_sentence(std::string_view text) {
  return embed(Role::sentence_embed, std::string(text), std::string(text));
}

std::size_t Providers::backend_calls() const {
  std::size_t n = 0;
  for (const auto& c : clients_) n += c->backend_calls();
  return n;
}

std::unique_ptr<Providers> make_providers(std::shared_ptr<Backend> backend,
                                          std::shared_ptr<ResponseCache> cache, bool read_cache,
                                          int max_concurrency, std::string model_name) {
  std::array<std::unique_ptr<RoleClient>, 5> clients;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    ProviderEndpoint ep;
    ep.role = kAllRoles[i];
    ep.model_name = model_name;
    ep.max_concurrency = max_concurrency;
    clients[i] = std::make_unique<RoleClient>(ep, backend, cache, read_cache);
  }
  return std::make_unique<Providers>(std::move(clients));
}

}  // namespace finer::providers
