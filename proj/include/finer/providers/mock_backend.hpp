#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "finer/core/embedding.hpp"
#include "finer/providers/backend.hpp"

namespace finer::providers {

// Pattern rules consulted before the hash fallbacks. The first rule whose
// `contains` substring occurs in the prompt wins.
struct VqaRule {
  std::string contains;
  std::string answer;  // "{color}" expands to the image's dominant colour name
};

struct ChatRule {
  std::string contains;
  std::vector<std::string> completions;  // sample i gets completions[i % size]
};

enum class ImageEmbedding { hash, mean_color };

struct MockScript {
  std::uint64_t seed = 0;
  std::size_t dim = 64;
  std::string vqa_default = "object";
  std::vector<VqaRule> vqa;
  std::vector<ChatRule> chat;
  std::map<std::string, std::vector<double>> text_embeddings;
  std::map<std::string, std::vector<double>> sentence_embeddings;
  ImageEmbedding image_embedding = ImageEmbedding::hash;

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
};

// Deterministic in-process provider. Without rules:
//  - VQA answers a fixed string,
//  - chat returns a hash-named JSON candidate object when the prompt asks for
//    JSON, otherwise a hash-named attribute list,
//  - every embedding is the unit-normalized seeded hash of the payload.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script = {});

  nlohmann::json post(const std::string& route, const nlohmann::json& body) override;

  const MockScript& script() const noexcept { return script_; }

 private:
  nlohmann::json vqa(const nlohmann::json& body) const;
  nlohmann::json chat(const nlohmann::json& body) const;
  nlohmann::json embed(const nlohmann::json& body) const;

  MockScript script_;
};

// Unit vector derived from SHA-256 of (seed, payload); platform independent.
Embedding hash_embedding(std::string_view payload, std::uint64_t seed, std::size_t dim);

// Mean RGB (in [0,1]) of a PNG/JPEG raster.
std::vector<double> mean_color(std::span<const std::uint8_t> image);
std::string color_name(std::span<const std::uint8_t> image);

}  // namespace finer::providers
