#include "finer/providers/mock_backend.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <random>

#include "finer/core/digest.hpp"

namespace finer::providers {

using nlohmann::json;

MockScript MockScript::from_json(const json& j) {
  MockScript s;
  s.seed = j.value("seed", std::uint64_t{0});
  s.dim = j.value("dim", std::size_t{64});
  s.vqa_default = j.value("vqa_default", s.vqa_default);
  for (const auto& r : j.value("vqa", json::array())) {
    s.vqa.push_back({r.at("contains").get<std::string>(), r.at("answer").get<std::string>()});
  }
  for (const auto& r : j.value("chat", json::array())) {
    s.chat.push_back(
        {r.at("contains").get<std::string>(), r.at("completions").get<std::vector<std::string>>()});
  }
  if (j.contains("embeddings")) {
    const auto& e = j.at("embeddings");
    s.text_embeddings = e.value("text", std::map<std::string, std::vector<double>>{});
    s.sentence_embeddings = e.value("sentence", std::map<std::string, std::vector<double>>{});
  }
  const auto mode = j.value("image_embedding", std::string("hash"));
  if (mode == "hash") {
    s.image_embedding = ImageEmbedding::hash;
  } else if (mode == "mean_color") {
    s.image_embedding = ImageEmbedding::mean_color;
  } else {
    throw InputError("mock", "unknown image_embedding mode '" + mode + "'");
  }
  auto check_dim = [&](const auto& table) {
    for (const auto& [k, v] : table) {
      if (v.size() != s.dim) throw InputError("mock", "scripted embedding '" + k + "' has wrong dim");
    }
  };
  check_dim(s.text_embeddings);
  check_dim(s.sentence_embeddings);
  if (s.dim < 3 && s.image_embedding == ImageEmbedding::mean_color) {
    throw InputError("mock", "mean_color image embeddings need dim >= 3");
  }
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("mock", "cannot open mock script " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InputError("mock", "malformed mock script " + path.string() + ": " + e.what());
  }
}

Embedding hash_embedding(std::string_view payload, std::uint64_t seed, std::size_t dim) {
  const std::string key = std::to_string(seed) + ":" + sha256_hex(payload);
  std::mt19937_64 rng(digest64(key));
  std::vector<double> v(dim);
  for (auto& x : v) {
    // 53 random mantissa bits mapped to [-1, 1); does not depend on the
    // standard library's distribution implementations.
    x = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
  }
  return normalize(Embedding(std::move(v)));
}

std::vector<double> mean_color(std::span<const std::uint8_t> image) {
  const cv::Mat buf(1, static_cast<int>(image.size()), CV_8UC1, const_cast<std::uint8_t*>(image.data()));
  const cv::Mat img = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (img.empty()) throw Error("mock", "undecodable image payload");
  const cv::Scalar m = cv::mean(img);  // BGR
  return {m[2] / 255.0, m[1] / 255.0, m[0] / 255.0};
}

std::string color_name(std::span<const std::uint8_t> image) {
  static const std::array<std::pair<const char*, std::array<double, 3>>, 7> palette{{
      {"red", {1, 0, 0}},
      {"green", {0, 1, 0}},
      {"blue", {0, 0, 1}},
      {"yellow", {1, 1, 0}},
      {"cyan", {0, 1, 1}},
      {"magenta", {1, 0, 1}},
      {"white", {1, 1, 1}},
  }};
  const auto rgb = mean_color(image);
  const Embedding c{rgb[0], rgb[1], rgb[2]};
  if (!(c.norm() > 0.0)) return "black";
  std::string best;
  double best_score = -2.0;
  for (const auto& [name, p] : palette) {
    const double s = cosine(c, Embedding{p[0], p[1], p[2]});
    if (s > best_score) {
      best_score = s;
      best = name;
    }
  }
  return best;
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

json MockBackend::post(const std::string& route, const json& body) {
  try {
    if (route == kVqaRoute) return vqa(body);
    if (route == kChatRoute) return chat(body);
    if (route == kEmbedRoute) return embed(body);
  } catch (const json::exception& e) {
    throw TransportError(route + ": bad request: " + e.what(), 400, false);
  }
  throw TransportError("unknown route " + route, 404, false);
}

json MockBackend::vqa(const json& body) const {
  const auto prompt = body.at("prompt").get<std::string>();
  const Bytes image = base64_decode(body.at("image_b64").get<std::string>());
  std::string answer = script_.vqa_default;
  for (const auto& rule : script_.vqa) {
    if (prompt.find(rule.contains) != std::string::npos) {
      answer = rule.answer;
      break;
    }
  }
  if (const auto pos = answer.find("{color}"); pos != std::string::npos) {
    answer.replace(pos, 7, color_name(image));
  }
  return {{"answer", answer}};
}

json MockBackend::chat(const json& body) const {
  const auto prompt = body.at("prompt").get<std::string>();
  const int n = body.at("n").get<int>();
  if (n < 1) throw TransportError("chat: n must be >= 1", 400, false);
  json choices = json::array();
  for (const auto& rule : script_.chat) {
    if (prompt.find(rule.contains) != std::string::npos && !rule.completions.empty()) {
      for (int i = 0; i < n; ++i) choices.push_back(rule.completions[i % rule.completions.size()]);
      return {{"choices", choices}};
    }
  }
  const bool wants_json = prompt.find("JSON") != std::string::npos;
  for (int i = 0; i < n; ++i) {
    const auto h = sha256_hex(std::to_string(script_.seed) + ":" + std::to_string(i) + ":" + prompt);
    if (wants_json) {
      json obj = {{"summary", {"mock summary"}},
                  {"names", {"name-" + h.substr(0, 6), "name-" + h.substr(6, 6), "name-" + h.substr(12, 6)}}};
      choices.push_back(obj.dump());
    } else {
      choices.push_back("- attribute " + h.substr(0, 4) + "\n- attribute " + h.substr(4, 4));
    }
  }
  return {{"choices", choices}};
}

json MockBackend::embed(const json& body) const {
  const auto kind = body.at("kind").get<std::string>();
  const auto payload = body.at("payload").get<std::string>();
  Embedding v;
  if (kind == "image") {
    const Bytes image = base64_decode(payload);
    if (script_.image_embedding == ImageEmbedding::mean_color) {
      std::vector<double> values(script_.dim, 0.0);
      const auto rgb = mean_color(image);
      std::copy(rgb.begin(), rgb.end(), values.begin());
      v = Embedding(std::move(values));
    } else {
      v = hash_embedding(std::string_view(reinterpret_cast<const char*>(image.data()), image.size()),
                         script_.seed, script_.dim);
    }
  } else if (kind == "text" || kind == "sentence") {
    const auto& table = kind == "text" ? script_.text_embeddings : script_.sentence_embeddings;
    if (auto it = table.find(payload); it != table.end()) {
      v = Embedding(it->second);
    } else {
      v = hash_embedding(payload, script_.seed, script_.dim);
    }
  } else {
    throw TransportError("embed: unknown kind '" + kind + "'", 400, false);
  }
  std::vector<float> f32(v.values().begin(), v.values().end());
  return {{"vector", f32}, {"dim", f32.size()}};
}

}  // namespace finer::providers
