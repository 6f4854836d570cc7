#include "finer/core/run_files.hpp"

#include <fstream>

#include "finer/core/digest.hpp"
#include "finer/core/error.hpp"

namespace finer::run_files {

using nlohmann::json;

json to_json(const SuperCategories& v) {
  json images = json::array();
  for (const auto& [id, g] : v.per_image) images.push_back({{"id", id}, {"super_category", g}});
  return {{"images", images}};
}

void from_json(const json& j, SuperCategories& v) {
  v.per_image.clear();
  for (const auto& e : j.at("images")) {
    v.per_image.emplace_back(e.at("id").get<std::string>(), e.at("super_category").get<std::string>());
  }
}

json to_json(const Attributes& v) { return {{"super_categories", v.by_super_category}}; }

void from_json(const json& j, Attributes& v) {
  v.by_super_category = j.at("super_categories").get<std::map<std::string, std::vector<std::string>>>();
}

json to_json(const Descriptions& v) {
  json images = json::array();
  for (const auto& b : v.bundles) {
    json pairs = json::array();
    for (const auto& d : b.descriptions) {
      json p = {{"attribute", d.attribute}, {"text", d.text}};
      if (d.empty_answer) p["empty_answer"] = true;
      pairs.push_back(std::move(p));
    }
    images.push_back({{"id", b.image_id},
                      {"super_category", b.super_category},
                      {"attributes", b.attributes},
                      {"descriptions", pairs}});
  }
  return {{"images", images}};
}

void from_json(const json& j, Descriptions& v) {
  v.bundles.clear();
  for (const auto& e : j.at("images")) {
    AttributeBundle b;
    b.image_id = e.at("id").get<std::string>();
    b.super_category = e.at("super_category").get<std::string>();
    b.attributes = e.at("attributes").get<std::vector<std::string>>();
    for (const auto& p : e.at("descriptions")) {
      b.descriptions.push_back({p.at("attribute").get<std::string>(), p.at("text").get<std::string>(),
                                p.value("empty_answer", false)});
    }
    v.bundles.push_back(std::move(b));
  }
}

json to_json(const CandidatesRaw& v) {
  json per_image = json::array();
  for (const auto& r : v.per_image) {
    per_image.push_back(
        {{"id", r.image_id}, {"names", r.names}, {"summary", r.summary}, {"raw_text", r.raw_text}});
  }
  return {{"names", v.names}, {"per_image", per_image}};
}

void from_json(const json& j, CandidatesRaw& v) {
  v.names = j.at("names").get<std::vector<std::string>>();
  v.per_image.clear();
  for (const auto& e : j.at("per_image")) {
    v.per_image.push_back({e.at("id").get<std::string>(),
                           e.at("summary").get<std::vector<std::string>>(),
                           e.at("names").get<std::vector<std::string>>(),
                           e.at("raw_text").get<std::string>()});
  }
}

json to_json(const CandidatesRefined& v) {
  json assignments = json::array();
  for (const auto& a : v.assignments) {
    assignments.push_back({{"id", a.image_id}, {"name", a.name}, {"score", a.score}});
  }
  return {{"raw", v.candidates.raw},
          {"refined", v.candidates.refined},
          {"removed", v.candidates.removed},
          {"assignments", assignments}};
}

void from_json(const json& j, CandidatesRefined& v) {
  v.candidates.raw = j.at("raw").get<std::vector<std::string>>();
  v.candidates.refined = j.at("refined").get<std::vector<std::string>>();
  v.candidates.removed = j.at("removed").get<std::vector<std::string>>();
  v.assignments.clear();
  for (const auto& a : j.at("assignments")) {
    v.assignments.push_back(
        {a.at("id").get<std::string>(), a.at("name").get<std::string>(), a.at("score").get<double>()});
  }
}

json to_json(const ClassifierBundle& v) {
  json classes = json::array();
  std::size_t dim = 0;
  for (const auto& c : v.classes) {
    dim = c.w_mm.dim();
    classes.push_back({{"name", c.name},
                       {"support", c.support},
                       {"w_txt", encode_f32(c.w_txt.values())},
                       {"w_img", encode_f32(c.w_img.values())},
                       {"w_mm", encode_f32(c.w_mm.values())}});
  }
  return {{"alpha", v.alpha}, {"k_augment", v.k_augment}, {"dim", dim}, {"classes", classes}};
}

void from_json(const json& j, ClassifierBundle& v) {
  v.alpha = j.at("alpha").get<double>();
  v.k_augment = j.at("k_augment").get<int>();
  const auto dim = j.at("dim").get<std::size_t>();
  v.classes.clear();
  for (const auto& c : j.at("classes")) {
    ClassWeights w;
    w.name = c.at("name").get<std::string>();
    w.support = c.at("support").get<std::size_t>();
    w.w_txt = Embedding(decode_f32(c.at("w_txt").get<std::string>()));
    w.w_img = Embedding(decode_f32(c.at("w_img").get<std::string>()));
    w.w_mm = Embedding(decode_f32(c.at("w_mm").get<std::string>()));
    if (w.w_txt.dim() != dim || w.w_img.dim() != dim || w.w_mm.dim() != dim) {
      throw Error("classifier", "classifier.json: weight dim does not match declared dim");
    }
    v.classes.push_back(std::move(w));
  }
}

json to_json(const Predictions& v) {
  json preds = json::array();
  for (const auto& p : v.predictions) {
    json runner = json::array();
    for (const auto& [name, score] : p.runner_ups) runner.push_back({name, score});
    preds.push_back(
        {{"id", p.image_id}, {"name", p.predicted_name}, {"score", p.score}, {"runner_ups", runner}});
  }
  return {{"predictions", preds}};
}

void from_json(const json& j, Predictions& v) {
  v.predictions.clear();
  for (const auto& e : j.at("predictions")) {
    Prediction p;
    p.image_id = e.at("id").get<std::string>();
    p.predicted_name = e.at("name").get<std::string>();
    p.score = e.at("score").get<double>();
    for (const auto& r : e.value("runner_ups", json::array())) {
      p.runner_ups.emplace_back(r.at(0).get<std::string>(), r.at(1).get<double>());
    }
    v.predictions.push_back(std::move(p));
  }
}

json to_json(const EvalReport& v) {
  json matching = json::array();
  for (const auto& [pred, truth] : v.matching) matching.push_back({pred, truth});
  return {{"cacc", v.cacc},
          {"sacc", v.sacc},
          {"matching", matching},
          {"n_test", v.n_test},
          {"config_digest", v.config_digest}};
}

void from_json(const json& j, EvalReport& v) {
  v.cacc = j.at("cacc").get<double>();
  v.sacc = j.at("sacc").get<double>();
  v.n_test = j.at("n_test").get<std::size_t>();
  v.config_digest = j.at("config_digest").get<std::string>();
  v.matching.clear();
  for (const auto& m : j.at("matching")) {
    v.matching.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
  }
}

RunDir::RunDir(std::filesystem::path root, std::string config_digest)
    : root_(std::move(root)), digest_(std::move(config_digest)) {}

bool RunDir::exists(const std::string& file) const { return std::filesystem::exists(path(file)); }

void RunDir::write_json(const std::string& file, const json& j) const {
  write_file_atomic(path(file).string(), j.dump(2) + "\n");
}

json RunDir::read_json(const std::string& file) const {
  const auto p = path(file);
  if (!std::filesystem::exists(p)) throw InputError("run", "missing " + p.string());
  std::ifstream in(p);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("run", "malformed " + p.string() + ": " + e.what());
  }
  const auto digest = j.value("config_digest", std::string{});
  if (digest != digest_) {
    throw Error("run", p.string() + " was written under config " + digest.substr(0, 12) +
                           ", current config is " + digest_.substr(0, 12) +
                           "; rerun the earlier stage");
  }
  return j;
}

}  // namespace finer::run_files
