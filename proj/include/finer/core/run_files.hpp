#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "finer/core/types.hpp"

namespace finer::run_files {

inline constexpr const char* kSuperCategories = "supercategories.json";
inline constexpr const char* kAttributes = "attributes.json";
inline constexpr const char* kDescriptions = "descriptions.json";
inline constexpr const char* kCandidatesRaw = "candidates_raw.json";
inline constexpr const char* kCandidatesRefined = "candidates_refined.json";
inline constexpr const char* kClassifier = "classifier.json";
inline constexpr const char* kPredictions = "predictions.json";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kPredictionsCsv = "predictions.csv";

struct SuperCategories {
  std::vector<std::pair<std::string, std::string>> per_image;  // id -> g_n
};

struct Attributes {
  std::map<std::string, std::vector<std::string>> by_super_category;
};

struct Descriptions {
  std::vector<AttributeBundle> bundles;
};

struct CandidatesRaw {
  std::vector<std::string> names;
  std::vector<ReasonerOutput> per_image;
};

struct CandidatesRefined {
  CandidateSet candidates;
  std::vector<ImageAssignment> assignments;
};

struct Predictions {
  std::vector<Prediction> predictions;
};

nlohmann::json to_json(const SuperCategories& v);
nlohmann::json to_json(const Attributes& v);
nlohmann::json to_json(const Descriptions& v);
nlohmann::json to_json(const CandidatesRaw& v);
nlohmann::json to_json(const CandidatesRefined& v);
nlohmann::json to_json(const ClassifierBundle& v);
nlohmann::json to_json(const Predictions& v);
nlohmann::json to_json(const EvalReport& v);

void from_json(const nlohmann::json& j, SuperCategories& v);
void from_json(const nlohmann::json& j, Attributes& v);
void from_json(const nlohmann::json& j, Descriptions& v);
void from_json(const nlohmann::json& j, CandidatesRaw& v);
void from_json(const nlohmann::json& j, CandidatesRefined& v);
void from_json(const nlohmann::json& j, ClassifierBundle& v);
void from_json(const nlohmann::json& j, Predictions& v);
void from_json(const nlohmann::json& j, EvalReport& v);

// A run directory. Every file written through it carries the config digest,
// and every read rejects files written under a different digest.
class RunDir {
 public:
  RunDir(std::filesystem::path root, std::string config_digest);

  const std::filesystem::path& root() const noexcept { return root_; }
  const std::string& config_digest() const noexcept { return digest_; }
  std::filesystem::path path(const std::string& file) const { return root_ / file; }
  bool exists(const std::string& file) const;

  template <typename T>
  void write(const std::string& file, const T& value) const {
    auto j = to_json(value);
    j["config_digest"] = digest_;
    write_json(file, j);
  }

  template <typename T>
  T read(const std::string& file) const {
    T value;
    from_json(read_json(file), value);
    return value;
  }

  void write_json(const std::string& file, const nlohmann::json& j) const;
  // Throws InputError when missing, Error when the digest differs.
  nlohmann::json read_json(const std::string& file) const;

 private:
  std::filesystem::path root_;
  std::string digest_;
};

}  // namespace finer::run_files
