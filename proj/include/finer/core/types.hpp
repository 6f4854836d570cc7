#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "finer/core/embedding.hpp"

namespace finer {

// The reserved general attribute and its VQA prompt.
inline constexpr const char* kGeneralAttribute = "General description of the image";
inline constexpr const char* kGeneralPrompt = "Questions: Describe this image in details. Answer:";

enum class Split { discovery, train, test };

const char* to_string(Split s);
Split parse_split(const std::string& s);

struct ImageRecord {
  std::string id;
  std::string source;  // file path
  std::optional<std::string> ground_truth;
  Split split = Split::test;
};

struct AttributeDescription {
  std::string attribute;
  std::string text;
  bool empty_answer = false;
};

struct AttributeBundle {
  std::string image_id;
  std::string super_category;
  std::vector<std::string> attributes;
  std::vector<AttributeDescription> descriptions;
};

struct CandidateSet {
  std::vector<std::string> raw;
  std::vector<std::string> refined;
  std::vector<std::string> removed;
};

struct ReasonerOutput {
  std::string image_id;
  std::vector<std::string> summary;
  std::vector<std::string> names;
  std::string raw_text;
};

// One discovery image assigned to its nearest candidate name.
struct ImageAssignment {
  std::string image_id;
  std::string name;
  double score = 0.0;
};

struct ClassWeights {
  std::string name;
  Embedding w_txt;
  Embedding w_img;
  Embedding w_mm;
  std::size_t support = 0;
};

struct ClassifierBundle {
  std::vector<ClassWeights> classes;
  double alpha = 0.7;
  int k_augment = 10;

  std::vector<std::pair<std::string, Embedding>> fused() const;
};

struct Prediction {
  std::string image_id;
  std::string predicted_name;
  double score = 0.0;
  std::vector<std::pair<std::string, double>> runner_ups;
};

struct EvalReport {
  double cacc = 0.0;
  double sacc = 0.0;
  std::vector<std::pair<std::string, std::string>> matching;
  std::size_t n_test = 0;
  std::string config_digest;
};

}  // namespace finer
