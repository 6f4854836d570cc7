#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "finer/core/digest.hpp"
#include "finer/core/embedding.hpp"
#include "finer/core/types.hpp"

namespace finer::testkit {

std::filesystem::path source_dir();
std::filesystem::path cli_binary();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "finer");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

Bytes solid_png(int r, int g, int b, int w = 24, int h = 24);
Bytes noise_png(std::uint64_t seed, int w = 32, int h = 24);

struct ToyClass {
  std::string name;
  std::string color;  // mock palette name
  int r, g, b;
  std::vector<std::string> distractors;  // two names the reasoner also emits
};

// Five solid-colour bird classes, each with two distractor names that live in
// embedding dimensions orthogonal to every colour.
const std::vector<ToyClass>& toy_classes();

struct ToyDataset {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path script;
};

// Writes PNGs, a CSV manifest (3 discovery + n_test test images per class)
// and the scripted mock JSON that makes the pipeline recover every class.
ToyDataset write_toy_dataset(const std::filesystem::path& dir, int n_test = 10);
nlohmann::json toy_script();
std::vector<std::string> toy_truth_names();

// Random helpers.
Embedding random_embedding(std::mt19937_64& rng, std::size_t dim);

// Brute-force oracles.
long long brute_force_assignment(const std::vector<std::vector<long long>>& w);
std::size_t brute_force_matched(const std::vector<std::string>& predicted, const std::vector<std::string>& truth);
std::vector<std::string> brute_force_refined(const std::vector<std::string>& names,
                                             const std::vector<Embedding>& name_embeddings,
                                             const std::vector<Embedding>& image_embeddings);

}  // namespace finer::testkit

namespace finer::testkit {

struct ParserCase {
  std::string label;
  std::string raw;
  std::vector<std::string> expected;
};

// Adversarial reasoner completions and the names each one must yield.
const std::vector<ParserCase>& parser_corpus();

}  // namespace finer::testkit

#include "finer/cli/config.hpp"

namespace finer::testkit {

cli::RunConfig toy_config(const ToyDataset& d, const std::filesystem::path& run_dir,
                          const std::filesystem::path& cache_dir);

struct ToyRun {
  EvalReport report;
  std::vector<std::string> refined;
  std::vector<std::string> removed;
  std::size_t backend_calls = 0;
};

// discover; classify; evaluate in-process.
ToyRun run_toy_pipeline(const cli::RunConfig& config);

// Every regular file in `dir` (not descending into cache/) mapped to its bytes.
std::map<std::string, std::string> snapshot(const std::filesystem::path& dir);

}  // namespace finer::testkit
