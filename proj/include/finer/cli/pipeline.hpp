#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finer/cli/config.hpp"
#include "finer/core/run_files.hpp"
#include "finer/core/types.hpp"
#include "finer/eval/manifest.hpp"
#include "finer/providers/providers.hpp"
#include "finer/translate/templates.hpp"

namespace finer::cli {

// Exclusive marker file in the run directory; a second process touching the
// same run fails instead of interleaving writes.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

std::unique_ptr<providers::Providers> build_providers(const RunConfig& config);

struct Session {
  RunConfig config;
  std::string digest;
  eval::DatasetManifest manifest;
  translate::TemplateSet templates;
  run_files::RunDir run;
  std::unique_ptr<providers::Providers> providers;
};

// Validates the config, loads the manifest and opens the run directory.
std::unique_ptr<Session> open_session(const RunConfig& config);

std::vector<ImageRecord> discovery_images(const RunConfig& config, const eval::DatasetManifest& manifest);

void discover(Session& s);
void classify(Session& s);

enum class Sweep { alpha, k };
EvalReport evaluate(Session& s, std::optional<Sweep> sweep = {});

inline constexpr int kSweepK[] = {0, 1, 3, 5, 10, 20};

struct ReportRow {
  std::string run;
  std::size_t n_test = 0;
  double cacc = 0.0;
  double sacc = 0.0;
};

// A directory holding report.json is one row; otherwise its seed_* children
// that hold one are collected.
std::vector<ReportRow> collect_reports(const std::vector<std::filesystem::path>& dirs);
std::string format_report(const std::vector<ReportRow>& rows, bool csv = false);

}  // namespace finer::cli
