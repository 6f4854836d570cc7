#include "finer/cli/pipeline.hpp"
#include "support.hpp"

namespace finer::testkit {

namespace fs = std::filesystem;

cli::RunConfig toy_config(const ToyDataset& d, const fs::path& run_dir, const fs::path& cache_dir) {
  cli::RunConfig c;
  c.manifest = d.manifest;
  c.run_dir = run_dir;
  c.cache_dir = cache_dir;
  c.mock = true;
  c.mock_script = d.script;
  c.discovery = cli::DiscoveryMode::manifest;
  return c;
}

ToyRun run_toy_pipeline(const cli::RunConfig& config) {
  auto s = cli::open_session(config);
  cli::discover(*s);
  cli::classify(*s);
  ToyRun out;
  out.report = cli::evaluate(*s);
  const auto refined = s->run.read<run_files::CandidatesRefined>(run_files::kCandidatesRefined);
  out.refined = refined.candidates.refined;
  out.removed = refined.candidates.removed;
  out.backend_calls = s->providers->backend_calls();
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto bytes = read_file(e.path().string());
    out[e.path().filename().string()] = std::string(bytes.begin(), bytes.end());
  }
  return out;
}

}  // namespace finer::testkit
