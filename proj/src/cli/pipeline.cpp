#include "finer/cli/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "finer/classifier/classifier.hpp"
#include "finer/core/digest.hpp"
#include "finer/core/error.hpp"
#include "finer/core/parallel.hpp"
#include "finer/eval/metrics.hpp"
#include "finer/providers/cache.hpp"
#include "finer/providers/http_backend.hpp"
#include "finer/providers/mock_backend.hpp"
#include "finer/reason/reason.hpp"
#include "finer/translate/translate.hpp"

namespace finer::cli {

namespace fs = std::filesystem;
using run_files::RunDir;

namespace {

constexpr int kWorkers = 8;

std::map<std::string, std::string> test_truths(const eval::DatasetManifest& manifest) {
  std::map<std::string, std::string> out;
  for (const auto& r : manifest.split(Split::test)) out.emplace(r.id, *r.ground_truth);
  return out;
}

std::vector<Embedding> embed_names(providers::Providers& p, std::span<const std::string> names,
                                   const std::optional<std::string>& name_template) {
  std::vector<Embedding> out(names.size());
  parallel_for(names.size(), kWorkers,
               [&](std::size_t i) { out[i] = p.embed_text(reason::class_text(names[i], name_template)); });
  return out;
}

struct Scores {
  double cacc;
  double sacc;
};

Scores score(Session& s, std::span<const Prediction> preds, const std::map<std::string, std::string>& truths) {
  const auto c = eval::clustering_accuracy(preds, truths);
  const double sacc = eval::semantic_similarity(
      preds, truths, [&](const std::string& t) { return s.providers->embed_sentence(t); });
  return {c.cacc, sacc};
}

std::string predictions_csv(std::span<const Prediction> preds, const std::map<std::string, std::string>& truths) {
  auto quote = [](const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char ch : v) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return out + "\"";
  };
  std::string out = "image_id,predicted_name,score,ground_truth\n";
  for (const auto& p : preds) {
    const auto it = truths.find(p.image_id);
    out += fmt::format("{},{},{:.6f},{}\n", quote(p.image_id), quote(p.predicted_name), p.score,
                       quote(it == truths.end() ? "" : it->second));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path.string(), text);
}

}  // namespace

RunLock::RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
  fs::create_directories(run_dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw Error("run", "run directory is locked by another process (remove " + path_.string() +
                           " if it is stale)");
  }
  const auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::unique_ptr<providers::Providers> build_providers(const RunConfig& config) {
  const fs::path fallback = config.cache_dir.value_or(config.run_dir / "cache");
  auto cache = config.cache_dir ? std::make_shared<providers::ResponseCache>(*config.cache_dir)
                                : providers::ResponseCache::from_env(fallback);
  const bool read_cache = !config.force;
  if (config.mock) {
    providers::MockScript script;
    std::string model = "mock";
    if (config.mock_script) {
      script = providers::MockScript::load(*config.mock_script);
      model += "-" + sha256_hex(read_file(config.mock_script->string())).substr(0, 16);
    }
    auto backend = std::make_shared<providers::MockBackend>(std::move(script));
    return providers::make_providers(backend, cache, read_cache, 4, model);
  }
  std::array<std::unique_ptr<providers::RoleClient>, 5> clients;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const auto& ep = config.endpoints[i];
    clients[i] = std::make_unique<providers::RoleClient>(ep, std::make_shared<providers::HttpBackend>(ep),
                                                         cache, read_cache);
  }
  return std::make_unique<providers::Providers>(std::move(clients));
}

std::unique_ptr<Session> open_session(const RunConfig& config) {
  config.validate();
  auto manifest = eval::DatasetManifest::load(config.manifest);
  auto templates = config.templates();
  const auto digest = config.digest();
  fs::create_directories(config.run_dir);
  write_text(config.run_dir / "config.ini", config.to_ini());
  auto s = std::unique_ptr<Session>(new Session{config, digest, std::move(manifest), std::move(templates),
                                                RunDir(config.run_dir, digest), build_providers(config)});
  return s;
}

std::vector<ImageRecord> discovery_images(const RunConfig& config, const eval::DatasetManifest& manifest) {
  std::vector<ImageRecord> images;
  switch (config.discovery) {
    case DiscoveryMode::automatic:
      images = manifest.split(Split::discovery);
      if (images.empty()) images = eval::sample_balanced(manifest, config.per_class, config.seed).images;
      break;
    case DiscoveryMode::manifest:
      images = manifest.split(Split::discovery);
      if (images.empty()) throw InputError("discover", "manifest has no discovery split");
      break;
    case DiscoveryMode::balanced:
      images = eval::sample_balanced(manifest, config.per_class, config.seed).images;
      break;
    case DiscoveryMode::zipf:
      images = eval::sample_zipf(manifest, config.seed, config.zipf_s, config.zipf_lo, config.zipf_hi).images;
      break;
  }
  std::sort(images.begin(), images.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& r : images) {
    if (r.split == Split::test) throw Error("discover", "test image " + r.id + " in discovery set");
  }
  return images;
}

void discover(Session& s) {
  const auto& c = s.config;
  const auto images = discovery_images(c, s.manifest);
  spdlog::info("discover: {} images", images.size());

  const auto translated =
      translate::translate_images(*s.providers, s.templates, images, {c.aek_queries, c.temperature});
  s.run.write(run_files::kSuperCategories, run_files::SuperCategories{translated.super_categories});
  s.run.write(run_files::kAttributes, run_files::Attributes{translated.attributes});
  s.run.write(run_files::kDescriptions, run_files::Descriptions{translated.bundles});

  auto reasoned =
      reason::reason_images(*s.providers, s.templates, translated.bundles, c.names_per_image, c.temperature);
  std::vector<std::string> all_names;
  for (const auto& r : reasoned) all_names.insert(all_names.end(), r.names.begin(), r.names.end());
  const auto raw = reason::dedup(all_names);
  s.run.write(run_files::kCandidatesRaw, run_files::CandidatesRaw{raw, reasoned});
  spdlog::info("discover: {} raw candidates", raw.size());

  const auto name_emb = embed_names(*s.providers, raw, c.name_template);
  const auto image_emb = classifier::embed_images(*s.providers, images);
  auto denoised = reason::denoise(raw, name_emb, image_emb);
  spdlog::info("discover: {} refined candidates", denoised.candidates.refined.size());
  s.run.write(run_files::kCandidatesRefined,
              run_files::CandidatesRefined{std::move(denoised.candidates), std::move(denoised.assignments)});
}

namespace {

struct TrainingState {
  std::vector<std::string> names;
  std::vector<Embedding> w_txt;
  std::vector<ImageRecord> images;
  classifier::PseudoLabeling labeling;
};

TrainingState training_state(Session& s) {
  const auto refined = s.run.read<run_files::CandidatesRefined>(run_files::kCandidatesRefined);
  TrainingState t;
  t.names = refined.candidates.refined;
  if (t.names.empty()) throw InputError("classify", "candidates_refined.json holds no names");
  t.w_txt = classifier::build_text_classifier(*s.providers, t.names, s.config.name_template);
  t.images = discovery_images(s.config, s.manifest);
  const auto emb = classifier::embed_images(*s.providers, t.images);
  t.labeling = classifier::pseudo_label(emb, t.names, t.w_txt);
  return t;
}

ClassifierBundle train(Session& s, const TrainingState& t, int k, double alpha) {
  auto spec = s.config.augmentation_spec();
  spec.k = k;
  const auto w_img = classifier::build_image_classifier(t.labeling, t.names, t.images, k,
                                                        classifier::provider_embedder(*s.providers, spec),
                                                        kWorkers);
  return classifier::assemble(t.names, t.w_txt, w_img, t.labeling, alpha, k);
}

}  // namespace

void classify(Session& s) {
  const auto t = training_state(s);
  const auto bundle = train(s, t, s.config.k_augment, s.config.alpha);
  s.run.write(run_files::kClassifier, bundle);
  const auto test = classifier::embed_images(*s.providers, s.manifest.split(Split::test));
  spdlog::info("classify: {} classes, {} test images", bundle.classes.size(), test.size());
  s.run.write(run_files::kPredictions, run_files::Predictions{classifier::classify(test, bundle)});
}

EvalReport evaluate(Session& s, std::optional<Sweep> sweep) {
  const auto preds = s.run.read<run_files::Predictions>(run_files::kPredictions).predictions;
  const auto truths = test_truths(s.manifest);
  const auto c = eval::clustering_accuracy(preds, truths);
  EvalReport report;
  report.cacc = c.cacc;
  report.sacc = eval::semantic_similarity(
      preds, truths, [&](const std::string& t) { return s.providers->embed_sentence(t); });
  report.matching = c.matching;
  report.n_test = preds.size();
  report.config_digest = s.digest;
  s.run.write(run_files::kReport, report);
  write_text(s.run.path(run_files::kPredictionsCsv), predictions_csv(preds, truths));

  if (sweep == Sweep::alpha) {
    const auto bundle = s.run.read<ClassifierBundle>(run_files::kClassifier);
    const auto test = classifier::embed_images(*s.providers, s.manifest.split(Split::test));
    std::string csv = "alpha,cacc,sacc\n";
    for (int i = 0; i <= 10; ++i) {
      const double alpha = i / 10.0;
      const auto p = classifier::classify(test, classifier::refuse(bundle, alpha));
      const auto sc = score(s, p, truths);
      csv += fmt::format("{:.1f},{:.6f},{:.6f}\n", alpha, sc.cacc, sc.sacc);
    }
    write_text(s.run.path("sweep_alpha.csv"), csv);
  } else if (sweep == Sweep::k) {
    const auto t = training_state(s);
    const auto test = classifier::embed_images(*s.providers, s.manifest.split(Split::test));
    std::string csv = "k,cacc,sacc\n";
    for (int k : kSweepK) {
      const auto p = classifier::classify(test, train(s, t, k, s.config.alpha));
      const auto sc = score(s, p, truths);
      csv += fmt::format("{},{:.6f},{:.6f}\n", k, sc.cacc, sc.sacc);
    }
    write_text(s.run.path("sweep_k.csv"), csv);
  }
  return report;
}

namespace {

ReportRow read_row(const fs::path& file, std::string name) {
  EvalReport r;
  try {
    std::ifstream in(file);
    run_files::from_json(nlohmann::json::parse(in), r);
  } catch (const std::exception& e) {
    throw InputError("report", "malformed " + file.string() + ": " + e.what());
  }
  if (!std::isfinite(r.cacc) || !std::isfinite(r.sacc)) {
    throw InputError("report", "malformed " + file.string() + ": non-finite metric");
  }
  return {std::move(name), r.n_test, r.cacc, r.sacc};
}

}  // namespace

std::vector<ReportRow> collect_reports(const std::vector<fs::path>& dirs) {
  std::vector<ReportRow> rows;
  for (const auto& dir : dirs) {
    if (!fs::is_directory(dir)) throw InputError("report", "not a directory: " + dir.string());
    if (fs::exists(dir / run_files::kReport)) {
      rows.push_back(read_row(dir / run_files::kReport, dir.filename().string()));
      continue;
    }
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / run_files::kReport)) children.push_back(e.path());
    }
    if (children.empty()) throw InputError("report", "no report.json under " + dir.string());
    std::sort(children.begin(), children.end());
    for (const auto& c : children) {
      rows.push_back(read_row(c / run_files::kReport, (dir.filename() / c.filename()).string()));
    }
  }
  if (rows.empty()) throw InputError("report", "no run directories given");
  return rows;
}

std::string format_report(const std::vector<ReportRow>& rows, bool csv) {
  std::vector<std::array<std::string, 4>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.run, std::to_string(r.n_test), fmt::format("{:.1f}", 100 * r.cacc),
                     fmt::format("{:.1f}", 100 * r.sacc)});
  }
  if (rows.size() > 1) {
    double mc = 0, ms = 0;
    for (const auto& r : rows) mc += r.cacc, ms += r.sacc;
    mc /= rows.size();
    ms /= rows.size();
    double vc = 0, vs = 0;
    for (const auto& r : rows) vc += (r.cacc - mc) * (r.cacc - mc), vs += (r.sacc - ms) * (r.sacc - ms);
    const double sc = std::sqrt(vc / (rows.size() - 1)), ss = std::sqrt(vs / (rows.size() - 1));
    if (csv) {
      cells.push_back({"mean", "", fmt::format("{:.1f}", 100 * mc), fmt::format("{:.1f}", 100 * ms)});
      cells.push_back({"std", "", fmt::format("{:.1f}", 100 * sc), fmt::format("{:.1f}", 100 * ss)});
    } else {
      cells.push_back({"mean", "", fmt::format("{:.1f} ± {:.1f}", 100 * mc, 100 * sc),
                       fmt::format("{:.1f} ± {:.1f}", 100 * ms, 100 * ss)});
    }
  }
  std::ostringstream out;
  if (csv) {
    out << "run,n_test,cACC,sACC\n";
    for (const auto& c : cells) out << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3] << '\n';
    return out.str();
  }
  out << "| run | n_test | cACC | sACC |\n|---|---:|---:|---:|\n";
  for (const auto& c : cells) out << "| " << c[0] << " | " << c[1] << " | " << c[2] << " | " << c[3] << " |\n";
  return out.str();
}

}  // namespace finer::cli
