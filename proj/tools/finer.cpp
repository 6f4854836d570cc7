#include <csignal>
#include <iostream>
#include <optional>
#include <regex>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "finer/cli/config.hpp"
#include "finer/cli/pipeline.hpp"
#include "finer/core/error.hpp"
#include "finer/providers/mock_backend.hpp"
#include "finer/providers/wire_server.hpp"

namespace fs = std::filesystem;
using namespace finer;

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  static const std::regex range(R"((\d+)\.\.(\d+))");
  std::smatch m;
  std::vector<std::uint64_t> out;
  if (std::regex_match(text, m, range)) {
    const auto lo = std::stoull(m[1]), hi = std::stoull(m[2]);
    if (hi < lo) throw InputError("cli", "empty seed range " + text);
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw InputError("cli", "bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("cli", "no seeds given");
  return out;
}

struct Options {
  std::string config;
  std::optional<std::string> manifest;
  std::optional<std::string> run_dir;
  std::optional<double> alpha;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> seeds;
  bool mock = false;
  std::optional<std::string> mock_script;
  bool force = false;
  std::optional<std::string> sweep;
  bool verbose = false;
};

cli::RunConfig make_config(const Options& o) {
  auto c = o.config.empty() ? cli::RunConfig{} : cli::RunConfig::load(o.config);
  if (o.manifest) c.manifest = *o.manifest;
  if (o.run_dir) c.run_dir = *o.run_dir;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.k) c.k_augment = *o.k;
  if (o.seed) c.seed = *o.seed;
  if (o.mock) c.mock = true;
  if (o.mock_script) {
    c.mock = true;
    c.mock_script = *o.mock_script;
  }
  c.force = c.force || o.force;
  return c;
}

template <typename Fn>
void for_each_seed(const Options& o, Fn&& fn) {
  auto base = make_config(o);
  if (!o.seeds) {
    fn(base);
    return;
  }
  if (!base.cache_dir) base.cache_dir = base.run_dir / "cache";
  for (auto seed : parse_seeds(*o.seeds)) {
    auto c = base;
    c.seed = seed;
    c.run_dir = base.run_dir / ("seed_" + std::to_string(seed));
    spdlog::info("seed {}", seed);
    fn(c);
  }
}

void run_stage(const cli::RunConfig& c, const std::string& stage, std::optional<cli::Sweep> sweep) {
  auto session = cli::open_session(c);
  cli::RunLock lock(c.run_dir);
  if (stage == "discover") {
    cli::discover(*session);
  } else if (stage == "classify") {
    cli::classify(*session);
  } else if (stage == "evaluate") {
    const auto r = cli::evaluate(*session, sweep);
    std::cout << fmt::format("{}: cACC {:.1f}  sACC {:.1f}  (n={})\n", c.run_dir.string(), 100 * r.cacc,
                             100 * r.sacc, r.n_test);
  } else {
    cli::discover(*session);
    cli::classify(*session);
    const auto r = cli::evaluate(*session, sweep);
    std::cout << fmt::format("{}: cACC {:.1f}  sACC {:.1f}  (n={})\n", c.run_dir.string(), 100 * r.cacc,
                             100 * r.sacc, r.n_test);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finer: vocabulary-free fine-grained recognition"};
  app.require_subcommand(1);
  Options o;

  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "INI run configuration")->check(CLI::ExistingFile);
    sub->add_option("--manifest", o.manifest, "dataset manifest (CSV or JSONL)");
    sub->add_option("--run-dir", o.run_dir, "run directory");
    sub->add_option("--alpha", o.alpha, "fusion weight in [0,1]");
    sub->add_option("--k", o.k, "augmentations per discovered image");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--seeds", o.seeds, "seed range a..b or list a,b,c; one run_dir/seed_N each");
    sub->add_flag("--mock", o.mock, "use the deterministic mock providers");
    sub->add_option("--mock-script", o.mock_script, "scripted mock JSON (implies --mock)");
    sub->add_flag("--force", o.force, "ignore cached provider responses");
    sub->add_flag("-v,--verbose", o.verbose, "debug logging");
  };

  auto* discover = app.add_subcommand("discover", "translate, reason and denoise candidate names");
  auto* classify = app.add_subcommand("classify", "build the classifier and predict the test split");
  auto* evaluate = app.add_subcommand("evaluate", "score predictions (cACC, sACC)");
  auto* run = app.add_subcommand("run", "discover, classify and evaluate");
  for (auto* sub : {discover, classify, evaluate, run}) add_run_options(sub);
  for (auto* sub : {evaluate, run}) {
    sub->add_option("--sweep", o.sweep, "also sweep alpha or k")->check(CLI::IsMember({"alpha", "k"}));
  }

  auto* report = app.add_subcommand("report", "tabulate report.json files");
  std::vector<std::string> report_dirs;
  bool report_csv = false;
  report->add_option("run_dirs", report_dirs, "run directories")->required();
  report->add_flag("--csv", report_csv, "CSV instead of Markdown");

  auto* serve = app.add_subcommand("serve-mock", "serve the mock backend over the wire contract");
  std::string host = "127.0.0.1";
  int port = 8000;
  std::optional<std::string> serve_script;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--script", serve_script, "scripted mock JSON");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("finer"));
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (report->parsed()) {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      std::cout << cli::format_report(cli::collect_reports(dirs), report_csv);
      return 0;
    }
    if (serve->parsed()) {
      providers::MockScript script;
      if (serve_script) script = providers::MockScript::load(*serve_script);
      nlohmann::json health{{"roles", nlohmann::json::array()}, {"dim", script.dim}};
      for (auto r : providers::kAllRoles) health["roles"].push_back(providers::to_string(r));
      providers::WireServer server(std::make_shared<providers::MockBackend>(std::move(script)), std::move(health));
      spdlog::info("serving mock on {}:{}", host, port);
      server.serve_forever(host, port);
      return 0;
    }
    std::optional<cli::Sweep> sweep;
    if (o.sweep) sweep = *o.sweep == "alpha" ? cli::Sweep::alpha : cli::Sweep::k;
    const std::string stage = discover->parsed()   ? "discover"
                              : classify->parsed() ? "classify"
                              : evaluate->parsed() ? "evaluate"
                                                   : "run";
    for_each_seed(o, [&](const cli::RunConfig& c) { run_stage(c, stage, sweep); });
    if (o.seeds && (stage == "evaluate" || stage == "run")) {
      std::cout << cli::format_report(cli::collect_reports({make_config(o).run_dir}));
    }
    return 0;
  } catch (const InputError& e) {
    std::cerr << "finer: [" << e.stage() << "] " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "finer: [" << e.stage() << "] " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "finer: " << e.what() << "\n";
    return 1;
  }
}
