#include "finer/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "finer/core/digest.hpp"
#include "finer/core/error.hpp"

namespace finer::cli {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

template <typename T>
void read(const pt::ptree& tree, const std::string& key, T& out) {
  try {
    if (auto child = tree.get_child_optional(key)) out = child->get_value<T>();
  } catch (const pt::ptree_error& e) {
    throw InputError("config", "bad value for " + key + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void read_endpoint(const pt::ptree& section, providers::ProviderEndpoint& ep) {
  if (auto v = section.get_optional<std::string>("base_url")) ep.base_url = *v;
  if (auto v = section.get_optional<std::string>("model")) ep.model_name = *v;
  if (section.get_child_optional("timeout_s")) {
    double secs = 0.0;
    read(section, "timeout_s", secs);
    ep.timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000));
  }
  read(section, "max_concurrency", ep.max_concurrency);
  if (auto v = section.get_optional<std::string>("token_env")) {
    if (const char* tok = std::getenv(v->c_str())) ep.bearer_token = tok;
  }
}

}  // namespace

const char* to_string(DiscoveryMode m) {
  switch (m) {
    case DiscoveryMode::automatic: return "auto";
    case DiscoveryMode::manifest: return "manifest";
    case DiscoveryMode::balanced: return "balanced";
    case DiscoveryMode::zipf: return "zipf";
  }
  return "auto";
}

RunConfig::RunConfig() {
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    endpoints[i].role = providers::kAllRoles[i];
    endpoints[i].base_url = "http://127.0.0.1:8000";
    endpoints[i].model_name = "default";
  }
}

RunConfig RunConfig::load(const fs::path& ini) {
  if (!fs::exists(ini)) throw InputError("config", "config file not found: " + ini.string());
  pt::ptree tree;
  try {
    pt::read_ini(ini.string(), tree);
  } catch (const pt::ptree_error& e) {
    throw InputError("config", "cannot parse " + ini.string() + ": " + e.what());
  }
  const fs::path base = ini.parent_path();
  RunConfig c;

  std::string text;
  if (auto v = tree.get_optional<std::string>("run.manifest")) c.manifest = resolve(base, *v);
  if (auto v = tree.get_optional<std::string>("run.run_dir")) c.run_dir = resolve(base, *v);
  if (auto v = tree.get_optional<std::string>("run.cache_dir")) c.cache_dir = resolve(base, *v);
  if (auto v = tree.get_optional<std::string>("run.templates_dir")) c.templates_dir = resolve(base, *v);
  if (auto v = tree.get_optional<std::string>("run.name_template"); v && !v->empty()) c.name_template = *v;
  if (auto v = tree.get_optional<std::string>("run.how_to_variant")) {
    if (*v == "bird_example") {
      c.how_to_variant = translate::HowToVariant::bird_example;
    } else if (*v == "no_example") {
      c.how_to_variant = translate::HowToVariant::no_example;
    } else {
      throw InputError("config", "how_to_variant must be bird_example or no_example");
    }
  }
  read(tree, "run.seed", c.seed);

  if (auto v = tree.get_optional<std::string>("discovery.mode")) {
    if (*v == "auto") {
      c.discovery = DiscoveryMode::automatic;
    } else if (*v == "manifest") {
      c.discovery = DiscoveryMode::manifest;
    } else if (*v == "balanced") {
      c.discovery = DiscoveryMode::balanced;
    } else if (*v == "zipf") {
      c.discovery = DiscoveryMode::zipf;
    } else {
      throw InputError("config", "discovery.mode must be auto, manifest, balanced or zipf");
    }
  }
  read(tree, "discovery.per_class", c.per_class);
  read(tree, "discovery.zipf_s", c.zipf_s);
  read(tree, "discovery.zipf_lo", c.zipf_lo);
  read(tree, "discovery.zipf_hi", c.zipf_hi);

  read(tree, "pipeline.alpha", c.alpha);
  read(tree, "pipeline.k_augment", c.k_augment);
  read(tree, "pipeline.aek_queries", c.aek_queries);
  read(tree, "pipeline.temperature", c.temperature);
  read(tree, "pipeline.names_per_image", c.names_per_image);

  auto& aug = c.augmentation;
  if (auto v = tree.get_optional<std::string>("augment.ops")) {
    aug.ops.clear();
    for (const auto& op : split_list(*v)) aug.ops.push_back(classifier::parse_augment_op(op));
  }
  if (tree.get_child_optional("augment.apply_prob")) {
    double prob = 0.0;
    read(tree, "augment.apply_prob", prob);
    aug.apply_prob.fill(prob);
  }
  for (auto op : classifier::kAllAugmentOps) {
    read(tree, std::string("augment.prob_") + classifier::to_string(op),
         aug.apply_prob[static_cast<std::size_t>(op)]);
  }
  read(tree, "augment.random_choice", aug.random_choice);
  read(tree, "augment.crop_scale_min", aug.crop_scale_min);
  read(tree, "augment.crop_scale_max", aug.crop_scale_max);
  read(tree, "augment.jitter", aug.jitter);
  read(tree, "augment.max_rotation_deg", aug.max_rotation_deg);
  read(tree, "augment.perspective", aug.perspective);

  if (auto s = tree.get_child_optional("provider")) {
    for (auto& ep : c.endpoints) read_endpoint(*s, ep);
  }
  for (auto& ep : c.endpoints) {
    if (auto s = tree.get_child_optional(pt::ptree::path_type(std::string("provider.") + to_string(ep.role), '/'))) {
      read_endpoint(*s, ep);
    }
  }

  read(tree, "mock.enabled", c.mock);
  if (auto v = tree.get_optional<std::string>("mock.script"); v && !v->empty()) {
    c.mock_script = resolve(base, *v);
  }
  return c;
}

void RunConfig::validate() const {
  if (manifest.empty()) throw InputError("config", "no dataset manifest configured");
  if (alpha < 0.0 || alpha > 1.0) throw InputError("config", "alpha must be in [0,1]");
  if (k_augment < 0) throw InputError("config", "k_augment must be >= 0");
  if (aek_queries < 1) throw InputError("config", "aek_queries must be >= 1");
  if (temperature < 0.0 || temperature > 2.0) throw InputError("config", "temperature must be in [0,2]");
  if (names_per_image < 1) throw InputError("config", "names_per_image must be >= 1");
  if (per_class < 1) throw InputError("config", "per_class must be >= 1");
  if (zipf_lo < 1 || zipf_hi < zipf_lo) throw InputError("config", "zipf bounds must satisfy 1 <= lo <= hi");
  augmentation_spec().validate();
  for (const auto& ep : endpoints) ep.validate();
}

classifier::AugmentationSpec RunConfig::augmentation_spec() const {
  auto spec = augmentation;
  spec.k = k_augment;
  spec.seed = seed;
  return spec;
}

translate::TemplateSet RunConfig::templates() const {
  return templates_dir ? translate::TemplateSet::load(*templates_dir, how_to_variant)
                       : translate::TemplateSet::defaults(how_to_variant);
}

std::string RunConfig::digest() const {
  nlohmann::json j;
  j["manifest_sha256"] = fs::exists(manifest) ? sha256_hex(read_file(manifest.string())) : "";
  j["seed"] = seed;
  j["discovery"] = {{"mode", to_string(discovery)}, {"per_class", per_class}, {"zipf_s", zipf_s},
                    {"zipf_lo", zipf_lo}, {"zipf_hi", zipf_hi}};
  j["pipeline"] = {{"alpha", alpha}, {"k_augment", k_augment}, {"aek_queries", aek_queries},
                   {"temperature", temperature}, {"names_per_image", names_per_image}};
  j["name_template"] = name_template.value_or("");
  j["templates"] = templates().digest();
  nlohmann::json ops = nlohmann::json::array();
  for (auto op : augmentation.ops) ops.push_back(classifier::to_string(op));
  j["augment"] = {{"ops", ops},
                  {"apply_prob", augmentation.apply_prob},
                  {"random_choice", augmentation.random_choice},
                  {"crop", {augmentation.crop_scale_min, augmentation.crop_scale_max}},
                  {"jitter", augmentation.jitter},
                  {"rotation", augmentation.max_rotation_deg},
                  {"perspective", augmentation.perspective}};
  if (mock) {
    j["providers"] = mock_script && fs::exists(*mock_script)
                         ? "mock:" + sha256_hex(read_file(mock_script->string()))
                         : std::string("mock");
  } else {
    nlohmann::json models;
    for (const auto& ep : endpoints) models[to_string(ep.role)] = ep.model_name;
    j["providers"] = models;
  }
  return sha256_hex(j.dump());
}

std::string RunConfig::to_ini() const {
  pt::ptree tree;
  tree.put("run.manifest", fs::absolute(manifest).string());
  tree.put("run.run_dir", fs::absolute(run_dir).string());
  if (cache_dir) tree.put("run.cache_dir", fs::absolute(*cache_dir).string());
  if (templates_dir) tree.put("run.templates_dir", fs::absolute(*templates_dir).string());
  tree.put("run.how_to_variant",
           how_to_variant == translate::HowToVariant::bird_example ? "bird_example" : "no_example");
  if (name_template) tree.put("run.name_template", *name_template);
  tree.put("run.seed", seed);
  tree.put("discovery.mode", to_string(discovery));
  tree.put("discovery.per_class", per_class);
  tree.put("discovery.zipf_s", zipf_s);
  tree.put("discovery.zipf_lo", zipf_lo);
  tree.put("discovery.zipf_hi", zipf_hi);
  tree.put("pipeline.alpha", alpha);
  tree.put("pipeline.k_augment", k_augment);
  tree.put("pipeline.aek_queries", aek_queries);
  tree.put("pipeline.temperature", temperature);
  tree.put("pipeline.names_per_image", names_per_image);
  std::string ops;
  for (auto op : augmentation.ops) ops += std::string(ops.empty() ? "" : ",") + classifier::to_string(op);
  tree.put("augment.ops", ops);
  for (auto op : classifier::kAllAugmentOps) {
    tree.put(std::string("augment.prob_") + classifier::to_string(op),
             augmentation.apply_prob[static_cast<std::size_t>(op)]);
  }
  tree.put("augment.random_choice", augmentation.random_choice);
  tree.put("augment.crop_scale_min", augmentation.crop_scale_min);
  tree.put("augment.crop_scale_max", augmentation.crop_scale_max);
  tree.put("augment.jitter", augmentation.jitter);
  tree.put("augment.max_rotation_deg", augmentation.max_rotation_deg);
  tree.put("augment.perspective", augmentation.perspective);
  for (const auto& ep : endpoints) {
    pt::ptree s;
    s.put("base_url", ep.base_url);
    s.put("model", ep.model_name);
    s.put("timeout_s", static_cast<double>(ep.timeout.count()) / 1000.0);
    s.put("max_concurrency", ep.max_concurrency);
    tree.add_child(pt::ptree::path_type(std::string("provider.") + to_string(ep.role), '/'), s);
  }
  tree.put("mock.enabled", mock);
  if (mock_script) tree.put("mock.script", fs::absolute(*mock_script).string());
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

}  // namespace finer::cli
