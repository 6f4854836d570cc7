#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "finer/classifier/augment.hpp"
#include "finer/providers/backend.hpp"
#include "finer/translate/templates.hpp"

namespace finer::cli {

enum class DiscoveryMode { automatic, manifest, balanced, zipf };

const char* to_string(DiscoveryMode m);

// Everything a run depends on. Loaded from an INI file
//
//   [run]        manifest, run_dir, seed, cache_dir, templates_dir,
//                how_to_variant (bird_example|no_example), name_template
//   [discovery]  mode (auto|manifest|balanced|zipf), per_class, zipf_s,
//                zipf_lo, zipf_hi
//   [pipeline]   alpha, k_augment, aek_queries, temperature, names_per_image
//   [augment]    ops, apply_prob, random_choice, crop_scale_min,
//                crop_scale_max, jitter, max_rotation_deg, perspective
//   [provider]   defaults for every role: base_url, model, timeout_s,
//                max_concurrency, token_env
//   [provider.<role>]  per-role overrides (vqa, llm, image_embed, ...)
//   [mock]       enabled, script
//
// with command-line flags applied on top.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path run_dir = "run";
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> templates_dir;
  translate::HowToVariant how_to_variant = translate::HowToVariant::bird_example;
  std::optional<std::string> name_template;
  std::uint64_t seed = 1;

  DiscoveryMode discovery = DiscoveryMode::automatic;
  int per_class = 3;
  double zipf_s = 2.0;
  int zipf_lo = 1;
  int zipf_hi = 10;

  double alpha = 0.7;
  int k_augment = 10;
  int aek_queries = 10;
  double temperature = 0.9;
  int names_per_image = 3;

  classifier::AugmentationSpec augmentation;
  std::array<providers::ProviderEndpoint, 5> endpoints;  // role order

  bool mock = false;
  std::optional<std::filesystem::path> mock_script;
  bool force = false;

  RunConfig();

  static RunConfig load(const std::filesystem::path& ini);
  void validate() const;

  // AugmentationSpec with k and seed taken from the run fields.
  classifier::AugmentationSpec augmentation_spec() const;
  translate::TemplateSet templates() const;

  // SHA-256 over every field that influences stage outputs (not paths to
  // the run directory or cache, endpoints, timeouts or concurrency).
  std::string digest() const;

  // INI snapshot with resolved paths, written into the run directory.
  std::string to_ini() const;
};

}  // namespace finer::cli
