#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finer/core/types.hpp"
#include "finer/providers/providers.hpp"
#include "finer/translate/templates.hpp"

namespace finer::translate {

using providers::Providers;

std::string render_identify_prompt(const TemplateSet& templates);
std::string render_how_to_prompt(const TemplateSet& templates, const std::string& super_category);
std::string render_describe_prompt(const TemplateSet& templates, const std::string& super_category,
                                   const std::string& attribute);
std::string render_general_prompt(const TemplateSet& templates);

// Lower-cased, trimmed super-category for one image.
std::string identify_super_category(Providers& providers, const TemplateSet& templates,
                                    std::span<const std::uint8_t> image);

// Order-preserving dedup; throws on empty input.
std::vector<std::string> unique_super_categories(std::span<const std::string> per_image);

// Items of one LLM completion. Newline- or comma-delimited; list markers and
// numbering stripped; items over six words dropped.
std::vector<std::string> parse_attribute_list(std::string_view completion);

// Union of `n_queries` sampled attribute lists, deduplicated by name key, in
// first-seen order, with the general attribute appended exactly once.
std::vector<std::string> acquire_attributes(Providers& providers, const TemplateSet& templates,
                                            const std::string& super_category, int n_queries,
                                            double temperature);

// Same union over already-fetched completions.
std::vector<std::string> merge_attribute_lists(std::span<const std::string> completions);

AttributeDescription describe_attribute(Providers& providers, const TemplateSet& templates,
                                        std::span<const std::uint8_t> image,
                                        const std::string& super_category,
                                        const std::string& attribute);

AttributeDescription describe_general(Providers& providers, const TemplateSet& templates,
                                      std::span<const std::uint8_t> image);

struct TranslateOptions {
  int aek_queries = 10;
  double temperature = 0.9;
};

struct TranslateResult {
  std::vector<std::pair<std::string, std::string>> super_categories;  // id -> g_n
  std::map<std::string, std::vector<std::string>> attributes;         // g -> a_g
  std::vector<AttributeBundle> bundles;                               // id order
};

// The whole visual-to-text phase over the discovery images (sorted by id).
TranslateResult translate_images(Providers& providers, const TemplateSet& templates,
                                 std::span<const ImageRecord> images, const TranslateOptions& options);

}  // namespace finer::translate
