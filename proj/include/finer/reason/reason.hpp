#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finer/core/types.hpp"
#include "finer/providers/providers.hpp"
#include "finer/reason/names.hpp"
#include "finer/translate/templates.hpp"

namespace finer::reason {

// "three" for 3; digits beyond ten.
std::string count_word(int n);

std::string render_pairs(const AttributeBundle& bundle);
std::string render_reason_prompt(const translate::TemplateSet& templates, const AttributeBundle& bundle,
                                 int names_per_image = 3);

// Never throws: unrecoverable text yields an output with no names.
ReasonerOutput parse_reasoner_output(std::string_view raw, std::string image_id = {});

// One completion per image; names truncated to `names_per_image`. Output in
// bundle order.
std::vector<ReasonerOutput> reason_images(providers::Providers& providers,
                                          const translate::TemplateSet& templates,
                                          std::span<const AttributeBundle> bundles,
                                          int names_per_image, double temperature);

// Union under name_key, first-seen casing kept, sorted by key.
std::vector<std::string> dedup(std::span<const std::string> all_names);

struct DenoiseResult {
  CandidateSet candidates;
  std::vector<ImageAssignment> assignments;  // image order as given
};

// Keeps the names that are the nearest name (max cosine, first on ties) of at
// least one image.
DenoiseResult denoise(std::span<const std::string> raw, std::span<const Embedding> name_embeddings,
                      std::span<const std::pair<std::string, Embedding>> images);

// Text used to embed a class name: the bare name, or `name_template` with
// "{name}" substituted.
std::string class_text(const std::string& name, const std::optional<std::string>& name_template);

}  // namespace finer::reason
