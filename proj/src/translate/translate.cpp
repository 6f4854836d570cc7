#include "finer/translate/translate.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <iterator>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "finer/core/digest.hpp"
#include "finer/core/parallel.hpp"
#include "finer/reason/names.hpp"

namespace finer::translate {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::size_t word_count(const std::string& s) {
  std::istringstream in(s);
  return static_cast<std::size_t>(std::distance(std::istream_iterator<std::string>(in),
                                                std::istream_iterator<std::string>()));
}

}  // namespace

std::string render_identify_prompt(const TemplateSet& templates) { return templates.identify.render(); }

std::string render_how_to_prompt(const TemplateSet& templates, const std::string& super_category) {
  return templates.how_to.render({{"super", super_category}});
}

std::string render_describe_prompt(const TemplateSet& templates, const std::string& super_category,
                                   const std::string& attribute) {
  return templates.describe.render({{"super", super_category}, {"attribute", attribute}});
}

std::string render_general_prompt(const TemplateSet& templates) {
  return templates.general_describe.render();
}

std::string identify_super_category(Providers& providers, const TemplateSet& templates,
                                    std::span<const std::uint8_t> image) {
  auto answer = lower_ascii(trim(providers.vqa_answer(image, render_identify_prompt(templates))));
  while (!answer.empty() && answer.back() == '.') answer.pop_back();
  if (answer.empty()) throw providers::EmptyAnswer();
  return answer;
}

std::vector<std::string> unique_super_categories(std::span<const std::string> per_image) {
  if (per_image.empty()) throw Error("translate", "no super-categories to deduplicate");
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& g : per_image) {
    if (seen.insert(g).second) out.push_back(g);
  }
  return out;
}

std::vector<std::string> parse_attribute_list(std::string_view completion) {
  static const std::regex marker(R"(^\s*(?:-+|\*+|•|\d+\s*[.):]|[a-zA-Z]\))\s*)");
  std::string text(completion);
  // Models sometimes echo the prompt's "Answer:" lead-in.
  if (auto pos = text.find("Answer:"); pos != std::string::npos) text = text.substr(pos + 7);

  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  std::vector<std::string> items;
  auto take = [&](std::string item) {
    item = std::regex_replace(item, marker, "");
    item = trim(item);
    while (!item.empty() && (item.back() == '.' || item.back() == ';' || item.back() == ',')) item.pop_back();
    if (item.size() >= 2 && (item.front() == '"' || item.front() == '\'') && item.back() == item.front()) {
      item = item.substr(1, item.size() - 2);
    }
    item = trim(item);
    if (item.empty() || item.back() == ':' || word_count(item) > 6) return;
    items.push_back(item);
  };
  if (lines.size() == 1) {
    std::istringstream parts(lines.front());
    for (std::string part; std::getline(parts, part, ',');) take(part);
  } else {
    for (auto& line : lines) take(line);
  }
  return items;
}

std::vector<std::string> merge_attribute_lists(std::span<const std::string> completions) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen{reason::name_key(kGeneralAttribute)};
  std::size_t parsed = 0;
  for (std::size_t i = 0; i < completions.size(); ++i) {
    const auto items = parse_attribute_list(completions[i]);
    if (items.empty()) {
      spdlog::warn("attribute completion {} unparseable; skipped", i);
      continue;
    }
    ++parsed;
    for (const auto& item : items) {
      std::string display;
      try {
        display = reason::normalize_name(item);
      } catch (const Error&) {
        continue;
      }
      if (seen.insert(reason::name_key(display)).second) out.push_back(display);
    }
  }
  if (parsed == 0) throw Error("translate", "no attribute completion could be parsed");
  out.emplace_back(kGeneralAttribute);
  return out;
}

std::vector<std::string> acquire_attributes(Providers& providers, const TemplateSet& templates,
                                            const std::string& super_category, int n_queries,
                                            double temperature) {
  if (n_queries < 1) throw Error("translate", "n_queries must be >= 1");
  const auto completions =
      providers.llm_complete(render_how_to_prompt(templates, super_category), temperature, n_queries);
  try {
    return merge_attribute_lists(completions);
  } catch (const Error& e) {
    throw Error("translate", std::string(e.what()) + " for super-category '" + super_category + "'");
  }
}

AttributeDescription describe_attribute(Providers& providers, const TemplateSet& templates,
                                        std::span<const std::uint8_t> image,
                                        const std::string& super_category,
                                        const std::string& attribute) {
  if (attribute == kGeneralAttribute) {
    throw Error("translate", "the general attribute is described with describe_general");
  }
  try {
    return {attribute,
            providers.vqa_answer(image, render_describe_prompt(templates, super_category, attribute)),
            false};
  } catch (const providers::EmptyAnswer&) {
    return {attribute, "", true};
  }
}

AttributeDescription describe_general(Providers& providers, const TemplateSet& templates,
                                      std::span<const std::uint8_t> image) {
  try {
    return {kGeneralAttribute, providers.vqa_answer(image, render_general_prompt(templates)), false};
  } catch (const providers::EmptyAnswer&) {
    return {kGeneralAttribute, "", true};
  }
}

TranslateResult translate_images(Providers& providers, const TemplateSet& templates,
                                 std::span<const ImageRecord> images, const TranslateOptions& options) {
  std::vector<ImageRecord> sorted(images.begin(), images.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (sorted.empty()) throw Error("translate", "discovery set is empty");

  std::vector<Bytes> raster(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) raster[i] = read_file(sorted[i].source);

  const int vqa_workers = providers.client(providers::Role::vqa).endpoint().max_concurrency;
  std::vector<std::string> supers(sorted.size());
  parallel_for(sorted.size(), vqa_workers, [&](std::size_t i) {
    try {
      supers[i] = identify_super_category(providers, templates, raster[i]);
    } catch (const providers::EmptyAnswer&) {
      throw Error("translate", "empty super-category answer for image " + sorted[i].id);
    }
  });

  TranslateResult result;
  for (std::size_t i = 0; i < sorted.size(); ++i) result.super_categories.emplace_back(sorted[i].id, supers[i]);
  // Sequential per super-category; attributes are shared by all its images.
  for (const auto& g : unique_super_categories(supers)) {
    result.attributes[g] =
        acquire_attributes(providers, templates, g, options.aek_queries, options.temperature);
  }

  result.bundles.resize(sorted.size());
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    auto& b = result.bundles[i];
    b.image_id = sorted[i].id;
    b.super_category = supers[i];
    b.attributes = result.attributes.at(supers[i]);
    b.descriptions.resize(b.attributes.size());
    for (std::size_t m = 0; m < b.attributes.size(); ++m) jobs.emplace_back(i, m);
  }
  parallel_for(jobs.size(), vqa_workers, [&](std::size_t j) {
    const auto [i, m] = jobs[j];
    auto& b = result.bundles[i];
    b.descriptions[m] = b.attributes[m] == kGeneralAttribute
                            ? describe_general(providers, templates, raster[i])
                            : describe_attribute(providers, templates, raster[i], b.super_category,
                                                 b.attributes[m]);
  });
  for (const auto& b : result.bundles) {
    for (const auto& d : b.descriptions) {
      if (d.empty_answer) spdlog::warn("image {}: empty description for '{}'", b.image_id, d.attribute);
    }
  }
  return result;
}

}  // namespace finer::translate
