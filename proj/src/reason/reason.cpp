#include "finer/reason/reason.hpp"

#include <spdlog/spdlog.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "finer/core/parallel.hpp"

namespace finer::reason {

using nlohmann::json;

std::string normalize_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char c : name) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
  if (out.empty()) throw Error("reason", "empty name");
  return out;
}

std::string name_key(std::string_view name) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(normalize_name(name)));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::string count_word(int n) {
  static const char* words[] = {"zero", "one", "two", "three", "four", "five",
                                "six",  "seven", "eight", "nine", "ten"};
  if (n >= 0 && n <= 10) return words[n];
  return std::to_string(n);
}

std::string render_pairs(const AttributeBundle& bundle) {
  std::string out;
  for (std::size_t i = 0; i < bundle.descriptions.size(); ++i) {
    if (i) out += '\n';
    out += "- " + bundle.descriptions[i].attribute + ": " + bundle.descriptions[i].text;
  }
  return out;
}

std::string render_reason_prompt(const translate::TemplateSet& templates, const AttributeBundle& bundle,
                                 int names_per_image) {
  if (bundle.descriptions.empty()) throw Error("reason", "empty attribute bundle for " + bundle.image_id);
  if (bundle.descriptions.size() != bundle.attributes.size()) {
    throw Error("reason", "incomplete attribute bundle for " + bundle.image_id);
  }
  return templates.reason.render({{"super", bundle.super_category},
                                  {"pairs", render_pairs(bundle)},
                                  {"num_names", count_word(names_per_image)}});
}

namespace {

std::string strip_fences(std::string_view raw) {
  static const std::regex fence(R"(```[A-Za-z]*)");
  return std::regex_replace(std::string(raw), fence, " ");
}

// Start and end (inclusive) of the first balanced {...}, honouring strings.
std::optional<std::pair<std::size_t, std::size_t>> first_object(const std::string& text) {
  const auto start = text.find('{');
  if (start == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return std::pair{start, i};
    }
  }
  return std::nullopt;
}

std::optional<json> try_parse(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
  }
  static const std::regex trailing_comma(R"(,\s*([\]}]))");
  static const std::regex smart_quotes("\xE2\x80\x9C|\xE2\x80\x9D");
  std::string repaired = std::regex_replace(s, trailing_comma, "$1");
  repaired = std::regex_replace(repaired, smart_quotes, "\"");
  if (repaired.find('"') == std::string::npos) {
    // Python-style literal: {'names': ['A', 'B']}
    static const std::regex single_quoted(R"(([\[{,:]\s*)'((?:[^'\\]|\\.)*)'(?=\s*[\]},:]))");
    repaired = std::regex_replace(repaired, single_quoted, "$1\"$2\"");
  }
  try {
    return json::parse(repaired);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::vector<std::string> strings_of(const json& v) {
  std::vector<std::string> out;
  if (v.is_string()) {
    std::istringstream parts(v.get<std::string>());
    for (std::string p; std::getline(parts, p, ',');) out.push_back(p);
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (e.is_string()) out.push_back(e.get<std::string>());
    }
  }
  return out;
}

bool is_name_key(std::string key) {
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return key.find("name") != std::string::npos;
}

void read_object(const json& obj, ReasonerOutput& out) {
  if (!obj.is_object()) return;
  if (auto it = obj.find("summary"); it != obj.end()) out.summary = strings_of(*it);
  if (auto it = obj.find("names"); it != obj.end()) {
    out.names = strings_of(*it);
    return;
  }
  for (const auto& [key, value] : obj.items()) {
    if (is_name_key(key)) {
      out.names = strings_of(value);
      if (!out.names.empty()) return;
    }
  }
}

// Quoted strings following a names-like key, up to "]" or end of text.
std::vector<std::string> regex_names(const std::string& text) {
  static const std::regex key_re(R"re("[^"]*[Nn]ames?[^"]*"\s*:\s*\[)re");
  static const std::regex item_re(R"re("((?:[^"\\]|\\.)*)")re");
  std::smatch m;
  if (!std::regex_search(text, m, key_re)) return {};
  const std::string rest = m.suffix().str();
  const auto close = rest.find(']');
  const std::string span = rest.substr(0, close);
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(span.begin(), span.end(), item_re); it != std::sregex_iterator();
       ++it) {
    const auto end = static_cast<std::size_t>(it->position(0) + it->length(0));
    // An unterminated trailing string cannot match; anything else is complete.
    if (end <= span.size()) out.push_back((*it)[1].str());
  }
  return out;
}

}  // namespace

ReasonerOutput parse_reasoner_output(std::string_view raw, std::string image_id) {
  ReasonerOutput out;
  out.image_id = std::move(image_id);
  out.raw_text = std::string(raw);
  const std::string text = strip_fences(raw);

  if (auto obj = first_object(text)) {
    if (auto parsed = try_parse(text.substr(obj->first, obj->second - obj->first + 1))) {
      read_object(*parsed, out);
    }
  }
  if (out.names.empty()) out.names = regex_names(text);

  std::vector<std::string> cleaned;
  for (const auto& n : out.names) {
    try {
      cleaned.push_back(normalize_name(n));
    } catch (const Error&) {
    }
  }
  out.names = std::move(cleaned);
  if (out.names.empty()) {
    spdlog::warn("reasoner output{} has no recoverable names",
                 out.image_id.empty() ? "" : " for " + out.image_id);
  }
  return out;
}

std::vector<ReasonerOutput> reason_images(providers::Providers& providers,
                                          const translate::TemplateSet& templates,
                                          std::span<const AttributeBundle> bundles,
                                          int names_per_image, double temperature) {
  std::vector<ReasonerOutput> out(bundles.size());
  const int workers = providers.client(providers::Role::llm).endpoint().max_concurrency;
  parallel_for(bundles.size(), workers, [&](std::size_t i) {
    const auto prompt = render_reason_prompt(templates, bundles[i], names_per_image);
    const auto completion = providers.llm_complete(prompt, temperature, 1).front();
    out[i] = parse_reasoner_output(completion, bundles[i].image_id);
    if (static_cast<int>(out[i].names.size()) > names_per_image) out[i].names.resize(names_per_image);
  });
  return out;
}

std::vector<std::string> dedup(std::span<const std::string> all_names) {
  std::map<std::string, std::string> by_key;  // key -> first-seen display
  for (const auto& n : all_names) {
    std::string display;
    try {
      display = normalize_name(n);
    } catch (const Error&) {
      continue;
    }
    by_key.try_emplace(name_key(display), display);
  }
  if (by_key.empty()) throw Error("reason", "no candidates reasoned");
  std::vector<std::string> out;
  out.reserve(by_key.size());
  for (auto& [key, display] : by_key) out.push_back(std::move(display));
  return out;
}

DenoiseResult denoise(std::span<const std::string> raw, std::span<const Embedding> name_embeddings,
                      std::span<const std::pair<std::string, Embedding>> images) {
  if (raw.empty()) throw Error("reason", "denoise: empty candidate set");
  if (raw.size() != name_embeddings.size()) throw Error("reason", "denoise: one embedding per name required");
  std::vector<std::pair<std::string, Embedding>> classes;
  classes.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) classes.emplace_back(raw[i], name_embeddings[i]);

  DenoiseResult result;
  std::vector<bool> selected(raw.size(), false);
  for (const auto& [id, emb] : images) {
    const auto best = argmax_class(emb, classes);
    selected[best.index] = true;
    result.assignments.push_back({id, best.name, best.score});
  }
  result.candidates.raw.assign(raw.begin(), raw.end());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    (selected[i] ? result.candidates.refined : result.candidates.removed).push_back(raw[i]);
  }
  return result;
}

std::string class_text(const std::string& name, const std::optional<std::string>& name_template) {
  if (!name_template || name_template->empty()) return name;
  std::string out = *name_template;
  const auto pos = out.find("{name}");
  if (pos == std::string::npos) throw InputError("config", "name_template must contain {name}");
  out.replace(pos, 6, name);
  return out;
}

}  // namespace finer::reason
