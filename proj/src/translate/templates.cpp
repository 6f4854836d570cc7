#include "finer/translate/templates.hpp"

#include <fstream>
#include <iterator>
#include <regex>
#include <set>

#include "finer/core/digest.hpp"
#include "finer/core/error.hpp"

namespace finer::translate {

namespace {

const std::regex& placeholder_re() {
  static const std::regex re(R"(\{([a-z_]+)\})");
  return re;
}

std::string drop_trailing_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

}  // namespace

const char* to_string(TemplateName n) {
  switch (n) {
    case TemplateName::identify: return "identify";
    case TemplateName::how_to: return "how_to";
    case TemplateName::describe: return "describe";
    case TemplateName::general_describe: return "general_describe";
    case TemplateName::reason: return "reason";
  }
  return "identify";
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), placeholder_re());
       it != std::sregex_iterator(); ++it) {
    if (seen.insert((*it)[1].str()).second) out.push_back((*it)[1].str());
  }
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), placeholder_re());
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string key = m[1].str();
    out.append(body, last, static_cast<std::size_t>(m.position(0)) - last);
    if (key == "in_context") {
      out += in_context;
    } else if (auto b = bindings.find(key); b != bindings.end()) {
      out += b->second;
    } else {
      throw Error("template", std::string(to_string(name)) + ": unbound placeholder {" + key + "}");
    }
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  out.append(body, last);
  return out;
}

PromptTemplate PromptTemplate::parse(TemplateName name, const std::string& file_text) {
  static const std::string sep = "=== in_context ===\n";
  PromptTemplate t;
  t.name = name;
  std::size_t pos = std::string::npos;
  if (file_text.rfind(sep, 0) == 0) {
    pos = 0;
  } else if (auto p = file_text.find("\n" + sep); p != std::string::npos) {
    pos = p + 1;
  }
  if (pos == std::string::npos) {
    t.body = drop_trailing_newline(file_text);
  } else {
    t.body = drop_trailing_newline(file_text.substr(0, pos));
    t.in_context = drop_trailing_newline(file_text.substr(pos + sep.size()));
  }
  return t;
}

TemplateSet TemplateSet::defaults(HowToVariant variant) {
  TemplateSet s;
  s.identify = PromptTemplate::parse(TemplateName::identify, embedded::kIdentify);
  s.how_to = PromptTemplate::parse(
      TemplateName::how_to,
      variant == HowToVariant::bird_example ? embedded::kHowTo : embedded::kHowToNoExample);
  s.describe = PromptTemplate::parse(TemplateName::describe, embedded::kDescribe);
  s.general_describe = PromptTemplate::parse(TemplateName::general_describe, embedded::kGeneralDescribe);
  s.reason = PromptTemplate::parse(TemplateName::reason, embedded::kReason);
  return s;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir, HowToVariant variant) {
  TemplateSet s = defaults(variant);
  auto override_from = [&](PromptTemplate& t, const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return;
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    t = PromptTemplate::parse(t.name, text);
  };
  override_from(s.identify, dir / "identify.txt");
  override_from(s.how_to, variant == HowToVariant::bird_example
                              ? dir / "how_to.txt"
                              : dir / "variants" / "how_to_no_example.txt");
  override_from(s.describe, dir / "describe.txt");
  override_from(s.general_describe, dir / "general_describe.txt");
  override_from(s.reason, dir / "reason.txt");
  return s;
}

std::string TemplateSet::digest() const {
  std::string all;
  for (const auto* t : {&identify, &how_to, &describe, &general_describe, &reason}) {
    all += t->body;
    all += '\0';
    all += t->in_context;
    all += '\0';
  }
  return sha256_hex(all);
}

}  // namespace finer::translate
