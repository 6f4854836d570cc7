#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace finer::translate {

enum class TemplateName { identify, how_to, describe, general_describe, reason };

const char* to_string(TemplateName n);

// A prompt body with `{name}` placeholders. `{in_context}` is bound from the
// template's own in-context block; every other placeholder must be supplied
// at render time.
struct PromptTemplate {
  TemplateName name = TemplateName::identify;
  std::string body;
  std::string in_context;

  std::vector<std::string> placeholders() const;
  std::string render(const std::map<std::string, std::string>& bindings = {}) const;

  // Template file format: body, then optionally a line "=== in_context ==="
  // followed by the in-context block. One trailing newline is dropped from
  // each part.
  static PromptTemplate parse(TemplateName name, const std::string& file_text);
};

enum class HowToVariant { bird_example, no_example };

struct TemplateSet {
  PromptTemplate identify;
  PromptTemplate how_to;
  PromptTemplate describe;
  PromptTemplate general_describe;
  PromptTemplate reason;

  // The shipped templates, compiled into the binary.
  static TemplateSet defaults(HowToVariant variant = HowToVariant::bird_example);
  // Files named `<template>.txt` in `dir`; absent files fall back to defaults.
  static TemplateSet load(const std::filesystem::path& dir,
                          HowToVariant variant = HowToVariant::bird_example);

  std::string digest() const;
};

namespace embedded {
extern const char* const kIdentify;
extern const char* const kHowTo;
extern const char* const kHowToNoExample;
extern const char* const kDescribe;
extern const char* const kGeneralDescribe;
extern const char* const kReason;
}  // namespace embedded

}  // namespace finer::translate
