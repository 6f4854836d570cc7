#include "finer/core/types.hpp"

#include "finer/core/error.hpp"

namespace finer {

const char* to_string(Split s) {
  switch (s) {
    case Split::discovery: return "discovery";
    case Split::train: return "train";
    case Split::test: return "test";
  }
  return "test";
}

Split parse_split(const std::string& s) {
  if (s == "discovery") return Split::discovery;
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw InputError("manifest", "unknown split '" + s + "'");
}

std::vector<std::pair<std::string, Embedding>> ClassifierBundle::fused() const {
  std::vector<std::pair<std::string, Embedding>> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.emplace_back(c.name, c.w_mm);
  return out;
}

}  // namespace finer
