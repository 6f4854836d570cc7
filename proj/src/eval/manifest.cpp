#include "finer/eval/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "finer/core/digest.hpp"
#include "finer/core/error.hpp"

namespace finer::eval {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back().push_back(c);
    }
  }
  return fields;
}

ImageRecord make_record(const std::filesystem::path& root, const std::string& path,
                        const std::string& label, const std::string& split) {
  if (path.empty()) throw InputError("manifest", "entry with empty path");
  ImageRecord r;
  r.id = path;
  r.source = (root / path).lexically_normal().string();
  if (!label.empty()) r.ground_truth = label;
  r.split = parse_split(split.empty() ? "test" : split);
  return r;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  // Rejection sampling; libstdc++ and libc++ distributions differ.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
    std::swap(items[i], items[i + uniform_below(rng, items.size() - i)]);
  }
}

// Labeled images available for discovery, per class, sorted by id.
std::map<std::string, std::vector<ImageRecord>> discovery_pool(const DatasetManifest& manifest) {
  std::map<std::string, std::vector<ImageRecord>> pool;
  for (const auto& c : manifest.class_names()) pool[c];
  for (const auto& e : manifest.entries) {
    if (e.split != Split::test && e.ground_truth) pool[*e.ground_truth].push_back(e);
  }
  for (auto& [c, v] : pool) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }
  return pool;
}

std::vector<ImageRecord> draw(std::vector<ImageRecord> candidates, std::size_t count, std::uint64_t seed,
                              const std::string& cls) {
  std::mt19937_64 rng(digest64(std::to_string(seed) + "\x1f" + cls));
  partial_shuffle(candidates, count, rng);
  candidates.resize(count);
  for (auto& r : candidates) r.split = Split::discovery;
  return candidates;
}

DiscoverySample finish(std::vector<ImageRecord> images, std::vector<std::pair<std::string, int>> counts) {
  std::sort(images.begin(), images.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return {std::move(images), std::move(counts)};
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw InputError("manifest", "cannot open manifest " + path.string());
  DatasetManifest m;
  m.name = path.stem().string();
  const auto root = path.parent_path();
  const auto ext = path.extension().string();

  if (ext == ".jsonl" || ext == ".json") {
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        m.entries.push_back(make_record(root, j.at("path").get<std::string>(), j.value("label", ""),
                                        j.value("split", "test")));
      } catch (const nlohmann::json::exception& e) {
        throw InputError("manifest", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  } else {
    std::string header;
    if (!std::getline(in, header)) throw InputError("manifest", "empty manifest " + path.string());
    const auto cols = split_csv_line(header);
    auto col = [&](const std::string& name) -> std::ptrdiff_t {
      const auto it = std::find(cols.begin(), cols.end(), name);
      return it == cols.end() ? -1 : it - cols.begin();
    };
    const auto path_col = col("path");
    const auto label_col = col("label");
    const auto split_col = col("split");
    if (path_col < 0) throw InputError("manifest", path.string() + ": header lacks a 'path' column");
    for (std::string line; std::getline(in, line);) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto f = split_csv_line(line);
      auto field = [&](std::ptrdiff_t c) {
        return c >= 0 && static_cast<std::size_t>(c) < f.size() ? f[static_cast<std::size_t>(c)] : std::string{};
      };
      m.entries.push_back(make_record(root, field(path_col), field(label_col), field(split_col)));
    }
  }

  std::set<std::string> ids;
  for (const auto& e : m.entries) {
    if (!ids.insert(e.id).second) throw InputError("manifest", "duplicate image id " + e.id);
    if (e.split == Split::test && !e.ground_truth) {
      throw InputError("manifest", "test entry " + e.id + " has no label");
    }
    if (check_files && !std::filesystem::exists(e.source)) {
      throw InputError("manifest", "image not found: " + e.source);
    }
  }
  return m;
}

std::vector<std::string> DatasetManifest::class_names() const {
  std::set<std::string> names;
  for (const auto& e : entries) {
    if (e.ground_truth) names.insert(*e.ground_truth);
  }
  return {names.begin(), names.end()};
}

std::vector<ImageRecord> DatasetManifest::split(Split s) const {
  std::vector<ImageRecord> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

DiscoverySample sample_balanced(const DatasetManifest& manifest, int per_class, std::uint64_t seed) {
  if (per_class < 1) throw InputError("sample", "per_class must be >= 1");
  std::vector<ImageRecord> images;
  std::vector<std::pair<std::string, int>> counts;
  for (auto& [cls, pool] : discovery_pool(manifest)) {
    if (pool.size() < static_cast<std::size_t>(per_class)) {
      throw InputError("sample", "class '" + cls + "' has " + std::to_string(pool.size()) +
                                     " training images, fewer than " + std::to_string(per_class));
    }
    auto picked = draw(pool, static_cast<std::size_t>(per_class), seed, cls);
    images.insert(images.end(), picked.begin(), picked.end());
    counts.emplace_back(cls, per_class);
  }
  return finish(std::move(images), std::move(counts));
}

std::vector<int> zipf_counts(std::size_t n_classes, double s, int lo, int hi) {
  if (lo < 1 || hi < lo) throw InputError("sample", "zipf bounds must satisfy 1 <= lo <= hi");
  std::vector<int> out(n_classes, hi);
  if (n_classes <= 1) return out;
  // The pmf normalizer cancels in the affine map, so raw r^-s suffices.
  const double top = 1.0;
  const double bottom = std::pow(static_cast<double>(n_classes), -s);
  for (std::size_t r = 0; r < n_classes; ++r) {
    const double p = std::pow(static_cast<double>(r + 1), -s);
    const double mapped = lo + (p - bottom) / (top - bottom) * (hi - lo);
    out[r] = std::clamp(static_cast<int>(std::floor(mapped + 0.5)), lo, hi);
  }
  return out;
}

DiscoverySample sample_zipf(const DatasetManifest& manifest, std::uint64_t seed, double s, int lo, int hi) {
  auto pool = discovery_pool(manifest);
  std::vector<std::string> ranked;
  for (const auto& [cls, v] : pool) ranked.push_back(cls);
  std::mt19937_64 rng(digest64(std::to_string(seed) + "\x1fzipf-rank"));
  partial_shuffle(ranked, ranked.size(), rng);
  const auto counts = zipf_counts(ranked.size(), s, lo, hi);

  std::vector<ImageRecord> images;
  std::vector<std::pair<std::string, int>> realized;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& candidates = pool.at(ranked[r]);
    if (candidates.size() < static_cast<std::size_t>(lo)) {
      throw InputError("sample", "class '" + ranked[r] + "' has fewer than " + std::to_string(lo) +
                                     " training images");
    }
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(counts[r]), candidates.size());
    auto picked = draw(candidates, n, seed, ranked[r]);
    images.insert(images.end(), picked.begin(), picked.end());
    realized.emplace_back(ranked[r], static_cast<int>(n));
  }
  return finish(std::move(images), std::move(realized));
}

}  // namespace finer::eval
