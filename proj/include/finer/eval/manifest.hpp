#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "finer/core/types.hpp"

namespace finer::eval {

// Dataset listing. CSV (header with path,label,split columns) or JSONL (one
// {"path","label","split"} object per line). Paths are relative to the
// manifest's directory; the path string is the image id.
struct DatasetManifest {
  std::string name;
  std::vector<ImageRecord> entries;

  static DatasetManifest load(const std::filesystem::path& path, bool check_files = true);

  // Ground-truth class names over all entries, sorted.
  std::vector<std::string> class_names() const;
  std::vector<ImageRecord> split(Split s) const;
};

struct DiscoverySample {
  std::vector<ImageRecord> images;                       // sorted by id, split = discovery
  std::vector<std::pair<std::string, int>> class_counts;  // in rank order (zipf) or name order
};

// `per_class` labeled train/discovery images per class, drawn uniformly
// without replacement.
DiscoverySample sample_balanced(const DatasetManifest& manifest, int per_class, std::uint64_t seed);

// Per-rank counts: Zipf(s) pmf over ranks 1..n affinely mapped so rank 1 gets
// `hi` and rank n gets `lo`, rounded half up.
std::vector<int> zipf_counts(std::size_t n_classes, double s, int lo, int hi);

// Classes ranked by a seeded shuffle, then sampled per zipf_counts (capped by
// availability).
DiscoverySample sample_zipf(const DatasetManifest& manifest, std::uint64_t seed, double s = 2.0,
                            int lo = 1, int hi = 10);

}  // namespace finer::eval
