#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace finer::testkit {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path source_dir() { return FINER_SOURCE_DIR; }
fs::path cli_binary() { return FINER_CLI_BINARY; }

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

Bytes encode(const cv::Mat& img) {
  std::vector<std::uint8_t> out;
  cv::imencode(".png", img, out);
  return out;
}

}  // namespace

Bytes solid_png(int r, int g, int b, int w, int h) {
  return encode(cv::Mat(h, w, CV_8UC3, cv::Scalar(b, g, r)));
}

Bytes noise_png(std::uint64_t seed, int w, int h) {
  cv::Mat img(h, w, CV_8UC3);
  std::mt19937_64 rng(seed);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto v = rng();
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(v & 0xff, (v >> 8) & 0xff, (v >> 16) & 0xff);
    }
  }
  return encode(img);
}

const std::vector<ToyClass>& toy_classes() {
  static const std::vector<ToyClass> classes{
      {"Scarlet Tanager", "red", 230, 0, 0, {"Crimson Decoy", "Mock Bird"}},
      {"Green Jay", "green", 0, 200, 0, {"Leaf Decoy", "Mock Bird"}},
      {"Blue Jay", "blue", 0, 0, 220, {"Sky Decoy", "Plain Bird"}},
      {"American Goldfinch", "yellow", 240, 240, 0, {"Lemon Decoy", "Plain Bird"}},
      {"Turquoise Parrot", "cyan", 0, 210, 210, {"Teal Decoy", "Mock Bird"}},
  };
  return classes;
}

std::vector<std::string> toy_truth_names() {
  std::vector<std::string> out;
  for (const auto& c : toy_classes()) out.push_back(c.name);
  std::sort(out.begin(), out.end());
  return out;
}

json toy_script() {
  constexpr std::size_t dim = 8;
  json text = json::object();
  std::set<std::string> distractors;
  for (const auto& c : toy_classes()) {
    std::vector<double> v(dim, 0.0);
    v[0] = c.r > 0 ? 1.0 : 0.0;
    v[1] = c.g > 0 ? 1.0 : 0.0;
    v[2] = c.b > 0 ? 1.0 : 0.0;
    text[c.name] = v;
    distractors.insert(c.distractors.begin(), c.distractors.end());
  }
  std::size_t slot = 3;
  for (const auto& d : distractors) {
    std::vector<double> v(dim, 0.0);
    v[slot] = 1.0;
    slot = slot + 1 < dim ? slot + 1 : 3;
    text[d] = v;
  }
  json chat = json::array();
  for (const auto& c : toy_classes()) {
    json reply = {{"summary", {"The bird is " + c.color + "."}},
                  {"names", {c.name, c.distractors[0], c.distractors[1]}}};
    chat.push_back({{"contains", "a photo of a " + c.color + " bird"},
                    {"completions", {"Output JSON: " + reply.dump()}}});
  }
  chat.push_back({{"contains", "useful visual attributes"},
                  {"completions", {"- plumage color\n- bill shape", "1. plumage color\n2. wing pattern"}}});
  return {
      {"seed", 7},
      {"dim", dim},
      {"image_embedding", "mean_color"},
      {"vqa",
       {{{"contains", "category of the main object"}, {"answer", " Bird \n"}},
        {{"contains", "Describe this image in details"}, {"answer", "a photo of a {color} bird"}},
        {{"contains", "plumage color"}, {"answer", "{color} feathers"}},
        {{"contains", "Describe the"}, {"answer", "ordinary"}}}},
      {"chat", chat},
      {"embeddings", {{"text", text}}},
  };
}

ToyDataset write_toy_dataset(const fs::path& dir, int n_test) {
  ToyDataset d{dir, dir / "manifest.csv", dir / "mock.json"};
  fs::create_directories(dir / "images");
  std::ofstream csv(d.manifest);
  csv << "path,label,split\n";
  for (const auto& c : toy_classes()) {
    for (int i = 0; i < 3 + n_test; ++i) {
      const bool disc = i < 3;
      // Small per-image offsets keep bytes distinct while the colour stays put.
      const int dr = c.r > 0 ? -i : 0;
      const int dg = c.g > 0 ? -i : 0;
      const int db = c.b > 0 ? -i : 0;
      const std::string rel = "images/" + c.color + "_" + std::to_string(i) + ".png";
      write_file_atomic((dir / rel).string(), [&] {
        const Bytes png = solid_png(c.r + dr, c.g + dg, c.b + db);
        return std::string(png.begin(), png.end());
      }());
      csv << rel << "," << c.name << "," << (disc ? "discovery" : "test") << "\n";
    }
  }
  std::ofstream(d.script) << toy_script().dump(2);
  return d;
}

Embedding random_embedding(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return Embedding(std::move(v));
}

long long brute_force_assignment(const std::vector<std::vector<long long>>& w) {
  const std::size_t rows = w.size(), cols = w.front().size();
  const std::size_t n = std::max(rows, cols);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  long long best = 0;
  do {
    long long total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (perm[r] < cols) total += w[r][perm[r]];
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

void search(std::size_t i, const std::vector<std::string>& clusters, const std::vector<std::string>& classes,
            const std::map<std::pair<std::string, std::string>, std::size_t>& counts, std::vector<bool>& used,
            std::size_t acc, std::size_t& best) {
  if (i == clusters.size()) {
    best = std::max(best, acc);
    return;
  }
  search(i + 1, clusters, classes, counts, used, acc, best);  // cluster left unmatched
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (used[j]) continue;
    used[j] = true;
    const auto it = counts.find({clusters[i], classes[j]});
    search(i + 1, clusters, classes, counts, used, acc + (it == counts.end() ? 0 : it->second), best);
    used[j] = false;
  }
}

}  // namespace

std::size_t brute_force_matched(const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
  std::set<std::string> cl(predicted.begin(), predicted.end()), cs(truth.begin(), truth.end());
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (std::size_t i = 0; i < predicted.size(); ++i) ++counts[{predicted[i], truth[i]}];
  const std::vector<std::string> clusters(cl.begin(), cl.end()), classes(cs.begin(), cs.end());
  std::vector<bool> used(classes.size(), false);
  std::size_t best = 0;
  search(0, clusters, classes, counts, used, 0, best);
  return best;
}

std::vector<std::string> brute_force_refined(const std::vector<std::string>& names,
                                             const std::vector<Embedding>& name_embeddings,
                                             const std::vector<Embedding>& image_embeddings) {
  std::set<std::string> keep;
  for (const auto& img : image_embeddings) {
    double best = -2.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto& a = img.values();
      const auto& b = name_embeddings[j].values();
      double dot = 0, na = 0, nb = 0;
      for (std::size_t d = 0; d < a.size(); ++d) {
        dot += a[d] * b[d];
        na += a[d] * a[d];
        nb += b[d] * b[d];
      }
      const double c = dot / std::sqrt(na * nb);
      if (c > best) {
        best = c;
        arg = j;
      }
    }
    keep.insert(names[arg]);
  }
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (keep.count(n)) out.push_back(n);
  }
  return out;
}

}  // namespace finer::testkit
