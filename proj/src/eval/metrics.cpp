#include "finer/eval/metrics.hpp"

#include <cstdint>

#include "finer/eval/assignment.hpp"

namespace finer::eval {

namespace {

const std::string& truth_of(const std::map<std::string, std::string>& truths, const std::string& id) {
  const auto it = truths.find(id);
  if (it == truths.end()) throw Error("evaluate", "no ground truth for image " + id);
  return it->second;
}

}  // namespace

ClusteringAccuracy clustering_accuracy(std::span<const Prediction> predictions,
                                       const std::map<std::string, std::string>& truths) {
  if (predictions.empty()) throw Error("evaluate", "empty prediction set");
  std::map<std::string, std::size_t> cluster_index;
  std::map<std::string, std::size_t> class_index;
  for (const auto& p : predictions) {
    cluster_index.emplace(p.predicted_name, 0);
    class_index.emplace(truth_of(truths, p.image_id), 0);
  }
  std::vector<std::string> clusters, classes;
  for (auto& [name, idx] : cluster_index) {
    idx = clusters.size();
    clusters.push_back(name);
  }
  for (auto& [name, idx] : class_index) {
    idx = classes.size();
    classes.push_back(name);
  }

  std::vector<std::vector<std::int64_t>> counts(clusters.size(), std::vector<std::int64_t>(classes.size(), 0));
  for (const auto& p : predictions) {
    ++counts[cluster_index.at(p.predicted_name)][class_index.at(truth_of(truths, p.image_id))];
  }
  const auto assignment = optimal_assignment(counts);

  ClusteringAccuracy out;
  out.n = predictions.size();
  out.matched = static_cast<std::size_t>(assignment.total);
  out.cacc = static_cast<double>(out.matched) / static_cast<double>(out.n);
  for (std::size_t r = 0; r < clusters.size(); ++r) {
    const auto c = assignment.row_to_col[r];
    if (c >= 0 && counts[r][static_cast<std::size_t>(c)] > 0) {
      out.matching.emplace_back(clusters[r], classes[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

double semantic_similarity(std::span<const Prediction> predictions,
                           const std::map<std::string, std::string>& truths,
                           const SentenceEmbedder& embed) {
  if (predictions.empty()) throw Error("evaluate", "empty prediction set");
  std::map<std::string, Embedding> cache;
  auto vec = [&](const std::string& s) -> const Embedding& {
    auto it = cache.find(s);
    if (it == cache.end()) it = cache.emplace(s, embed(s)).first;
    return it->second;
  };
  double sum = 0.0;
  for (const auto& p : predictions) sum += cosine(vec(p.predicted_name), vec(truth_of(truths, p.image_id)));
  return sum / static_cast<double>(predictions.size());
}

}  // namespace finer::eval
