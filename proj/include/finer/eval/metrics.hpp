#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finer/core/types.hpp"

namespace finer::eval {

struct ClusteringAccuracy {
  double cacc = 0.0;
  std::size_t matched = 0;
  std::size_t n = 0;
  // (predicted cluster name, ground-truth name) for matched pairs that share
  // at least one image.
  std::vector<std::pair<std::string, std::string>> matching;
};

// Clusters are the distinct predicted names. The optimal injective
// cluster->class matching over the count matrix decides which images count.
ClusteringAccuracy clustering_accuracy(std::span<const Prediction> predictions,
                                       const std::map<std::string, std::string>& truths);

using SentenceEmbedder = std::function<Embedding(const std::string&)>;

// Mean over images of cosine(sentence(predicted), sentence(truth)).
double semantic_similarity(std::span<const Prediction> predictions,
                           const std::map<std::string, std::string>& truths,
                           const SentenceEmbedder& embed);

}  // namespace finer::eval
