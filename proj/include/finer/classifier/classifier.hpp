#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finer/classifier/augment.hpp"
#include "finer/core/types.hpp"
#include "finer/providers/providers.hpp"

namespace finer::classifier {

using LabeledEmbedding = std::pair<std::string, Embedding>;  // (image id or class name, vector)

std::vector<Embedding> build_text_classifier(std::span<const Embedding> name_embeddings);
std::vector<Embedding> build_text_classifier(providers::Providers& providers,
                                             std::span<const std::string> names,
                                             const std::optional<std::string>& name_template = {});

struct PseudoLabeling {
  std::map<std::string, std::string> assignments;  // image id -> class
  std::map<std::string, std::size_t> support;      // class -> U_c
};

// Nearest-name assignment of every discovery image.
PseudoLabeling pseudo_label(std::span<const LabeledEmbedding> images, std::span<const std::string> names,
                            std::span<const Embedding> text_classifier);

// (1 / (U(K+1))) * (sum of unit originals + sum of unit augmentations), in
// that order; requires |originals| == U and |augmented| == U*K.
Embedding image_prototype(std::span<const Embedding> originals, std::span<const Embedding> augmented,
                          int k);

// embed(image, 0) is the original; embed(image, j) for j in 1..K the j-th
// augmentation. Must be thread-safe when workers > 1.
using AugmentedEmbedder = std::function<Embedding(const ImageRecord&, int)>;

std::vector<Embedding> build_image_classifier(const PseudoLabeling& labeling,
                                              std::span<const std::string> names,
                                              std::span<const ImageRecord> images, int k,
                                              const AugmentedEmbedder& embed, int workers = 1);

AugmentedEmbedder provider_embedder(providers::Providers& providers, const AugmentationSpec& spec);

Embedding fuse(const Embedding& w_txt, const Embedding& w_img, double alpha);

ClassifierBundle assemble(std::span<const std::string> names, std::span<const Embedding> w_txt,
                          std::span<const Embedding> w_img, const PseudoLabeling& labeling,
                          double alpha, int k);

// Re-fuse an existing bundle at another alpha.
ClassifierBundle refuse(const ClassifierBundle& bundle, double alpha);

// Argmax over w_mm for every image, sorted by image id.
std::vector<Prediction> classify(std::span<const LabeledEmbedding> test_images,
                                 const ClassifierBundle& bundle, std::size_t runner_ups = 3);

// Embeds images concurrently; output aligned with input.
std::vector<LabeledEmbedding> embed_images(providers::Providers& providers,
                                           std::span<const ImageRecord> images);

}  // namespace finer::classifier
