#include "finer/classifier/classifier.hpp"

#include <algorithm>

#include "finer/core/digest.hpp"
#include "finer/core/parallel.hpp"
#include "finer/reason/reason.hpp"

namespace finer::classifier {

std::vector<Embedding> build_text_classifier(std::span<const Embedding> name_embeddings) {
  if (name_embeddings.empty()) throw Error("classifier", "no classes to build a text classifier for");
  std::vector<Embedding> out;
  out.reserve(name_embeddings.size());
  for (const auto& e : name_embeddings) out.push_back(normalize(e));
  return out;
}

std::vector<Embedding> build_text_classifier(providers::Providers& providers,
                                             std::span<const std::string> names,
                                             const std::optional<std::string>& name_template) {
  std::vector<Embedding> raw(names.size());
  const int workers = providers.client(providers::Role::text_embed).endpoint().max_concurrency;
  parallel_for(names.size(), workers, [&](std::size_t i) {
    raw[i] = providers.embed_text(reason::class_text(names[i], name_template));
  });
  return build_text_classifier(raw);
}

PseudoLabeling pseudo_label(std::span<const LabeledEmbedding> images, std::span<const std::string> names,
                            std::span<const Embedding> text_classifier) {
  const auto result = reason::denoise(names, text_classifier, images);
  PseudoLabeling labeling;
  for (const auto& n : names) labeling.support[n] = 0;
  for (const auto& a : result.assignments) {
    labeling.assignments[a.image_id] = a.name;
    ++labeling.support[a.name];
  }
  return labeling;
}

Embedding image_prototype(std::span<const Embedding> originals, std::span<const Embedding> augmented,
                          int k) {
  const std::size_t support = originals.size();
  if (support == 0) throw Error("classifier", "class with zero support");
  if (k < 0 || augmented.size() != support * static_cast<std::size_t>(k)) {
    throw Error("classifier", "expected U*K augmented embeddings");
  }
  Embedding sum;
  for (const auto& e : originals) add_in_place(sum, normalize(e));
  for (const auto& e : augmented) add_in_place(sum, normalize(e));
  return scaled(sum, 1.0 / (static_cast<double>(support) * (k + 1)));
}

std::vector<Embedding> build_image_classifier(const PseudoLabeling& labeling,
                                              std::span<const std::string> names,
                                              std::span<const ImageRecord> images, int k,
                                              const AugmentedEmbedder& embed, int workers) {
  if (k < 0) throw Error("classifier", "k_augment must be >= 0");
  std::vector<const ImageRecord*> sorted;
  for (const auto& img : images) sorted.push_back(&img);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

  // members[c] = class c's supporting images in id order.
  std::vector<std::vector<const ImageRecord*>> members(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    for (const auto* img : sorted) {
      const auto it = labeling.assignments.find(img->id);
      if (it != labeling.assignments.end() && it->second == names[c]) members[c].push_back(img);
    }
    if (members[c].empty()) throw Error("classifier", "class '" + names[c] + "' has zero support");
  }

  struct Job {
    std::size_t cls;
    const ImageRecord* image;
    int index;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < names.size(); ++c) {
    for (const auto* img : members[c]) {
      for (int j = 0; j <= k; ++j) jobs.push_back({c, img, j});
    }
  }
  std::vector<Embedding> embedded(jobs.size());
  parallel_for(jobs.size(), workers,
               [&](std::size_t i) { embedded[i] = embed(*jobs[i].image, jobs[i].index); });

  // Sequential reduction in a fixed order keeps the sums bit-reproducible.
  std::vector<std::vector<Embedding>> originals(names.size());
  std::vector<std::vector<Embedding>> augmented(names.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (jobs[i].index == 0 ? originals : augmented)[jobs[i].cls].push_back(std::move(embedded[i]));
  }
  std::vector<Embedding> out;
  out.reserve(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) out.push_back(image_prototype(originals[c], augmented[c], k));
  return out;
}

AugmentedEmbedder provider_embedder(providers::Providers& providers, const AugmentationSpec& spec) {
  return [&providers, spec](const ImageRecord& image, int index) {
    const Bytes raster = read_file(image.source);
    if (index == 0) return providers.embed_image(raster);
    return providers.embed_image(augment(raster, image.id, spec, index));
  };
}

Embedding fuse(const Embedding& w_txt, const Embedding& w_img, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw Error("classifier", "alpha must be in [0,1]");
  if (w_txt.dim() != w_img.dim()) throw Error("classifier", "dimension mismatch in fuse");
  std::vector<double> out(w_txt.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * w_txt[i] + (1.0 - alpha) * w_img[i];
  return Embedding(std::move(out));
}

ClassifierBundle assemble(std::span<const std::string> names, std::span<const Embedding> w_txt,
                          std::span<const Embedding> w_img, const PseudoLabeling& labeling,
                          double alpha, int k) {
  if (names.size() != w_txt.size() || names.size() != w_img.size()) {
    throw Error("classifier", "one text and one image vector per class required");
  }
  ClassifierBundle bundle;
  bundle.alpha = alpha;
  bundle.k_augment = k;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto s = labeling.support.find(names[i]);
    bundle.classes.push_back({names[i], w_txt[i], w_img[i], fuse(w_txt[i], w_img[i], alpha),
                              s == labeling.support.end() ? 0 : s->second});
  }
  return bundle;
}

ClassifierBundle refuse(const ClassifierBundle& bundle, double alpha) {
  ClassifierBundle out = bundle;
  out.alpha = alpha;
  for (auto& c : out.classes) c.w_mm = fuse(c.w_txt, c.w_img, alpha);
  return out;
}

std::vector<Prediction> classify(std::span<const LabeledEmbedding> test_images,
                                 const ClassifierBundle& bundle, std::size_t runner_ups) {
  const auto classes = bundle.fused();
  std::vector<Prediction> out;
  out.reserve(test_images.size());
  for (const auto& [id, emb] : test_images) {
    const auto ranked = rank_classes(emb, classes);
    Prediction p{id, ranked.front().name, ranked.front().score, {}};
    for (std::size_t r = 1; r < ranked.size() && r <= runner_ups; ++r) {
      p.runner_ups.emplace_back(ranked[r].name, ranked[r].score);
    }
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const Prediction& a, const Prediction& b) { return a.image_id < b.image_id; });
  return out;
}

std::vector<LabeledEmbedding> embed_images(providers::Providers& providers,
                                           std::span<const ImageRecord> images) {
  std::vector<LabeledEmbedding> out(images.size());
  const int workers = providers.client(providers::Role::image_embed).endpoint().max_concurrency;
  parallel_for(images.size(), workers, [&](std::size_t i) {
    out[i] = {images[i].id, providers.embed_image(read_file(images[i].source))};
  });
  return out;
}

}  // namespace finer::classifier
