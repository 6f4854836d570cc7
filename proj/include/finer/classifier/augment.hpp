#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "finer/core/digest.hpp"

namespace finer::classifier {

enum class AugmentOp { random_crop, color_jitter, horizontal_flip, rotation, perspective };

inline constexpr std::array<AugmentOp, 5> kAllAugmentOps = {
    AugmentOp::random_crop, AugmentOp::color_jitter, AugmentOp::horizontal_flip, AugmentOp::rotation,
    AugmentOp::perspective};

const char* to_string(AugmentOp op);
AugmentOp parse_augment_op(const std::string& s);

struct AugmentationSpec {
  int k = 10;
  std::uint64_t seed = 0;
  std::vector<AugmentOp> ops{kAllAugmentOps.begin(), kAllAugmentOps.end()};
  std::array<double, 5> apply_prob{0.5, 0.5, 0.5, 0.5, 0.5};  // indexed by AugmentOp
  bool random_choice = true;  // draw a random non-empty subset of ops per sample

  double crop_scale_min = 0.6;  // area fraction
  double crop_scale_max = 1.0;
  double jitter = 0.3;  // brightness, contrast, saturation factors in [1-j, 1+j]
  double max_rotation_deg = 30.0;
  double perspective = 0.3;

  void validate() const;
};

// Augmented copy `index` (1-based) of an image, re-encoded as PNG. The
// randomness is a pure function of (spec.seed, image_id, index).
Bytes augment(std::span<const std::uint8_t> image, const std::string& image_id,
              const AugmentationSpec& spec, int index);

}  // namespace finer::classifier
