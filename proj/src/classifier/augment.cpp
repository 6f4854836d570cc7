#include "finer/classifier/augment.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "finer/core/error.hpp"

namespace finer::classifier {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(n)));
}

cv::Mat random_crop(const cv::Mat& img, const AugmentationSpec& spec, std::mt19937_64& rng) {
  const double scale = std::sqrt(uniform(rng, spec.crop_scale_min, spec.crop_scale_max));
  const int w = std::max(1, static_cast<int>(std::lround(img.cols * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(img.rows * scale)));
  const int x = static_cast<int>(below(rng, static_cast<std::size_t>(img.cols - w + 1)));
  const int y = static_cast<int>(below(rng, static_cast<std::size_t>(img.rows - h + 1)));
  cv::Mat out;
  cv::resize(img(cv::Rect(x, y, w, h)), out, img.size(), 0, 0, cv::INTER_LINEAR);
  return out;
}

cv::Mat color_jitter(const cv::Mat& img, const AugmentationSpec& spec, std::mt19937_64& rng) {
  const double brightness = uniform(rng, 1.0 - spec.jitter, 1.0 + spec.jitter);
  const double contrast = uniform(rng, 1.0 - spec.jitter, 1.0 + spec.jitter);
  const double saturation = uniform(rng, 1.0 - spec.jitter, 1.0 + spec.jitter);
  cv::Mat f;
  img.convertTo(f, CV_32FC3, brightness);
  cv::Mat gray;
  cv::cvtColor(f, gray, cv::COLOR_BGR2GRAY);
  const double mean = cv::mean(gray)[0];
  f = (f - cv::Scalar::all(mean)) * contrast + cv::Scalar::all(mean);
  cv::cvtColor(f, gray, cv::COLOR_BGR2GRAY);
  cv::Mat gray3;
  cv::cvtColor(gray, gray3, cv::COLOR_GRAY2BGR);
  f = gray3 + (f - gray3) * saturation;
  cv::Mat out;
  f.convertTo(out, CV_8UC3);  // saturates
  return out;
}

cv::Mat rotation(const cv::Mat& img, const AugmentationSpec& spec, std::mt19937_64& rng) {
  const double angle = uniform(rng, -spec.max_rotation_deg, spec.max_rotation_deg);
  const cv::Point2f center(static_cast<float>(img.cols - 1) / 2.0f, static_cast<float>(img.rows - 1) / 2.0f);
  cv::Mat out;
  cv::warpAffine(img, out, cv::getRotationMatrix2D(center, angle, 1.0), img.size(), cv::INTER_LINEAR,
                 cv::BORDER_CONSTANT, cv::Scalar::all(0));
  return out;
}

cv::Mat perspective(const cv::Mat& img, const AugmentationSpec& spec, std::mt19937_64& rng) {
  const float w = static_cast<float>(img.cols - 1);
  const float h = static_cast<float>(img.rows - 1);
  const double dx = spec.perspective * img.cols / 2.0;
  const double dy = spec.perspective * img.rows / 2.0;
  auto jx = [&] { return static_cast<float>(uniform(rng, 0.0, dx)); };
  auto jy = [&] { return static_cast<float>(uniform(rng, 0.0, dy)); };
  const cv::Point2f src[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
  const cv::Point2f dst[4] = {{jx(), jy()}, {w - jx(), jy()}, {w - jx(), h - jy()}, {jx(), h - jy()}};
  cv::Mat out;
  cv::warpPerspective(img, out, cv::getPerspectiveTransform(src, dst), img.size(), cv::INTER_LINEAR,
                      cv::BORDER_CONSTANT, cv::Scalar::all(0));
  return out;
}

}  // namespace

const char* to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::random_crop: return "random_crop";
    case AugmentOp::color_jitter: return "color_jitter";
    case AugmentOp::horizontal_flip: return "horizontal_flip";
    case AugmentOp::rotation: return "rotation";
    case AugmentOp::perspective: return "perspective";
  }
  return "random_crop";
}

AugmentOp parse_augment_op(const std::string& s) {
  for (auto op : kAllAugmentOps) {
    if (s == to_string(op)) return op;
  }
  throw InputError("config", "unknown augmentation op '" + s + "'");
}

void AugmentationSpec::validate() const {
  if (k < 0) throw InputError("config", "k_augment must be >= 0");
  for (double p : apply_prob) {
    if (p < 0.0 || p > 1.0) throw InputError("config", "augmentation probabilities must be in [0,1]");
  }
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
    throw InputError("config", "crop scale range must satisfy 0 < min <= max <= 1");
  }
  if (jitter < 0.0 || jitter >= 1.0) throw InputError("config", "jitter must be in [0,1)");
  if (perspective < 0.0 || perspective >= 1.0) throw InputError("config", "perspective must be in [0,1)");
}

Bytes augment(std::span<const std::uint8_t> image, const std::string& image_id,
              const AugmentationSpec& spec, int index) {
  const cv::Mat buf(1, static_cast<int>(image.size()), CV_8UC1, const_cast<std::uint8_t*>(image.data()));
  cv::Mat img = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (img.empty()) throw Error("augment", "undecodable image " + image_id);

  std::mt19937_64 rng(digest64(std::to_string(spec.seed) + "\x1f" + image_id + "\x1f" + std::to_string(index)));

  std::vector<AugmentOp> chosen = spec.ops;
  if (spec.random_choice && chosen.size() > 1) {
    const std::size_t m = 1 + below(rng, chosen.size());
    for (std::size_t i = 0; i < m; ++i) std::swap(chosen[i], chosen[i + below(rng, chosen.size() - i)]);
    chosen.resize(m);
    std::sort(chosen.begin(), chosen.end());
  }
  for (AugmentOp op : chosen) {
    if (uniform(rng, 0.0, 1.0) >= spec.apply_prob[static_cast<std::size_t>(op)]) continue;
    switch (op) {
      case AugmentOp::random_crop: img = random_crop(img, spec, rng); break;
      case AugmentOp::color_jitter: img = color_jitter(img, spec, rng); break;
      case AugmentOp::horizontal_flip: cv::flip(img, img, 1); break;
      case AugmentOp::rotation: img = rotation(img, spec, rng); break;
      case AugmentOp::perspective: img = perspective(img, spec, rng); break;
    }
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", img, out)) throw Error("augment", "PNG encoding failed for " + image_id);
  return out;
}

}  // namespace finer::classifier
