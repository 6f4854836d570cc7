#include "finer/core/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "finer/core/error.hpp"

namespace finer {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double Embedding::norm() const { return std::sqrt(dot(values_, values_)); }

Embedding normalize(const Embedding& v) {
  const double n = v.norm();
  if (v.empty() || !(n > 0.0) || !std::isfinite(n)) {
    throw Error("embedding", "degenerate embedding");
  }
  std::vector<double> out(v.values().begin(), v.values().end());
  for (auto& x : out) x /= n;
  return Embedding(std::move(out));
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error("embedding", "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                 std::to_string(b.dim()));
  }
  const double aa = dot(a.values(), a.values());
  const double bb = dot(b.values(), b.values());
  if (!(aa > 0.0) || !(bb > 0.0)) throw Error("embedding", "degenerate embedding");
  // sqrt(aa * bb) rather than |a||b| so that cosine(v, v) is exactly 1.
  const double c = dot(a.values(), b.values()) / std::sqrt(aa * bb);
  return std::clamp(c, -1.0, 1.0);
}

Embedding scaled(const Embedding& v, double factor) {
  std::vector<double> out(v.values().begin(), v.values().end());
  for (auto& x : out) x *= factor;
  return Embedding(std::move(out));
}

void add_in_place(Embedding& acc, const Embedding& v) {
  if (acc.empty()) {
    acc = Embedding(std::vector<double>(v.dim(), 0.0));
  }
  if (acc.dim() != v.dim()) throw Error("embedding", "dimension mismatch in sum");
  for (std::size_t i = 0; i < v.dim(); ++i) acc[i] += v[i];
}

ClassScore argmax_class(const Embedding& image,
                        std::span<const std::pair<std::string, Embedding>> classes) {
  if (classes.empty()) throw Error("classify", "empty classifier list");
  ClassScore best{classes[0].first, cosine(image, classes[0].second), 0};
  for (std::size_t i = 1; i < classes.size(); ++i) {
    const double s = cosine(image, classes[i].second);
    if (s > best.score) best = {classes[i].first, s, i};
  }
  return best;
}

std::vector<ClassScore> rank_classes(
    const Embedding& image, std::span<const std::pair<std::string, Embedding>> classes) {
  if (classes.empty()) throw Error("classify", "empty classifier list");
  std::vector<ClassScore> out;
  out.reserve(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out.push_back({classes[i].first, cosine(image, classes[i].second), i});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ClassScore& a, const ClassScore& b) { return a.score > b.score; });
  return out;
}

}  // namespace finer
