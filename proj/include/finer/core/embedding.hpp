#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace finer {

// Dense embedding held in double precision. Providers emit float32 and run
// files store float32; everything in between is 64-bit.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  Embedding(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double norm() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

Embedding normalize(const Embedding& v);
double cosine(const Embedding& a, const Embedding& b);

// Elementwise helpers used by the classifier reductions.
Embedding scaled(const Embedding& v, double factor);
void add_in_place(Embedding& acc, const Embedding& v);

struct ClassScore {
  std::string name;
  double score = 0.0;
  std::size_t index = 0;
};

// Highest-cosine class; ties keep the earliest entry.
ClassScore argmax_class(const Embedding& image,
                        std::span<const std::pair<std::string, Embedding>> classes);

// All classes ranked by cosine, descending, stable on ties.
std::vector<ClassScore> rank_classes(
    const Embedding& image, std::span<const std::pair<std::string, Embedding>> classes);

}  // namespace finer
