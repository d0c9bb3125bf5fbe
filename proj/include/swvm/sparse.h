#ifndef SWVM_SPARSE_H_
#define SWVM_SPARSE_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace swvm {

using FeatureId = std::int32_t;

class WeightVector;

// Sorted (id, value) pairs. Ids strictly increase and no stored value is 0.
class SparseVector {
 public:
  using Entry = std::pair<FeatureId, double>;

  SparseVector() = default;

  // Sorts, merges duplicate ids by summation and drops exact zeros.
  static SparseVector from_unsorted(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  double value(FeatureId id) const;
  double squared_norm() const;
  double dot(const SparseVector& other) const;
  double dot(const WeightVector& w) const;

  // Sum of all stored values (the "mass" of a count vector).
  double total() const;

  SparseVector scaled(double factor) const;

  // a + factor * b with exact zero cancellation.
  static SparseVector add(const SparseVector& a, const SparseVector& b,
                          double factor = 1.0);

  // sum_i coeffs[i] * vectors[i].
  static SparseVector combine(std::span<const SparseVector> vectors,
                              std::span<const double> coeffs);

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<Entry> entries_;
};

// Dense parameter vector. Reads past the end are zero and writes grow it,
// so the vector can trail a growing feature alphabet.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::size_t size) : values_(size, 0.0) {}
  explicit WeightVector(std::vector<double> values)
      : values_(std::move(values)) {}

  double operator[](FeatureId id) const {
    auto i = static_cast<std::size_t>(id);
    return i < values_.size() ? values_[i] : 0.0;
  }

  void set(FeatureId id, double value);
  void add(const SparseVector& delta, double factor = 1.0);
  void resize(std::size_t size) {
    if (size > values_.size()) values_.resize(size, 0.0);
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  // Max |a_i - b_i| with missing coordinates read as zero.
  static double max_abs_diff(const WeightVector& a, const WeightVector& b);

 private:
  std::vector<double> values_;
};

}  // namespace swvm

#endif  // SWVM_SPARSE_H_
