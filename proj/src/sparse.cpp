#include "swvm/sparse.h"

#include <algorithm>
#include <cmath>

#include "swvm/errors.h"

namespace swvm {

SparseVector SparseVector::from_unsorted(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  SparseVector out;
  out.entries_.reserve(entries.size());
  for (const auto& [id, value] : entries) {
    if (!out.entries_.empty() && out.entries_.back().first == id) {
      out.entries_.back().second += value;
    } else {
      out.entries_.emplace_back(id, value);
    }
  }
  std::erase_if(out.entries_, [](const Entry& e) { return e.second == 0.0; });
  return out;
}

double SparseVector::value(FeatureId id) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), id,
      [](const Entry& e, FeatureId key) { return e.first < key; });
  return (it != entries_.end() && it->first == id) ? it->second : 0.0;
}

double SparseVector::squared_norm() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.second * e.second;
  return sum;
}

double SparseVector::dot(const SparseVector& other) const {
  double sum = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      sum += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return sum;
}

double SparseVector::dot(const WeightVector& w) const {
  double sum = 0.0;
  for (const auto& [id, value] : entries_) sum += w[id] * value;
  return sum;
}

double SparseVector::total() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.second;
  return sum;
}

SparseVector SparseVector::scaled(double factor) const {
  if (factor == 0.0) return {};
  SparseVector out = *this;
  for (auto& e : out.entries_) e.second *= factor;
  std::erase_if(out.entries_, [](const Entry& e) { return e.second == 0.0; });
  return out;
}

SparseVector SparseVector::add(const SparseVector& a, const SparseVector& b,
                               double factor) {
  SparseVector out;
  out.entries_.reserve(a.size() + b.size());
  auto i = a.entries_.begin();
  auto j = b.entries_.begin();
  auto push = [&out](FeatureId id, double v) {
    if (v != 0.0) out.entries_.emplace_back(id, v);
  };
  while (i != a.entries_.end() || j != b.entries_.end()) {
    if (j == b.entries_.end() ||
        (i != a.entries_.end() && i->first < j->first)) {
      push(i->first, i->second);
      ++i;
    } else if (i == a.entries_.end() || j->first < i->first) {
      push(j->first, factor * j->second);
      ++j;
    } else {
      push(i->first, i->second + factor * j->second);
      ++i;
      ++j;
    }
  }
  return out;
}

SparseVector SparseVector::combine(std::span<const SparseVector> vectors,
                                   std::span<const double> coeffs) {
  if (vectors.size() != coeffs.size()) {
    throw ContractViolation("combine: vector/coefficient count mismatch");
  }
  std::vector<Entry> all;
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    for (const auto& [id, value] : vectors[k].entries()) {
      all.emplace_back(id, coeffs[k] * value);
    }
  }
  // Stable sort keeps summation order fixed by template order.
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    return a.first < b.first;
  });
  SparseVector out;
  for (const auto& [id, value] : all) {
    if (!out.entries_.empty() && out.entries_.back().first == id) {
      out.entries_.back().second += value;
    } else {
      out.entries_.emplace_back(id, value);
    }
  }
  std::erase_if(out.entries_, [](const Entry& e) { return e.second == 0.0; });
  return out;
}

void WeightVector::set(FeatureId id, double value) {
  auto i = static_cast<std::size_t>(id);
  if (i >= values_.size()) values_.resize(i + 1, 0.0);
  values_[i] = value;
}

void WeightVector::add(const SparseVector& delta, double factor) {
  if (delta.empty() || factor == 0.0) return;
  resize(static_cast<std::size_t>(delta.entries().back().first) + 1);
  for (const auto& [id, value] : delta.entries()) {
    values_[static_cast<std::size_t>(id)] += factor * value;
  }
}

double WeightVector::max_abs_diff(const WeightVector& a, const WeightVector& b) {
  std::size_t n = std::max(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto id = static_cast<FeatureId>(i);
    worst = std::max(worst, std::abs(a[id] - b[id]));
  }
  return worst;
}

}  // namespace swvm
