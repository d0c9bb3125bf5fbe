#ifndef SWVM_CHAIN_H_
#define SWVM_CHAIN_H_

#include <cstddef>
#include <vector>

#include "swvm/features.h"
#include "swvm/sparse.h"

namespace swvm {

struct DecodeResult {
  LabelSequence labeling;
  double score = 0.0;
};

// w . Phi(x, y), summed position by position from the local feature ids.
double score(const FeatureSpace& space, const WeightVector& w,
             const EncodedSentence& x, const LabelSequence& y);

// Trigram factor scores f_i(y[i-1], y[i], y[i+1]) for every position.
// Index num_labels() stands for BOS in the first slot and EOS in the last.
class ChainFactors {
 public:
  ChainFactors(const FeatureSpace& space, const WeightVector& w,
               const EncodedSentence& x);

  double operator()(std::size_t i, std::size_t prev, std::size_t cur,
                    std::size_t next) const {
    return table_[((i * stride_ + prev) * labels_ + cur) * stride_ + next];
  }

  std::size_t length() const { return length_; }
  std::size_t num_labels() const { return labels_; }
  std::size_t boundary() const { return labels_; }

 private:
  double& at(std::size_t i, std::size_t prev, std::size_t cur, std::size_t next) {
    return table_[((i * stride_ + prev) * labels_ + cur) * stride_ + next];
  }

  std::size_t length_;
  std::size_t labels_;
  std::size_t stride_;
  std::vector<double> table_;
};

// Exact argmax over all |Y|^L labelings (second-order DP over label pairs).
// Ties go to the lexicographically smallest labeling by label id.
DecodeResult viterbi(const FeatureSpace& space, const WeightVector& w,
                     const EncodedSentence& x);
DecodeResult viterbi(const ChainFactors& factors);

// The min(K, |Y|^L) best labelings, ordered by score (descending) then
// lexicographically. Element 0 equals viterbi().
std::vector<DecodeResult> kbest(const FeatureSpace& space, const WeightVector& w,
                                const EncodedSentence& x, std::size_t k);
std::vector<DecodeResult> kbest(const ChainFactors& factors, std::size_t k);

inline constexpr std::size_t kBruteForceLimit = 1'000'000;

// Exhaustive search with the same tie rule; GuardError past kBruteForceLimit
// labelings.
DecodeResult brute_force_argmax(const FeatureSpace& space, const WeightVector& w,
                                const EncodedSentence& x);

}  // namespace swvm

#endif  // SWVM_CHAIN_H_
