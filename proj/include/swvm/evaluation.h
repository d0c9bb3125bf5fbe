#ifndef SWVM_EVALUATION_H_
#define SWVM_EVALUATION_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swvm/corpus.h"

namespace swvm {

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // Zero-denominator ratios are 0.
  static PrfScore from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

using SpanSet = std::vector<Span>;

// Corpus-wide exact (start, end, kind) matching over typed spans.
PrfScore micro_prf(std::span<const SpanSet> gold, std::span<const SpanSet> pred);

// Decodes both tag lists with `scheme` first.
PrfScore micro_prf(std::span<const std::vector<std::string>> gold,
                   std::span<const std::vector<std::string>> pred, Scheme scheme);

// Span F1 of one sentence, 0 when it has neither gold nor predicted spans.
double sentence_f1(const SpanSet& gold, const SpanSet& pred);

double token_accuracy(std::span<const LabelSequence> gold,
                      std::span<const LabelSequence> pred);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
  // Difference vector with zero variance (or fewer than two pairs); p is 1.
  bool degenerate = false;
};

// Two-sided paired t-test on a[i] - b[i].
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct SignificanceResult {
  std::vector<TTest> folds;
  double alpha = 0.05;
  // Folds with p <= alpha / k.
  std::size_t rejected = 0;
  // +1 when A is the better system on every fold, -1 when B is, else 0.
  int direction = 0;
  // Every fold rejects and all of them agree on the direction.
  bool significant = false;
};

// a_folds[f] and b_folds[f] are per-sentence scores of the same sentences.
SignificanceResult paired_significance(std::span<const std::vector<double>> a_folds,
                                       std::span<const std::vector<double>> b_folds,
                                       double alpha = 0.05);

// Averages over folds. f1 is the mean of the fold F1 values, which in general
// differs from harmonic_f1(precision, recall).
struct MeanPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

MeanPrf mean_over_folds(std::span<const PrfScore> folds);
double harmonic_f1(double precision, double recall);

}  // namespace swvm

#endif  // SWVM_EVALUATION_H_
