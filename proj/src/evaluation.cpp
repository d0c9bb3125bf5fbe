#include "swvm/evaluation.h"

#include <algorithm>
#include <cmath>
#include <iterator>

#include <boost/math/distributions/students_t.hpp>

#include "swvm/errors.h"

namespace swvm {

PrfScore PrfScore::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfScore s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = harmonic_f1(s.precision, s.recall);
  return s;
}

namespace {

std::size_t count_matches(SpanSet a, SpanSet b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  SpanSet common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return common.size();
}

}  // namespace

PrfScore micro_prf(std::span<const SpanSet> gold, std::span<const SpanSet> pred) {
  if (gold.size() != pred.size()) {
    throw ContractViolation("micro_prf: " + std::to_string(gold.size()) +
                            " gold sentences vs " + std::to_string(pred.size()) +
                            " predicted");
  }
  std::size_t tp = 0, ng = 0, np = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    tp += count_matches(gold[s], pred[s]);
    ng += gold[s].size();
    np += pred[s].size();
  }
  return PrfScore::from_counts(tp, np - tp, ng - tp);
}

PrfScore micro_prf(std::span<const std::vector<std::string>> gold,
                   std::span<const std::vector<std::string>> pred, Scheme scheme) {
  if (gold.size() != pred.size()) {
    throw ContractViolation("micro_prf: sentence counts differ");
  }
  std::vector<SpanSet> g, p;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw ContractViolation("micro_prf: sentence " + std::to_string(s + 1) +
                              " has different lengths");
    }
    g.push_back(decode_spans(gold[s], scheme));
    p.push_back(decode_spans(pred[s], scheme));
  }
  return micro_prf(g, p);
}

double sentence_f1(const SpanSet& gold, const SpanSet& pred) {
  std::size_t tp = count_matches(gold, pred);
  return PrfScore::from_counts(tp, pred.size() - tp, gold.size() - tp).f1;
}

double token_accuracy(std::span<const LabelSequence> gold,
                      std::span<const LabelSequence> pred) {
  if (gold.size() != pred.size()) throw ContractViolation("token_accuracy: sentence counts differ");
  std::size_t total = 0, same = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw ContractViolation("token_accuracy: sentence lengths differ");
    }
    total += gold[s].size();
    for (std::size_t i = 0; i < gold[s].size(); ++i) same += gold[s][i] == pred[s][i];
  }
  if (total == 0) throw ContractViolation("token_accuracy: no positions");
  return static_cast<double>(same) / static_cast<double>(total);
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractViolation("paired_t_test: vectors differ in length");
  TTest r;
  const std::size_t n = a.size();
  if (n == 0) {
    r.degenerate = true;
    return r;
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  r.mean_difference = mean;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  if (n < 2 || ss == 0.0) {
    r.degenerate = true;
    return r;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

SignificanceResult paired_significance(std::span<const std::vector<double>> a_folds,
                                       std::span<const std::vector<double>> b_folds,
                                       double alpha) {
  if (a_folds.size() != b_folds.size() || a_folds.empty()) {
    throw ContractViolation("paired_significance: fold lists must be non-empty and aligned");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ContractViolation("paired_significance: alpha must lie in (0, 1)");
  }
  SignificanceResult r;
  r.alpha = alpha;
  const double threshold = alpha / static_cast<double>(a_folds.size());
  std::size_t a_wins = 0, b_wins = 0;
  for (std::size_t f = 0; f < a_folds.size(); ++f) {
    TTest t = paired_t_test(a_folds[f], b_folds[f]);
    if (!t.degenerate && t.p <= threshold) {
      ++r.rejected;
      (t.mean_difference > 0.0 ? a_wins : b_wins) += 1;
    }
    r.folds.push_back(t);
  }
  const std::size_t k = a_folds.size();
  if (a_wins == k) r.direction = 1;
  if (b_wins == k) r.direction = -1;
  r.significant = r.rejected == k && r.direction != 0;
  return r;
}

MeanPrf mean_over_folds(std::span<const PrfScore> folds) {
  if (folds.empty()) throw ContractViolation("mean_over_folds: no folds");
  MeanPrf m;
  for (const auto& s : folds) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const double n = static_cast<double>(folds.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

double harmonic_f1(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace swvm
