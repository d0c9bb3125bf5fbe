#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/conlleval.h"
#include "support/synthetic.h"
#include "swvm/errors.h"
#include "swvm/evaluation.h"

using namespace swvm;

namespace {

std::vector<std::string> random_tags(std::mt19937_64& rng, std::size_t n) {
  static const std::vector<std::string> tags{"O", "O", "O", "B-PER", "I-PER",
                                             "B-LOC", "I-LOC", "I-ORG"};
  std::vector<std::string> out(n);
  for (auto& t : out) t = tags[uniform_below(rng, tags.size())];
  return out;
}

}  // namespace

TEST_CASE("hand-counted micro P/R/F1") {
  std::vector<SpanSet> gold{{{1, 2, "PER"}}};
  std::vector<SpanSet> pred{{{1, 2, "PER"}, {4, 5, "LOC"}}};
  PrfScore s = micro_prf(gold, pred);
  CHECK(s.tp == 1);
  CHECK(s.fp == 1);
  CHECK(s.fn == 0);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 1.0);
  CHECK(std::abs(s.f1 - 2.0 / 3.0) <= 1e-12);

  PrfScore same = micro_prf(gold, gold);
  CHECK(same.f1 == 1.0);
  std::vector<SpanSet> empty(1);
  PrfScore none = micro_prf(gold, empty);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK_THROWS_AS(micro_prf(gold, std::vector<SpanSet>{}), ContractViolation);
}

TEST_CASE("agrees with conlleval counting on a 20-sentence fixture") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::string>> gold, pred;
    testing::Conlleval oracle;
    for (int s = 0; s < 20; ++s) {
      std::size_t n = testing::draw(rng, 1, 12);
      gold.push_back(random_tags(rng, n));
      pred.push_back(random_tags(rng, n));
      // Keep many chunks correct so matching is exercised.
      for (std::size_t i = 0; i < n; ++i) {
        if (uniform_below(rng, 2) == 0) pred.back()[i] = gold.back()[i];
      }
      oracle.sentence(gold.back(), pred.back());
    }
    for (Scheme scheme : {Scheme::kIob1, Scheme::kIob2}) {
      PrfScore s = micro_prf(gold, pred, scheme);
      CHECK(s.tp == oracle.correct);
      CHECK(s.tp + s.fp == oracle.found_guessed);
      CHECK(s.tp + s.fn == oracle.found_correct);
    }
  }
}

TEST_CASE("micro_prf properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::string>> gold, pred;
    for (int s = 0; s < 8; ++s) {
      std::size_t n = testing::draw(rng, 1, 10);
      gold.push_back(random_tags(rng, n));
      pred.push_back(random_tags(rng, n));
    }
    PrfScore a = micro_prf(gold, pred, Scheme::kIob2);
    std::size_t ng = 0, np = 0;
    for (auto& g : gold) ng += decode_spans(g, Scheme::kIob2).size();
    for (auto& p : pred) np += decode_spans(p, Scheme::kIob2).size();
    CHECK(a.tp + a.fn == ng);
    CHECK(a.tp + a.fp == np);

    PrfScore swapped = micro_prf(pred, gold, Scheme::kIob2);
    CHECK(swapped.precision == a.recall);
    CHECK(swapped.recall == a.precision);
    CHECK(swapped.f1 == doctest::Approx(a.f1));

    std::vector<std::size_t> perm(gold.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    seeded_shuffle(perm, rng);
    std::vector<std::vector<std::string>> pg, pp;
    for (auto i : perm) {
      pg.push_back(gold[i]);
      pp.push_back(pred[i]);
    }
    PrfScore b = micro_prf(pg, pp, Scheme::kIob2);
    CHECK(b.tp == a.tp);
    CHECK(b.fp == a.fp);
    CHECK(b.fn == a.fn);
  }
}

TEST_CASE("sentence F1 and token accuracy") {
  CHECK(sentence_f1({}, {}) == 0.0);
  CHECK(sentence_f1({{0, 0, "A"}}, {{0, 0, "A"}}) == 1.0);
  std::vector<LabelSequence> g{{0, 1, 0, 1, 0}, {1, 1, 1, 1, 1}};
  CHECK(token_accuracy(g, g) == 1.0);
  std::vector<LabelSequence> p = g;
  p[1][4] = 0;
  CHECK(token_accuracy(g, p) == 0.9);
  CHECK_THROWS_AS(token_accuracy(std::vector<LabelSequence>{}, std::vector<LabelSequence>{}),
                  ContractViolation);
  CHECK_THROWS_AS(token_accuracy(g, std::vector<LabelSequence>{g[0]}), ContractViolation);
}

TEST_CASE("paired t-test against the textbook formula") {
  std::vector<double> a{1, 2, 3, 4, 5}, b(5, 0.0);
  TTest t = paired_t_test(a, b);
  // mean 3, sd sqrt(2.5), t = 3 / (sqrt(2.5) / sqrt(5))
  CHECK(std::abs(t.t - 3.0 / (std::sqrt(2.5) / std::sqrt(5.0))) <= 1e-12);
  CHECK(std::abs(t.p - 0.013235599563682695) <= 1e-9);
  TTest u = paired_t_test(std::vector<double>{0.9, 0.8, 1.0, 0.7},
                          std::vector<double>{0.5, 0.6, 0.4, 0.7});
  CHECK(std::abs(u.p - 0.1027280788583989) <= 1e-9);
  TTest z = paired_t_test(a, a);
  CHECK(z.degenerate);
  CHECK(z.p == 1.0);
}

TEST_CASE("K-Bonferroni replicability") {
  std::mt19937_64 rng(1);
  auto noisy = [&](std::size_t n, double shift) {
    std::vector<double> base(n), other(n);
    for (std::size_t i = 0; i < n; ++i) {
      base[i] = testing::uniform(rng, 0.0, 1.0);
      other[i] = base[i] + shift + testing::uniform(rng, -1e-3, 1e-3);
    }
    return std::pair{other, base};
  };
  std::vector<std::vector<double>> a, b;
  for (int f = 0; f < 5; ++f) {
    auto [x, y] = noisy(40, 0.1);
    a.push_back(x);
    b.push_back(y);
  }
  SignificanceResult same = paired_significance(a, a);
  CHECK(same.rejected == 0);
  CHECK_FALSE(same.significant);
  for (const auto& f : same.folds) CHECK(f.degenerate);

  SignificanceResult shift = paired_significance(a, b);
  CHECK(shift.rejected == 5);
  CHECK(shift.direction == 1);
  CHECK(shift.significant);
  CHECK(paired_significance(b, a).direction == -1);

  auto four = a;
  four[3] = b[3];
  SignificanceResult partial = paired_significance(four, b);
  CHECK(partial.rejected == 4);
  CHECK_FALSE(partial.significant);

  CHECK_THROWS_AS(paired_significance(a, b, 1.5), ContractViolation);
}

TEST_CASE("mean of fold F1 differs from the F1 of mean P and R") {
  std::vector<PrfScore> folds{PrfScore::from_counts(9, 1, 9), PrfScore::from_counts(1, 9, 1)};
  MeanPrf m = mean_over_folds(folds);
  CHECK(m.f1 == doctest::Approx((folds[0].f1 + folds[1].f1) / 2));
  CHECK(std::abs(m.f1 - harmonic_f1(m.precision, m.recall)) > 0.01);
}
