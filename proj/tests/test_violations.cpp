#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support/synthetic.h"
#include "swvm/chain.h"
#include "swvm/errors.h"
#include "swvm/violations.h"

using namespace swvm;

namespace {

std::vector<double> random_v(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    // Mix of exact zeros, integers and reals.
    switch (uniform_below(rng, 4)) {
      case 0: x = 0.0; break;
      case 1: x = static_cast<double>(uniform_below(rng, 7)) - 3.0; break;
      default: x = testing::uniform(rng, -5.0, 5.0);
    }
  }
  return v;
}

bool on_simplex(const std::vector<double>& g) {
  double s = 0.0;
  for (double x : g) {
    if (x < 0.0) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= 1e-9;
}

}  // namespace

TEST_CASE("template sets") {
  auto t = build_templates(3, false);
  REQUIRE(t.size() == 3);
  CHECK(t[2].indices == std::vector<std::size_t>{2});
  auto f = build_templates(3, true);
  REQUIRE(f.size() == 4);
  CHECK(f[3].indices == std::vector<std::size_t>{0, 1, 2});
  CHECK(build_templates(1, true).size() == 1);
}

TEST_CASE("derive_label splices the prediction into gold") {
  // Person=0, None=1
  LabelSequence y{0, 1, 1}, ystar{0, 0, 0};
  CHECK(derive_label(y, ystar, {{2}}) == LabelSequence{0, 1, 0});
  CHECK(derive_label(y, ystar, full_template(3)) == ystar);
  CHECK(derive_label(y, y, {{1}}) == y);
  CHECK_THROWS_AS(derive_label(y, {0, 1}, {{0}}), ContractViolation);
}

TEST_CASE("bundle for a single mismatch") {
  std::mt19937_64 rng(4);
  auto inst = testing::random_instance(rng, 2, 2);
  LabelSequence gold{0, 1}, pred{0, 0};
  Bundle b = compute_bundle(inst.space, inst.w, inst.x, gold, pred, build_templates(2, true), false);
  // {0} reproduces gold and is dropped; {1} and the full template both give pred.
  REQUIRE(b.size() == 2);
  CHECK(b[0].J.indices == std::vector<std::size_t>{1});
  CHECK(std::abs(b[0].violation - inst.space.delta_phi(inst.x, gold, pred).dot(inst.w)) <= 1e-12);
  for (const auto& d : b) CHECK(std::abs(d.violation - d.delta.dot(inst.w)) <= 1e-12);

  Bundle zero = compute_bundle(inst.space, WeightVector{}, inst.x, gold, {1, 0},
                               build_templates(2, false), false);
  for (const auto& d : zero) CHECK(d.violation == 0.0);
}

TEST_CASE("full template of an argmax is a violation") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testing::random_instance(rng, 4, 3);
    LabelSequence pred = viterbi(inst.space, inst.w, inst.x).labeling;
    LabelSequence gold(4);
    for (auto& g : gold) g = static_cast<LabelId>(uniform_below(rng, 3));
    if (gold == pred) continue;
    Bundle b = compute_bundle(inst.space, inst.w, inst.x, gold, pred, {full_template(4)}, false);
    REQUIRE(b.size() == 1);
    CHECK(b[0].violation <= 1e-9);
  }
}

TEST_CASE("aggressive filter") {
  Bundle b(3);
  b[0].violation = -2;
  b[1].violation = 1;
  b[2].violation = 0;
  FilterResult r = filter_aggressive(b);
  CHECK(r.bundle.size() == 2);
  CHECK_FALSE(r.fallback);
  Bundle pos(2);
  pos[0].violation = 1;
  pos[1].violation = 0.5;
  CHECK(filter_aggressive(pos).fallback);
}

TEST_CASE("set_gamma worked examples") {
  auto g = set_gamma(std::vector<double>{1, 2, 3, 4}, GammaScheme::kUniform).gamma;
  for (double x : g) CHECK(x == 0.25);

  g = set_gamma(std::vector<double>{-2, -1, 3}, GammaScheme::kWeightedMargin).gamma;
  CHECK(g[0] == doctest::Approx(2.0 / 3.0));
  CHECK(g[1] == doctest::Approx(1.0 / 3.0));
  CHECK(g[2] == 0.0);
  CHECK(set_gamma(std::vector<double>{1, 2}, GammaScheme::kWeightedMargin).fallback);

  g = set_gamma(std::vector<double>{0, 0}, GammaScheme::kSoftmin).gamma;
  CHECK(g == std::vector<double>{0.5, 0.5});
  g = set_gamma(std::vector<double>{-std::log(2.0), 0}, GammaScheme::kSoftmin).gamma;
  CHECK(std::abs(g[0] - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(g[1] - 1.0 / 3.0) <= 1e-12);

  g = set_gamma(std::vector<double>{-3, -1}, GammaScheme::kOptimization).gamma;
  CHECK(g == std::vector<double>{0, 1});
  g = set_gamma(std::vector<double>{2, -2}, GammaScheme::kOptimization).gamma;
  CHECK(g == std::vector<double>{0.5, 0.5});
  CHECK(set_gamma(std::vector<double>{1, 3}, GammaScheme::kOptimization).fallback);

  CHECK_THROWS_AS(set_gamma(std::vector<double>{}, GammaScheme::kUniform), ContractViolation);
}

TEST_CASE("check_conditions examples") {
  auto c = check_conditions(std::vector<double>{0.5, 0.5}, std::vector<double>{-1, 5});
  CHECK(c.simplex);
  CHECK_FALSE(c.violation);
  c = check_conditions(std::vector<double>{0.7, 0.2}, std::vector<double>{-1, -1});
  CHECK_FALSE(c.simplex);
}

TEST_CASE("conditions hold on random bundles") {
  std::mt19937_64 rng(77);
  const GammaScheme schemes[] = {GammaScheme::kUniform, GammaScheme::kWeightedMargin,
                                 GammaScheme::kSoftmin, GammaScheme::kOptimization};
  for (int trial = 0; trial < 1000; ++trial) {
    auto v = random_v(rng, testing::draw(rng, 1, 8));
    std::vector<double> kept;
    for (double x : v) {
      if (x <= 0.0) kept.push_back(x);
    }
    for (GammaScheme s : schemes) {
      GammaResult r = set_gamma(v, s);
      if (!r.fallback) CHECK(on_simplex(r.gamma));
      if (kept.empty()) continue;
      GammaResult a = set_gamma(kept, s);
      if (a.fallback) {
        // Only WM can give up on a non-empty violating bundle (all v = 0).
        CHECK(s == GammaScheme::kWeightedMargin);
        CHECK(std::all_of(kept.begin(), kept.end(), [](double x) { return x == 0.0; }));
        continue;
      }
      auto c = check_conditions(a.gamma, kept);
      CHECK(c.simplex);
      CHECK(c.violation);
    }
  }
}

TEST_CASE("WM and softmin are permutation equivariant; softmin of equal v is uniform") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = random_v(rng, testing::draw(rng, 2, 6));
    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), 0);
    seeded_shuffle(perm, rng);
    std::vector<double> pv;
    for (auto i : perm) pv.push_back(v[i]);
    for (GammaScheme s : {GammaScheme::kWeightedMargin, GammaScheme::kSoftmin}) {
      auto a = set_gamma(v, s);
      auto b = set_gamma(pv, s);
      CHECK(a.fallback == b.fallback);
      if (a.fallback) continue;
      for (std::size_t j = 0; j < perm.size(); ++j) {
        CHECK(std::abs(b.gamma[j] - a.gamma[perm[j]]) <= 1e-12);
      }
    }
    std::vector<double> same(v.size(), v[0]);
    auto sm = set_gamma(same, GammaScheme::kSoftmin).gamma;
    for (double x : sm) CHECK(std::abs(x - 1.0 / static_cast<double>(v.size())) <= 1e-12);
  }
}

TEST_CASE("optimization scheme beats random feasible simplex points") {
  std::mt19937_64 rng(99);
  for (int inst = 0; inst < 100; ++inst) {
    auto v = random_v(rng, testing::draw(rng, 2, 6));
    GammaResult r = set_gamma(v, GammaScheme::kOptimization);
    bool any_nonpos = std::any_of(v.begin(), v.end(), [](double x) { return x <= 0.0; });
    CHECK(r.fallback == !any_nonpos);
    if (r.fallback) continue;
    double obj = std::inner_product(r.gamma.begin(), r.gamma.end(), v.begin(), 0.0);
    CHECK(obj <= 1e-9);
    for (int s = 0; s < 500; ++s) {
      std::vector<double> p(v.size());
      double total = 0.0;
      for (double& x : p) total += (x = -std::log(testing::uniform(rng, 1e-12, 1.0)));
      for (double& x : p) x /= total;
      double val = std::inner_product(p.begin(), p.end(), v.begin(), 0.0);
      if (val > 0.0) continue;
      CHECK(obj >= val - 1e-9);
    }
  }
}

TEST_CASE("weigh_violations policy") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = testing::draw(rng, 1, 5);
    auto inst = testing::random_instance(rng, len, 3);
    LabelSequence pred = viterbi(inst.space, inst.w, inst.x).labeling;
    LabelSequence gold(len);
    for (auto& g : gold) g = static_cast<LabelId>(uniform_below(rng, 3));
    if (gold == pred) continue;
    for (GammaScheme s : {GammaScheme::kUniform, GammaScheme::kWeightedMargin,
                          GammaScheme::kSoftmin, GammaScheme::kOptimization}) {
      for (bool agg : {true, false}) {
        WeightedViolation wv =
            weigh_violations(inst.space, inst.w, inst.x, gold, pred, {s, agg, false}, false);
        auto c = check_conditions(wv.gamma, wv.terms);
        CHECK(c.simplex);
        // pred is the argmax, so the fallback term is a violation too.
        CHECK(c.violation);
        if (wv.fallback) {
          REQUIRE(wv.terms.size() == 1);
          CHECK(wv.terms[0].label == pred);
        }
      }
    }
    WeightedViolation full = weigh_violations(inst.space, inst.w, inst.x, gold, pred,
                                              {GammaScheme::kUniform, true, true}, false);
    CHECK(full.combined() == inst.space.delta_phi(inst.x, gold, pred));
  }
}

TEST_CASE("all size-1 templates non-violating falls back to the full update") {
  // Gold A A, prediction B B. Reward the pair B,B strongly but punish each
  // single B next to an A, so both size-1 derived labels score below gold.
  FeatureSpace space(testing::make_labels(2), {});
  EncodedSentence x = space.encode(testing::make_sentence({"p", "q"}), true);
  testing::populate(space, x);
  WeightVector w;
  w.set(*space.alphabet().find("B_t[i],t[i+1]|B|B"), 10.0);
  w.set(*space.alphabet().find("B_t[i],t[i+1]|A|B"), -10.0);
  w.set(*space.alphabet().find("B_t[i],t[i+1]|B|A"), -10.0);
  LabelSequence gold{0, 0}, pred = viterbi(space, w, x).labeling;
  REQUIRE(pred == LabelSequence{1, 1});
  WeightedViolation wv = weigh_violations(space, w, x, gold, pred,
                                          {GammaScheme::kWeightedMargin, true, false}, false);
  CHECK(wv.fallback);
  CHECK(wv.violations == 0);
  CHECK(wv.combined() == space.delta_phi(x, gold, pred));
}
