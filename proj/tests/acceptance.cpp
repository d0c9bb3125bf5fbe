// Acceptance run: one PASS/FAIL line per criterion. Criterion 8 is a soft
// gate and never fails the run. Set SWVM_NER_CORPUS to a labeled CoNLL file
// to run it on real data instead of the synthetic NER corpus.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "support/conlleval.h"
#include "support/synthetic.h"
#include "swvm/chain.h"
#include "swvm/corpus.h"
#include "swvm/evaluation.h"
#include "swvm/harness.h"
#include "swvm/learners.h"
#include "swvm/qp.h"
#include "swvm/violations.h"

using namespace swvm;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int hard_failures = 0;

void report(int id, const char* name, double limit_seconds, bool soft,
            const std::function<Outcome()>& body) {
  auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (limit_seconds > 0 && s > limit_seconds) {
    o.pass = false;
    o.detail += " [over the " + std::to_string(static_cast<int>(limit_seconds)) + " s limit]";
  }
  if (!o.pass && !soft) ++hard_failures;
  std::printf("criterion %d %s: %s%s  %s (%.1f s)\n", id, name, o.pass ? "PASS" : "FAIL",
              soft ? " (soft)" : "", o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const GammaScheme kSchemes[] = {GammaScheme::kUniform, GammaScheme::kWeightedMargin,
                                GammaScheme::kSoftmin, GammaScheme::kOptimization};

std::vector<double> random_v(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    switch (uniform_below(rng, 4)) {
      case 0: x = 0.0; break;
      case 1: x = static_cast<double>(uniform_below(rng, 7)) - 3.0; break;
      default: x = testing::uniform(rng, -5.0, 5.0);
    }
  }
  return v;
}

// 1: decoding against enumeration.
Outcome oracle_decoding() {
  std::mt19937_64 rng(1);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t len = testing::draw(rng, 1, 6), labels = testing::draw(rng, 1, 4);
    std::size_t k = testing::draw(rng, 1, 5);
    auto inst = testing::random_instance(rng, len, labels);
    std::vector<std::pair<LabelSequence, double>> all;
    LabelSequence y(len, 0);
    while (true) {
      all.emplace_back(y, inst.space.global_phi(inst.x, y).dot(inst.w));
      std::size_t i = len;
      while (i > 0 && static_cast<std::size_t>(y[i - 1]) + 1 == labels) y[--i] = 0;
      if (i == 0) break;
      ++y[i - 1];
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    DecodeResult best = viterbi(inst.space, inst.w, inst.x);
    if (best.labeling != all[0].first) ++bad;
    worst = std::max(worst, std::abs(best.score - all[0].second));
    auto kb = kbest(inst.space, inst.w, inst.x, k);
    if (kb.size() != std::min(k, all.size())) ++bad;
    for (std::size_t j = 0; j < kb.size() && j < all.size(); ++j) {
      if (kb[j].labeling != all[j].first) ++bad;
      worst = std::max(worst, std::abs(kb[j].score - all[j].second));
    }
  }
  return {bad == 0 && worst <= 1e-9,
          "500 instances, label mismatches " + std::to_string(bad) +
              fmt(", max score error %.2e", worst)};
}

// 2: full-template SWVP/SWVM collapse to CSP/MIRA.
std::vector<WeightVector> trajectory(const Corpus& c, const TrainConfig& cfg) {
  std::vector<WeightVector> out;
  TrainHooks hooks;
  hooks.on_step = [&out](std::size_t, const WeightVector& w) { out.push_back(w); };
  train(c, cfg, hooks);
  return out;
}

Outcome special_case_collapse() {
  Corpus c = testing::random_corpus(50, 3, 15, 2);
  TrainConfig csp;
  csp.max_epochs = 3;
  TrainConfig swvp = csp;
  swvp.algorithm = Algorithm::kSwvp;
  swvp.full_template_only = true;
  auto a = trajectory(c, csp), b = trajectory(c, swvp);
  bool exact = a.size() == b.size();
  for (std::size_t s = 0; exact && s < a.size(); ++s) exact = a[s].values() == b[s].values();

  double worst = 0.0;
  bool same_len = true;
  for (std::size_t k : {1u, 3u, 5u}) {
    TrainConfig mira;
    mira.algorithm = Algorithm::kMira;
    mira.k_best = k;
    mira.max_epochs = 3;
    TrainConfig swvm = mira;
    swvm.algorithm = Algorithm::kSwvm;
    swvm.full_template_only = true;
    auto m = trajectory(c, mira), s = trajectory(c, swvm);
    same_len = same_len && m.size() == s.size();
    for (std::size_t i = 0; i < std::min(m.size(), s.size()); ++i) {
      worst = std::max(worst, WeightVector::max_abs_diff(m[i], s[i]));
    }
  }
  return {exact && same_len && worst <= 1e-9,
          std::string("SWVP==CSP ") + (exact ? "exact" : "differs") + ", " +
              std::to_string(a.size()) + " updates" +
              fmt("; SWVM vs MIRA (K=1,3,5) max diff %.2e", worst)};
}

// 3: SetGamma contracts.
Outcome set_gamma_contracts() {
  std::mt19937_64 rng(3);
  std::size_t c1 = 0, c2 = 0, wm_zero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto v = random_v(rng, testing::draw(rng, 1, 8));
    std::vector<double> kept;
    for (double x : v) {
      if (x <= 0.0) kept.push_back(x);
    }
    for (GammaScheme s : kSchemes) {
      GammaResult r = set_gamma(v, s);
      if (!r.fallback && !check_conditions(r.gamma, v).simplex) ++c1;
      if (kept.empty()) continue;
      GammaResult a = set_gamma(kept, s);
      if (a.fallback) {
        // WM has no weights for an all-zero bundle; any simplex point gives 0.
        ++wm_zero;
        if (s != GammaScheme::kWeightedMargin) ++c2;
        continue;
      }
      auto c = check_conditions(a.gamma, kept);
      if (!c.simplex) ++c1;
      if (!c.violation) ++c2;
    }
  }
  auto wm = set_gamma(std::vector<double>{-2, -1, 3}, GammaScheme::kWeightedMargin).gamma;
  bool wm_ok = std::abs(wm[0] - 2.0 / 3.0) <= 1e-12 && std::abs(wm[1] - 1.0 / 3.0) <= 1e-12 &&
               wm[2] == 0.0;
  auto sm = set_gamma(std::vector<double>{-std::log(2.0), 0}, GammaScheme::kSoftmin).gamma;
  bool sm_ok = std::abs(sm[0] - 2.0 / 3.0) <= 1e-12 && std::abs(sm[1] - 1.0 / 3.0) <= 1e-12;
  return {c1 == 0 && c2 == 0 && wm_ok && sm_ok,
          "1000 bundles x 4 schemes, cond1 failures " + std::to_string(c1) +
              ", cond2 failures " + std::to_string(c2) + " (WM all-zero fallbacks " +
              std::to_string(wm_zero) + "), WM example " + (wm_ok ? "ok" : "wrong") +
              ", softmin example " + (sm_ok ? "ok" : "wrong")};
}

// 4: the optimization scheme against random feasible simplex points.
Outcome optimization_optimality() {
  std::mt19937_64 rng(4);
  std::size_t instances = 0, beaten = 0, short_samples = 0;
  double worst = 0.0;
  while (instances < 200) {
    auto v = random_v(rng, testing::draw(rng, 2, 6));
    GammaResult r = set_gamma(v, GammaScheme::kOptimization);
    if (r.fallback) continue;
    ++instances;
    double obj = std::inner_product(r.gamma.begin(), r.gamma.end(), v.begin(), 0.0);
    // Random simplex points; an infeasible one is pulled toward a random
    // non-positive vertex just far enough, plus a random extra share.
    std::vector<std::size_t> vertices;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] <= 0.0) vertices.push_back(j);
    }
    std::size_t found = 0;
    for (int attempt = 0; attempt < 100'000 && found < 1000; ++attempt) {
      std::vector<double> p(v.size());
      double total = 0.0;
      for (double& x : p) total += (x = -std::log(testing::uniform(rng, 1e-12, 1.0)));
      for (double& x : p) x /= total;
      double val = std::inner_product(p.begin(), p.end(), v.begin(), 0.0);
      if (val > 0.0) {
        std::size_t j = vertices[uniform_below(rng, vertices.size())];
        double lo = val / (val - v[j]);
        double t = testing::uniform(rng, lo, 1.0);
        for (double& x : p) x *= 1.0 - t;
        p[j] += t;
        val = std::inner_product(p.begin(), p.end(), v.begin(), 0.0);
        if (val > 0.0) continue;
      }
      ++found;
      worst = std::max(worst, val - obj);
      if (val > obj + 1e-9) ++beaten;
    }
    if (found < 1000) ++short_samples;
  }
  return {beaten == 0 && short_samples == 0,
          "200 instances x 1000 feasible points, beaten " + std::to_string(beaten) +
              ", instances short of samples " + std::to_string(short_samples) +
              fmt(", max excess %.2e", std::max(0.0, worst))};
}

// 5: Hildreth against the closed form and sampled feasible points.
Outcome qp_correctness() {
  constexpr std::size_t dim = 6;
  std::mt19937_64 rng(5);
  auto delta = [&] {
    std::vector<SparseVector::Entry> e;
    for (std::size_t i = 0; i < dim; ++i) {
      if (uniform_below(rng, 3) != 0) {
        e.emplace_back(static_cast<FeatureId>(i), testing::uniform(rng, -2.0, 2.0));
      }
    }
    if (e.empty()) e.emplace_back(0, 1.0);
    return SparseVector::from_unsorted(e);
  };
  auto dense = [&](const WeightVector& w) {
    std::vector<double> d(dim);
    for (std::size_t i = 0; i < dim; ++i) d[i] = w[static_cast<FeatureId>(i)];
    return d;
  };
  auto dot = [](const std::vector<double>& a, const SparseVector& d) {
    double s = 0.0;
    for (auto [id, v] : d.entries()) s += a[static_cast<std::size_t>(id)] * v;
    return s;
  };
  auto dist2 = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };

  double k1 = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    WeightVector w = testing::random_weights(dim, rng);
    UpdateConstraint c{delta(), testing::uniform(rng, 0.0, 4.0)};
    std::vector<UpdateConstraint> cs{c};
    k1 = std::max(k1, WeightVector::max_abs_diff(closed_form_update(w, c).apply(w),
                                                 hildreth(w, cs).apply(w)));
  }

  double worst_slack = 0.0;
  std::size_t closer = 0, short_samples = 0;
  for (int inst = 0; inst < 100; ++inst) {
    WeightVector w = testing::random_weights(dim, rng);
    std::vector<UpdateConstraint> cs(testing::draw(rng, 2, 5));
    for (auto& c : cs) c = {delta(), testing::uniform(rng, 0.0, 4.0)};
    std::vector<double> next = dense(hildreth(w, cs).apply(w));
    for (const auto& c : cs) worst_slack = std::max(worst_slack, c.loss - dot(next, c.delta));
    const double best = dist2(next, dense(w));
    // Strictly feasible anchor: the projection with every loss raised by 1.
    // An infeasible random point is moved toward it past the boundary.
    std::vector<UpdateConstraint> tight = cs;
    for (auto& c : tight) c.loss += 1.0;
    std::vector<double> anchor = dense(hildreth(w, tight).apply(w));
    std::size_t found = 0;
    for (int attempt = 0; attempt < 100'000 && found < 1000; ++attempt) {
      std::vector<double> p = next;
      const double scale = std::pow(10.0, testing::uniform(rng, -4.0, 1.0));
      for (double& x : p) x += testing::uniform(rng, -scale, scale);
      double lo = 0.0;
      for (const auto& c : cs) {
        double fp = dot(p, c.delta), fa = dot(anchor, c.delta);
        if (fp < c.loss && fa > c.loss) lo = std::max(lo, (c.loss - fp) / (fa - fp));
      }
      if (lo > 0.0) {
        double t = testing::uniform(rng, lo, 1.0);
        for (std::size_t i = 0; i < dim; ++i) p[i] = (1.0 - t) * p[i] + t * anchor[i];
      }
      bool feasible = std::all_of(cs.begin(), cs.end(), [&](const UpdateConstraint& c) {
        return dot(p, c.delta) >= c.loss;
      });
      if (!feasible) continue;
      ++found;
      if (dist2(p, dense(w)) < best - 1e-6) ++closer;
    }
    if (found < 1000) ++short_samples;
  }
  return {k1 <= 1e-9 && worst_slack <= 1e-6 && closer == 0 && short_samples == 0,
          fmt("K=1 max diff %.2e; ", k1) + "100 multi-constraint QPs" +
              fmt(", max violation %.2e", std::max(0.0, worst_slack)) +
              ", closer feasible points " + std::to_string(closer) +
              ", instances short of samples " + std::to_string(short_samples)};
}

// 6: convergence on separable data.
Outcome convergence() {
  Corpus c = testing::separable_corpus(100, 3, 6);
  std::vector<TrainConfig> configs;
  for (Algorithm a : {Algorithm::kCsp, Algorithm::kSwvp, Algorithm::kMira}) {
    TrainConfig cfg;
    cfg.algorithm = a;
    configs.push_back(cfg);
  }
  for (GammaScheme g : kSchemes) {
    TrainConfig cfg;
    cfg.algorithm = Algorithm::kSwvm;
    cfg.set_gamma = g;
    configs.push_back(cfg);
  }
  std::string detail;
  bool ok = true;
  for (auto& cfg : configs) {
    cfg.max_epochs = 15;
    Model m = train(c, cfg);
    bool conv = m.epochs.back().mistakes == 0;
    ok = ok && conv;
    detail += describe(cfg) + ":" +
              (conv ? std::to_string(m.epochs.size()) : std::string("not converged")) + " ";
  }
  return {ok, "epochs to 0 mistakes: " + detail};
}

// 7: evaluation fidelity.
Outcome evaluation_fidelity() {
  std::vector<SpanSet> gold{{{1, 2, "PER"}}};
  std::vector<SpanSet> pred{{{1, 2, "PER"}, {4, 5, "LOC"}}};
  PrfScore s = micro_prf(gold, pred);
  bool hand = s.precision == 0.5 && s.recall == 1.0 && std::abs(s.f1 - 2.0 / 3.0) <= 1e-12;

  static const std::vector<std::string> tags{"O", "O", "B-PER", "I-PER", "B-LOC", "I-LOC",
                                             "I-ORG", "B-MISC"};
  std::mt19937_64 rng(7);
  std::vector<std::vector<std::string>> g, p;
  testing::Conlleval oracle;
  for (int i = 0; i < 20; ++i) {
    std::size_t n = testing::draw(rng, 1, 12);
    std::vector<std::string> a(n), b(n);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = tags[uniform_below(rng, tags.size())];
      b[j] = uniform_below(rng, 2) == 0 ? a[j] : tags[uniform_below(rng, tags.size())];
    }
    oracle.sentence(a, b);
    g.push_back(a);
    p.push_back(b);
  }
  PrfScore m = micro_prf(g, p, Scheme::kIob2);
  bool conll = m.tp == oracle.correct && m.tp + m.fp == oracle.found_guessed &&
               m.tp + m.fn == oracle.found_correct;

  std::vector<PrfScore> folds{PrfScore::from_counts(9, 1, 9), PrfScore::from_counts(1, 9, 1)};
  MeanPrf mean = mean_over_folds(folds);
  double harmonic = harmonic_f1(mean.precision, mean.recall);
  bool differs = std::abs(mean.f1 - harmonic) > 1e-6;
  return {hand && conll && differs,
          std::string("hand fixture ") + (hand ? "ok" : "wrong") + ", conlleval tp/found " +
              std::to_string(m.tp) + "/" + std::to_string(m.tp + m.fp) + "/" +
              std::to_string(m.tp + m.fn) + (conll ? " match" : " MISMATCH") +
              fmt(", mean-of-fold F1 %.4f vs harmonic %.4f", mean.f1, harmonic)};
}

// 8: desk-scale end-to-end run.
Outcome end_to_end() {
  Corpus corpus;
  std::string source;
  if (const char* path = std::getenv("SWVM_NER_CORPUS"); path && *path) {
    Corpus full = read_conll_file(path);
    std::vector<std::size_t> idx(full.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(8);
    seeded_shuffle(idx, rng);
    idx.resize(std::min<std::size_t>(500, idx.size()));
    std::sort(idx.begin(), idx.end());
    corpus = subset(full, idx);
    source = path;
  } else {
    corpus = testing::ner_corpus(500, 8);
    source = "synthetic NER corpus";
  }
  CvOptions options;
  options.seed = 8;
  options.dataset = "ner500";
  Grid grid;
  grid.base.seed = 8;
  ExperimentReport r = run_cv(corpus, grid, options);
  std::printf("%s", render_report(r).text.c_str());
  double swvm = 0.0, mira = 0.0;
  for (const auto& a : r.algorithms) {
    if (a.algorithm == Algorithm::kSwvm) swvm = a.test.f1;
    if (a.algorithm == Algorithm::kMira) mira = a.test.f1;
  }
  return {r.algorithms.size() == 4 && r.comparison.has_value(),
          source + ", " + std::to_string(corpus.size()) + " sentences, 36 configs x 5 folds" +
              fmt("; mean test F1 SWVM %.2f vs MIRA %.2f", 100 * swvm, 100 * mira) +
              (swvm > mira ? " (SWVM ahead)" : " (SWVM not ahead)")};
}

// 9: replicability analysis.
Outcome significance() {
  std::mt19937_64 rng(9);
  std::vector<std::vector<double>> a, b;
  for (int f = 0; f < 5; ++f) {
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      y[i] = testing::uniform(rng, 0.0, 1.0);
      x[i] = y[i] + 0.1 + testing::uniform(rng, -1e-3, 1e-3);
    }
    a.push_back(x);
    b.push_back(y);
  }
  bool identical = !paired_significance(a, a).significant;
  SignificanceResult shift = paired_significance(a, b);
  bool shifted = shift.significant && shift.rejected == 5;
  auto four = a;
  four[3] = b[3];
  SignificanceResult partial = paired_significance(four, b);
  bool four_of_five = !partial.significant && partial.rejected == 4;
  return {identical && shifted && four_of_five,
          std::string("identical ") + (identical ? "not significant" : "SIGNIFICANT") +
              ", shift " + (shifted ? "significant" : "NOT significant") + ", 4-of-5 " +
              (four_of_five ? "not significant" : "SIGNIFICANT")};
}

}  // namespace

int main() {
  report(1, "oracle decoding", 30, false, oracle_decoding);
  report(2, "special-case collapse", 60, false, special_case_collapse);
  report(3, "set_gamma contracts", 0, false, set_gamma_contracts);
  report(4, "optimization set_gamma optimality", 0, false, optimization_optimality);
  report(5, "qp correctness", 0, false, qp_correctness);
  report(6, "convergence", 120, false, convergence);
  report(7, "evaluation fidelity", 0, false, evaluation_fidelity);
  if (!std::getenv("SWVM_SKIP_END_TO_END")) {
    report(8, "end-to-end desk-scale run", 0, true, end_to_end);
  }
  report(9, "significance machinery", 0, false, significance);
  std::printf("%d hard failure(s)\n", hard_failures);
  return hard_failures == 0 ? 0 : 1;
}
