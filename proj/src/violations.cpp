#include "swvm/violations.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "swvm/errors.h"

namespace swvm {

TemplateSet build_templates(std::size_t length, bool include_full) {
  TemplateSet out;
  for (std::size_t i = 0; i < length; ++i) out.push_back({{i}});
  // For L = 1, {0} already is the full template.
  if (include_full && length > 1) out.push_back(full_template(length));
  return out;
}

ModificationTemplate full_template(std::size_t length) {
  ModificationTemplate J;
  J.indices.resize(length);
  std::iota(J.indices.begin(), J.indices.end(), std::size_t{0});
  return J;
}

LabelSequence derive_label(const LabelSequence& gold, const LabelSequence& predicted,
                           const ModificationTemplate& J) {
  if (gold.size() != predicted.size()) {
    throw ContractViolation("derive_label: gold and predicted lengths differ");
  }
  LabelSequence m = gold;
  for (std::size_t k : J.indices) {
    if (k >= m.size()) throw ContractViolation("derive_label: template index out of range");
    m[k] = predicted[k];
  }
  return m;
}

Bundle compute_bundle(FeatureSpace& space, const WeightVector& w,
                      const EncodedSentence& x, const LabelSequence& gold,
                      const LabelSequence& predicted, const TemplateSet& templates,
                      bool grow) {
  Bundle bundle;
  for (const auto& J : templates) {
    LabelSequence m = derive_label(gold, predicted, J);
    if (m == gold) continue;
    DerivedLabel d;
    d.J = J;
    d.delta = space.delta_phi(x, gold, m, grow);
    d.violation = d.delta.dot(w);
    d.label = std::move(m);
    bundle.push_back(std::move(d));
  }
  return bundle;
}

FilterResult filter_aggressive(Bundle bundle) {
  std::erase_if(bundle, [](const DerivedLabel& d) { return d.violation > 0.0; });
  FilterResult r;
  r.fallback = bundle.empty();
  r.bundle = std::move(bundle);
  return r;
}

GammaScheme parse_gamma_scheme(std::string_view name) {
  if (name == "uniform") return GammaScheme::kUniform;
  if (name == "wm") return GammaScheme::kWeightedMargin;
  if (name == "softmin") return GammaScheme::kSoftmin;
  if (name == "optimization" || name == "opt") return GammaScheme::kOptimization;
  throw ConfigError("unknown set-gamma scheme '" + std::string(name) +
                    "' (expected uniform, wm, softmin or optimization)");
}

std::string_view gamma_scheme_name(GammaScheme scheme) {
  switch (scheme) {
    case GammaScheme::kUniform: return "uniform";
    case GammaScheme::kWeightedMargin: return "wm";
    case GammaScheme::kSoftmin: return "softmin";
    case GammaScheme::kOptimization: return "optimization";
  }
  return "?";
}

GammaResult set_gamma(std::span<const double> v, GammaScheme scheme) {
  if (v.empty()) throw ContractViolation("set_gamma: empty bundle");
  const std::size_t n = v.size();
  GammaResult r;
  switch (scheme) {
    case GammaScheme::kUniform:
      r.gamma.assign(n, 1.0 / static_cast<double>(n));
      break;

    case GammaScheme::kWeightedMargin: {
      double denom = 0.0;
      for (double x : v) denom += std::abs(std::min(x, 0.0));
      if (denom == 0.0) {
        r.fallback = true;
        break;
      }
      for (double x : v) r.gamma.push_back(std::abs(std::min(x, 0.0)) / denom);
      break;
    }

    case GammaScheme::kSoftmin: {
      double shift = -*std::min_element(v.begin(), v.end());
      double denom = 0.0;
      for (double x : v) denom += std::exp(-x - shift);
      for (double x : v) r.gamma.push_back(std::exp(-x - shift) / denom);
      break;
    }

    case GammaScheme::kOptimization: {
      // Linear objective over the simplex cut by sum(gamma v) <= 0: the
      // optimum sits on a vertex or on the edge between the largest positive
      // and the most negative violation, where the objective is exactly 0.
      std::size_t hi = static_cast<std::size_t>(
          std::max_element(v.begin(), v.end()) - v.begin());
      std::size_t lo = static_cast<std::size_t>(
          std::min_element(v.begin(), v.end()) - v.begin());
      r.gamma.assign(n, 0.0);
      if (v[hi] <= 0.0) {
        r.gamma[hi] = 1.0;
      } else if (v[lo] > 0.0) {
        r.gamma.clear();
        r.fallback = true;
      } else {
        double lambda = -v[lo] / (v[hi] - v[lo]);
        r.gamma[hi] = lambda;
        r.gamma[lo] = 1.0 - lambda;
      }
      break;
    }
  }
  return r;
}

GammaResult set_gamma(const Bundle& bundle, GammaScheme scheme) {
  std::vector<double> v;
  v.reserve(bundle.size());
  for (const auto& d : bundle) v.push_back(d.violation);
  return set_gamma(v, scheme);
}

ConditionCheck check_conditions(std::span<const double> gamma,
                                std::span<const double> violations) {
  if (gamma.size() != violations.size()) {
    throw ContractViolation("check_conditions: gamma and bundle sizes differ");
  }
  ConditionCheck c;
  double sum = 0.0, weighted = 0.0;
  bool nonneg = true;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    if (!(gamma[j] >= 0.0)) nonneg = false;
    sum += gamma[j];
    weighted += gamma[j] * violations[j];
  }
  c.simplex = nonneg && !gamma.empty() && std::abs(sum - 1.0) <= kConditionTolerance;
  c.violation = weighted <= kConditionTolerance;
  return c;
}

ConditionCheck check_conditions(std::span<const double> gamma, const Bundle& bundle) {
  std::vector<double> v;
  for (const auto& d : bundle) v.push_back(d.violation);
  return check_conditions(gamma, v);
}

SparseVector WeightedViolation::combined() const {
  std::vector<SparseVector> deltas;
  deltas.reserve(terms.size());
  for (const auto& t : terms) deltas.push_back(t.delta);
  return SparseVector::combine(deltas, gamma);
}

double WeightedViolation::combined_violation() const {
  double s = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) s += gamma[j] * terms[j].violation;
  return s;
}

WeightedViolation weigh_violations(FeatureSpace& space, const WeightVector& w,
                                   const EncodedSentence& x, const LabelSequence& gold,
                                   const LabelSequence& predicted,
                                   const WeightingPolicy& policy, bool grow) {
  const std::size_t L = gold.size();
  TemplateSet templates = policy.full_template_only
                              ? TemplateSet{full_template(L)}
                              : build_templates(L, false);
  Bundle bundle = compute_bundle(space, w, x, gold, predicted, templates, grow);
  if (bundle.empty()) throw ContractViolation("weigh_violations: prediction equals gold");

  WeightedViolation out;
  out.candidates = bundle.size();
  out.violations = static_cast<std::size_t>(std::count_if(
      bundle.begin(), bundle.end(), [](const DerivedLabel& d) { return d.violation <= 0.0; }));

  bool fallback = false;
  if (policy.aggressive) {
    FilterResult f = filter_aggressive(std::move(bundle));
    bundle = std::move(f.bundle);
    fallback = f.fallback;
  }
  if (!fallback) {
    GammaResult g = set_gamma(bundle, policy.scheme);
    fallback = g.fallback;
    if (!fallback && !policy.aggressive &&
        !check_conditions(g.gamma, bundle).violation) {
      fallback = true;
    }
    if (!fallback) {
      out.terms = std::move(bundle);
      out.gamma = std::move(g.gamma);
      return out;
    }
  }

  // Full template: m = prediction, so the step is the plain structured
  // perceptron / MIRA direction.
  DerivedLabel full;
  full.J = full_template(L);
  full.label = predicted;
  full.delta = space.delta_phi(x, gold, predicted, grow);
  full.violation = full.delta.dot(w);
  out.terms = {std::move(full)};
  out.gamma = {1.0};
  out.fallback = true;
  return out;
}

}  // namespace swvm
