#ifndef SWVM_VIOLATIONS_H_
#define SWVM_VIOLATIONS_H_

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "swvm/features.h"
#include "swvm/sparse.h"

namespace swvm {

// A set of positions J; the derived label m^J takes the prediction at J and
// the gold label elsewhere.
struct ModificationTemplate {
  std::vector<std::size_t> indices;  // sorted, non-empty

  friend bool operator==(const ModificationTemplate&, const ModificationTemplate&) = default;
};

using TemplateSet = std::vector<ModificationTemplate>;

// {{0}, {1}, ..., {L-1}}, plus {0..L-1} when include_full is set.
TemplateSet build_templates(std::size_t length, bool include_full);
ModificationTemplate full_template(std::size_t length);

LabelSequence derive_label(const LabelSequence& gold, const LabelSequence& predicted,
                           const ModificationTemplate& J);

struct DerivedLabel {
  ModificationTemplate J;
  LabelSequence label;   // m^J
  SparseVector delta;    // Phi(x, y) - Phi(x, m^J)
  double violation = 0;  // w . delta; <= 0 means m^J is a violation
};

using Bundle = std::vector<DerivedLabel>;

// Derived labels for every template, dropping those with m^J = y.
Bundle compute_bundle(FeatureSpace& space, const WeightVector& w,
                      const EncodedSentence& x, const LabelSequence& gold,
                      const LabelSequence& predicted, const TemplateSet& templates,
                      bool grow);

struct FilterResult {
  Bundle bundle;
  bool fallback = false;  // nothing survived
};

// Keeps exactly the violating templates (v <= 0).
FilterResult filter_aggressive(Bundle bundle);

enum class GammaScheme { kUniform, kWeightedMargin, kSoftmin, kOptimization };

GammaScheme parse_gamma_scheme(std::string_view name);
std::string_view gamma_scheme_name(GammaScheme scheme);

struct GammaResult {
  std::vector<double> gamma;  // aligned with the bundle; empty on fallback
  bool fallback = false;
};

// Simplex weights over the bundle. WM signals fallback when no template
// violates; Optimization when every template is non-violating.
GammaResult set_gamma(std::span<const double> violations, GammaScheme scheme);
GammaResult set_gamma(const Bundle& bundle, GammaScheme scheme);

struct ConditionCheck {
  bool simplex = false;    // condition 1
  bool violation = false;  // condition 2
};

inline constexpr double kConditionTolerance = 1e-9;

ConditionCheck check_conditions(std::span<const double> gamma,
                                std::span<const double> violations);
ConditionCheck check_conditions(std::span<const double> gamma, const Bundle& bundle);

// The weighting actually applied for one (gold, prediction) pair.
struct WeightedViolation {
  Bundle terms;
  std::vector<double> gamma;
  bool fallback = false;
  std::size_t candidates = 0;  // templates before filtering
  std::size_t violations = 0;  // of which violating

  // sum_J gamma_J * delta_J
  SparseVector combined() const;
  // sum_J gamma_J * v_J
  double combined_violation() const;
};

struct WeightingPolicy {
  GammaScheme scheme = GammaScheme::kUniform;
  bool aggressive = true;
  bool full_template_only = false;
};

// Templates, bundle, optional aggressive filter, SetGamma. Whenever the
// scheme signals fallback, or a balanced (non-aggressive) weighting breaks
// condition 2, the full template {0..L-1} with gamma = 1 is used instead.
WeightedViolation weigh_violations(FeatureSpace& space, const WeightVector& w,
                                   const EncodedSentence& x, const LabelSequence& gold,
                                   const LabelSequence& predicted,
                                   const WeightingPolicy& policy, bool grow);

}  // namespace swvm

#endif  // SWVM_VIOLATIONS_H_
