#ifndef SWVM_LEARNERS_H_
#define SWVM_LEARNERS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swvm/corpus.h"
#include "swvm/features.h"
#include "swvm/qp.h"
#include "swvm/sparse.h"
#include "swvm/violations.h"

namespace swvm {

enum class Algorithm { kCsp, kSwvp, kMira, kSwvm };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm algorithm);

struct TrainConfig {
  Algorithm algorithm = Algorithm::kCsp;
  GammaScheme set_gamma = GammaScheme::kUniform;
  bool aggressive = true;
  std::size_t k_best = 1;
  std::size_t max_epochs = 15;
  // Unset: off for CSP/SWVP, on for MIRA/SWVM.
  std::optional<bool> averaging;
  int markov_order = 2;
  std::size_t extra_columns = 0;
  std::uint64_t seed = 0;
  bool shuffle = false;
  // JJ = {full template} instead of the size-1 templates.
  bool full_template_only = false;
  bool check_conditions = false;
  std::size_t qp_max_iter = kHildrethMaxIter;
  double qp_tolerance = kHildrethTolerance;

  bool uses_averaging() const;
  bool uses_gamma() const {
    return algorithm == Algorithm::kSwvp || algorithm == Algorithm::kSwvm;
  }
  bool uses_k_best() const {
    return algorithm == Algorithm::kMira || algorithm == Algorithm::kSwvm;
  }
  WeightingPolicy weighting() const {
    return {set_gamma, aggressive, full_template_only};
  }
  FeatureOptions feature_options() const { return {markov_order, extra_columns}; }
};

// Sets one key = value option; ConfigError names the key on failure.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);
bool is_config_key(std::string_view key);

// Short description such as "swvm(agg,optimization,K=3)".
std::string describe(const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t mistakes = 0;
  std::size_t updates = 0;
  std::size_t fallbacks = 0;
  double mean_templates = 0.0;  // mean |JJ| after filtering
  std::size_t cumulative_violations = 0;
  std::size_t qp_warnings = 0;
};

struct Model {
  FeatureSpace space;
  WeightVector weights;
  std::optional<WeightVector> averaged;
  TrainConfig config;
  std::vector<EpochStats> epochs;

  const WeightVector& decoding_weights() const { return averaged ? *averaged : weights; }
};

struct TrainHooks {
  std::ostream* log = nullptr;
  // Called after every example with the 1-based step count and w^(step).
  std::function<void(std::size_t, const WeightVector&)> on_step;
};

std::size_t hamming_loss(const LabelSequence& y, const LabelSequence& z);

// Outcome of one online step. `update` is the change to apply to w.
struct StepResult {
  bool mistake = false;
  SparseVector update;
  std::size_t weightings = 0;  // SetGamma computations
  std::size_t fallbacks = 0;
  std::size_t templates = 0;   // sum of |JJ| after filtering
  std::size_t violations = 0;
  bool qp_warning = false;
};

// CSP / SWVP step against the current argmax.
StepResult perceptron_step(FeatureSpace& space, const WeightVector& w,
                           const EncodedSentence& x, const LabelSequence& gold,
                           const TrainConfig& config);

// MIRA / SWVM step over the K-best list.
StepResult mira_step(FeatureSpace& space, const WeightVector& w,
                     const EncodedSentence& x, const LabelSequence& gold,
                     const TrainConfig& config);

// Runs the configured algorithm until an epoch without decoding mistakes or
// max_epochs. The feature alphabet is seeded from the gold labelings, grows
// with every labeling used in an update, and is frozen on return.
Model train(const Corpus& data, const TrainConfig& config, const TrainHooks& hooks = {});

Model train_csp(const Corpus& data, TrainConfig config, const TrainHooks& hooks = {});
Model train_swvp(const Corpus& data, TrainConfig config, const TrainHooks& hooks = {});
Model train_mira(const Corpus& data, TrainConfig config, const TrainHooks& hooks = {});
Model train_swvm(const Corpus& data, TrainConfig config, const TrainHooks& hooks = {});

// Viterbi under the averaged weights when present; unseen features are ignored.
LabelSequence predict(const Model& model, const Sentence& sentence);

}  // namespace swvm

#endif  // SWVM_LEARNERS_H_
