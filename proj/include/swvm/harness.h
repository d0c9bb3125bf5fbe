#ifndef SWVM_HARNESS_H_
#define SWVM_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swvm/corpus.h"
#include "swvm/evaluation.h"
#include "swvm/learners.h"

namespace swvm {

struct Grid {
  std::vector<Algorithm> algorithms{Algorithm::kCsp, Algorithm::kSwvp, Algorithm::kMira,
                                    Algorithm::kSwvm};
  std::vector<GammaScheme> set_gamma{GammaScheme::kUniform, GammaScheme::kWeightedMargin,
                                     GammaScheme::kSoftmin, GammaScheme::kOptimization};
  std::vector<bool> aggressive{true, false};
  std::vector<std::size_t> k_best{1, 3, 5};
  // Everything else (epochs, averaging, markov order, ...) comes from here.
  TrainConfig base;

  // Cartesian product in a fixed order: algorithm, aggressive, set_gamma, K.
  // Options an algorithm does not use are not expanded for it. ConfigError
  // if any list an algorithm needs is empty.
  std::vector<TrainConfig> expand() const;
};

struct FoldScore {
  std::size_t fold = 0;
  PrfScore dev;
  PrfScore test;
  std::vector<double> test_sentence_f1;
};

struct ConfigScore {
  TrainConfig config;
  std::vector<PrfScore> dev;  // one per fold
  double mean_dev_f1 = 0.0;
};

struct AlgorithmReport {
  Algorithm algorithm = Algorithm::kCsp;
  TrainConfig best;
  std::vector<ConfigScore> tried;  // grid order
  std::vector<FoldScore> folds;    // best config, retrained per fold
  MeanPrf test;
  // F1 significantly better than the runner-up on every fold.
  bool starred = false;
};

struct Comparison {
  std::size_t best = 0;  // indices into ExperimentReport::algorithms
  std::size_t second = 0;
  SignificanceResult significance;
};

struct ExperimentReport {
  std::string dataset;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::vector<AlgorithmReport> algorithms;
  std::optional<Comparison> comparison;  // needs at least two algorithms
};

enum class Phase { kTrain, kTune, kTest };

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::kIob2;
  double alpha = 0.05;
  std::string dataset = "data";
  // 0 = hardware concurrency.
  std::size_t workers = 0;
  // Called whenever a sentence is read for training, dev scoring or test
  // scoring. May be called from several threads at once.
  std::function<void(Phase, std::size_t fold, std::size_t sentence)> on_access;
  // Receives the training log of every run once all runs are done, in grid
  // order; `final` marks the retrained best configurations.
  std::function<void(const TrainConfig&, std::size_t fold, bool final, const std::string&)>
      on_log;
  // Receives every retrained best model.
  std::function<void(const TrainConfig&, std::size_t fold, const Model&)> on_model;
};

// k-fold CV with dev-set selection: every grid config is trained on each
// fold's train split and scored on its dev split; per algorithm the config
// with the highest mean dev F1 wins (first in grid order on ties), is
// retrained per fold and scored on test. The two algorithms with the highest
// mean test F1 are compared with paired_significance. A failing run raises
// std::runtime_error naming the fold and config.
ExperimentReport run_cv(const Corpus& corpus, const Grid& grid, const CvOptions& options);

// Index of the config with the highest mean dev F1, first on ties.
std::size_t select_best(std::span<const ConfigScore> scores);

struct RenderedReport {
  std::string text;
  std::string csv;
};

// One row per algorithm, P/R/F1 per dataset, "*" after a starred F1, then the
// best (aggressive, set_gamma, K) configuration per algorithm and dataset.
// Datasets must list the same algorithms in the same order.
RenderedReport render_report(std::span<const ExperimentReport> reports);
RenderedReport render_report(const ExperimentReport& report);

// Experiment config file, one "key = value" per line, '#' starts a comment.
// List values are comma separated.
struct ExperimentSpec {
  std::string corpus;
  std::string dataset;
  std::string output = "cv_out";
  int label_col = -1;
  Grid grid;
  CvOptions options;
};

ExperimentSpec parse_experiment(std::string_view text);
ExperimentSpec read_experiment_file(const std::string& path);

}  // namespace swvm

#endif  // SWVM_HARNESS_H_
