#include "swvm/learners.h"

#include <charconv>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "swvm/chain.h"
#include "swvm/errors.h"
#include "swvm/random.h"

namespace swvm {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "csp") return Algorithm::kCsp;
  if (name == "swvp") return Algorithm::kSwvp;
  if (name == "mira") return Algorithm::kMira;
  if (name == "swvm") return Algorithm::kSwvm;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected csp, swvp, mira or swvm)");
}

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kCsp: return "csp";
    case Algorithm::kSwvp: return "swvp";
    case Algorithm::kMira: return "mira";
    case Algorithm::kSwvm: return "swvm";
  }
  return "?";
}

bool TrainConfig::uses_averaging() const {
  if (averaging) return *averaging;
  return algorithm == Algorithm::kMira || algorithm == Algorithm::kSwvm;
}

namespace {

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("invalid boolean for '" + std::string(key) + "': " + std::string(v));
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("invalid number for '" + std::string(key) + "': " + std::string(v));
  }
  return out;
}

constexpr std::string_view kConfigKeys[] = {
    "algorithm",  "set_gamma",          "aggressive",       "k_best",
    "epochs",     "averaging",          "markov_order",     "extra_columns",
    "seed",       "shuffle",            "full_template_only", "check_conditions",
    "qp_max_iter", "qp_tolerance"};

}  // namespace

bool is_config_key(std::string_view key) {
  for (auto k : kConfigKeys) {
    if (k == key) return true;
  }
  return false;
}

void set_config_value(TrainConfig& c, std::string_view key, std::string_view v) {
  if (key == "algorithm") {
    c.algorithm = parse_algorithm(v);
  } else if (key == "set_gamma") {
    c.set_gamma = parse_gamma_scheme(v);
  } else if (key == "aggressive") {
    c.aggressive = parse_bool(key, v);
  } else if (key == "k_best") {
    c.k_best = parse_number<std::size_t>(key, v);
    if (c.k_best == 0) throw ConfigError("k_best must be at least 1");
  } else if (key == "epochs") {
    c.max_epochs = parse_number<std::size_t>(key, v);
    if (c.max_epochs == 0) throw ConfigError("epochs must be at least 1");
  } else if (key == "averaging") {
    c.averaging = parse_bool(key, v);
  } else if (key == "markov_order") {
    c.markov_order = parse_number<int>(key, v);
    if (c.markov_order != 1 && c.markov_order != 2) {
      throw ConfigError("markov_order must be 1 or 2");
    }
  } else if (key == "extra_columns") {
    c.extra_columns = parse_number<std::size_t>(key, v);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, v);
  } else if (key == "shuffle") {
    c.shuffle = parse_bool(key, v);
  } else if (key == "full_template_only") {
    c.full_template_only = parse_bool(key, v);
  } else if (key == "check_conditions") {
    c.check_conditions = parse_bool(key, v);
  } else if (key == "qp_max_iter") {
    c.qp_max_iter = parse_number<std::size_t>(key, v);
  } else if (key == "qp_tolerance") {
    c.qp_tolerance = std::stod(std::string(v));
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

std::string describe(const TrainConfig& c) {
  std::string s(algorithm_name(c.algorithm));
  std::vector<std::string> parts;
  if (c.uses_gamma()) {
    parts.push_back(c.aggressive ? "agg" : "bal");
    parts.emplace_back(gamma_scheme_name(c.set_gamma));
  }
  if (c.uses_k_best()) parts.push_back("K=" + std::to_string(c.k_best));
  if (!parts.empty()) {
    s += '(';
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
    s += ')';
  }
  return s;
}

std::size_t hamming_loss(const LabelSequence& y, const LabelSequence& z) {
  if (y.size() != z.size()) throw ContractViolation("hamming_loss: length mismatch");
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) n += y[i] != z[i];
  return n;
}

namespace {

void verify_conditions(const WeightedViolation& wv) {
  ConditionCheck c = check_conditions(wv.gamma, wv.terms);
  // A fallback on a candidate that is not itself a violation cannot meet
  // condition 2 under any weighting; only condition 1 is enforced there.
  bool need_violation = !(wv.fallback && wv.combined_violation() > kConditionTolerance);
  if (!c.simplex || (need_violation && !c.violation)) {
    std::ostringstream msg;
    msg << "SetGamma condition failure: cond1=" << c.simplex << " cond2=" << c.violation
        << " fallback=" << wv.fallback << " gamma=[";
    for (std::size_t j = 0; j < wv.gamma.size(); ++j) {
      msg << (j ? "," : "") << wv.gamma[j] << "@" << wv.terms[j].violation;
    }
    msg << "]";
    throw ConditionFailure(msg.str());
  }
}

void record(StepResult& r, const WeightedViolation& wv) {
  ++r.weightings;
  r.fallbacks += wv.fallback ? 1 : 0;
  r.templates += wv.terms.size();
  r.violations += wv.violations;
}

}  // namespace

StepResult perceptron_step(FeatureSpace& space, const WeightVector& w,
                           const EncodedSentence& x, const LabelSequence& gold,
                           const TrainConfig& config) {
  StepResult r;
  DecodeResult best = viterbi(space, w, x);
  if (best.labeling == gold) return r;
  r.mistake = true;
  if (config.algorithm == Algorithm::kCsp) {
    r.update = space.delta_phi(x, gold, best.labeling, true);
    return r;
  }
  WeightedViolation wv =
      weigh_violations(space, w, x, gold, best.labeling, config.weighting(), true);
  if (config.check_conditions) verify_conditions(wv);
  record(r, wv);
  r.update = wv.combined();
  return r;
}

StepResult mira_step(FeatureSpace& space, const WeightVector& w,
                     const EncodedSentence& x, const LabelSequence& gold,
                     const TrainConfig& config) {
  StepResult r;
  std::vector<DecodeResult> candidates = kbest(space, w, x, config.k_best);
  r.mistake = candidates.front().labeling != gold;

  std::vector<UpdateConstraint> constraints;
  for (const DecodeResult& cand : candidates) {
    if (cand.labeling == gold) continue;
    UpdateConstraint c;
    c.loss = static_cast<double>(hamming_loss(gold, cand.labeling));
    if (config.algorithm == Algorithm::kMira) {
      c.delta = space.delta_phi(x, gold, cand.labeling, true);
    } else {
      // gamma is fixed against the pre-update w for every candidate.
      WeightedViolation wv =
          weigh_violations(space, w, x, gold, cand.labeling, config.weighting(), true);
      if (config.check_conditions) verify_conditions(wv);
      record(r, wv);
      c.delta = wv.combined();
    }
    constraints.push_back(std::move(c));
  }
  if (constraints.empty()) return r;

  QpSolution sol;
  if (constraints.size() == 1) {
    try {
      sol = closed_form_update(w, constraints.front());
    } catch (const InfeasibleError&) {
      r.qp_warning = true;
      return r;
    }
  } else {
    sol = hildreth(w, constraints, config.qp_max_iter, config.qp_tolerance);
    r.qp_warning = !sol.converged || !sol.skipped.empty();
  }
  r.update = std::move(sol.step);
  return r;
}

Model train(const Corpus& data, const TrainConfig& config, const TrainHooks& hooks) {
  if (data.examples.empty()) throw ContractViolation("train: empty training data");
  if (config.k_best == 0) throw ConfigError("k_best must be at least 1");

  FeatureSpace space(data.labels, config.feature_options());
  std::vector<EncodedSentence> encoded;
  encoded.reserve(data.size());
  for (const Example& ex : data.examples) {
    if (ex.labels.size() != ex.sentence.size()) {
      throw ContractViolation("train: example without aligned labels");
    }
    encoded.push_back(space.encode(ex.sentence, true));
    space.global_phi(encoded.back(), ex.labels, true);
  }

  const bool averaging = config.uses_averaging();
  const bool perceptron =
      config.algorithm == Algorithm::kCsp || config.algorithm == Algorithm::kSwvp;
  WeightVector w(space.dimension());
  WeightVector weighted_sum(space.dimension());  // sum_s s * update_s
  std::size_t steps = 0;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed);

  std::vector<EpochStats> history;
  std::size_t cumulative_violations = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.shuffle) seeded_shuffle(order, rng);
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t weightings = 0, templates = 0;
    for (std::size_t idx : order) {
      const LabelSequence& gold = data.examples[idx].labels;
      StepResult r = perceptron
                         ? perceptron_step(space, w, encoded[idx], gold, config)
                         : mira_step(space, w, encoded[idx], gold, config);
      ++steps;
      stats.mistakes += r.mistake ? 1 : 0;
      if (!r.update.empty()) {
        ++stats.updates;
        w.add(r.update);
        if (averaging) weighted_sum.add(r.update, static_cast<double>(steps));
      }
      stats.fallbacks += r.fallbacks;
      stats.qp_warnings += r.qp_warning ? 1 : 0;
      weightings += r.weightings;
      templates += r.templates;
      cumulative_violations += r.violations;
      if (hooks.on_step) hooks.on_step(steps, w);
    }
    stats.mean_templates =
        weightings ? static_cast<double>(templates) / static_cast<double>(weightings) : 0.0;
    stats.cumulative_violations = cumulative_violations;
    if (hooks.log) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "epoch %zu mistakes=%zu updates=%zu fallbacks=%zu mean_jj=%.2f "
                    "violations=%zu qp_warnings=%zu\n",
                    stats.epoch, stats.mistakes, stats.updates, stats.fallbacks,
                    stats.mean_templates, stats.cumulative_violations, stats.qp_warnings);
      *hooks.log << line;
    }
    history.push_back(stats);
    if (stats.mistakes == 0) break;
  }

  space.freeze();
  w.resize(space.dimension());
  Model model{std::move(space), std::move(w), std::nullopt, config, std::move(history)};
  if (averaging) {
    // sum_{j=1..N} w^(j) = (N+1) w^(N) - sum_s s * update_s
    const double n = static_cast<double>(steps);
    std::vector<double> avg(model.weights.size());
    for (std::size_t i = 0; i < avg.size(); ++i) {
      auto id = static_cast<FeatureId>(i);
      avg[i] = ((n + 1.0) * model.weights[id] - weighted_sum[id]) / n;
    }
    model.averaged = WeightVector(std::move(avg));
  }
  return model;
}

Model train_csp(const Corpus& data, TrainConfig config, const TrainHooks& hooks) {
  config.algorithm = Algorithm::kCsp;
  return train(data, config, hooks);
}

Model train_swvp(const Corpus& data, TrainConfig config, const TrainHooks& hooks) {
  config.algorithm = Algorithm::kSwvp;
  return train(data, config, hooks);
}

Model train_mira(const Corpus& data, TrainConfig config, const TrainHooks& hooks) {
  config.algorithm = Algorithm::kMira;
  return train(data, config, hooks);
}

Model train_swvm(const Corpus& data, TrainConfig config, const TrainHooks& hooks) {
  config.algorithm = Algorithm::kSwvm;
  return train(data, config, hooks);
}

LabelSequence predict(const Model& model, const Sentence& sentence) {
  if (sentence.size() == 0) return {};
  EncodedSentence x = model.space.encode(sentence);
  return viterbi(model.space, model.decoding_weights(), x).labeling;
}

}  // namespace swvm
