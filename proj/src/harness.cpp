#include "swvm/harness.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "swvm/errors.h"

namespace swvm {

std::vector<TrainConfig> Grid::expand() const {
  if (algorithms.empty()) throw ConfigError("grid: no algorithms");
  std::vector<TrainConfig> out;
  for (Algorithm a : algorithms) {
    TrainConfig c = base;
    c.algorithm = a;
    std::vector<bool> agg = c.uses_gamma() ? aggressive : std::vector<bool>{base.aggressive};
    std::vector<GammaScheme> gammas =
        c.uses_gamma() ? set_gamma : std::vector<GammaScheme>{base.set_gamma};
    std::vector<std::size_t> ks = c.uses_k_best() ? k_best : std::vector<std::size_t>{1};
    if (agg.empty() || gammas.empty() || ks.empty()) {
      throw ConfigError("grid: empty option list for " + std::string(algorithm_name(a)));
    }
    for (bool ag : agg) {
      for (GammaScheme g : gammas) {
        for (std::size_t k : ks) {
          if (k == 0) throw ConfigError("grid: k_best must be at least 1");
          c.aggressive = ag;
          c.set_gamma = g;
          c.k_best = k;
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::size_t select_best(std::span<const ConfigScore> scores) {
  if (scores.empty()) throw ContractViolation("select_best: no configs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i].mean_dev_f1 > scores[best].mean_dev_f1) best = i;
  }
  return best;
}

namespace {

struct Scored {
  PrfScore prf;
  std::vector<double> sentence_f1;
};

std::vector<std::string> names_of(const LabelSequence& y, const LabelAlphabet& labels) {
  std::vector<std::string> out;
  out.reserve(y.size());
  for (LabelId id : y) out.push_back(labels.name(id));
  return out;
}

// Runs fn(0..n-1) on up to `workers` threads. The first failure in job order
// is rethrown after every thread has finished.
void run_pool(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < n;) {
      try {
        fn(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::size_t threads = std::min(workers, n);
  if (threads <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class CvRunner {
 public:
  CvRunner(const Corpus& corpus, const CvOptions& options)
      : corpus_(corpus), options_(options) {
    splits_ = make_folds(corpus.size(), options.folds, options.seed);
    for (const auto& s : splits_) train_sets_.push_back(subset(corpus, s.train));
  }

  std::size_t folds() const { return splits_.size(); }

  Model train_fold(const TrainConfig& config, std::size_t fold, std::string& log) const {
    for (std::size_t idx : splits_[fold].train) touch(Phase::kTrain, fold, idx);
    std::ostringstream out;
    TrainHooks hooks;
    hooks.log = &out;
    try {
      Model m = train(train_sets_[fold], config, hooks);
      log = out.str();
      return m;
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(fold) + ", config " +
                               describe(config) + ": " + e.what());
    }
  }

  Scored score(const Model& model, std::size_t fold, Phase phase) const {
    const auto& indices = phase == Phase::kTest ? splits_[fold].test : splits_[fold].dev;
    std::vector<SpanSet> gold, pred;
    Scored out;
    for (std::size_t idx : indices) {
      touch(phase, fold, idx);
      const Example& ex = corpus_.examples[idx];
      gold.push_back(decode_spans(corpus_.label_names(idx), options_.scheme));
      pred.push_back(
          decode_spans(names_of(predict(model, ex.sentence), model.space.labels()),
                       options_.scheme));
      out.sentence_f1.push_back(sentence_f1(gold.back(), pred.back()));
    }
    out.prf = micro_prf(gold, pred);
    return out;
  }

 private:
  void touch(Phase phase, std::size_t fold, std::size_t idx) const {
    if (options_.on_access) options_.on_access(phase, fold, idx);
  }

  const Corpus& corpus_;
  const CvOptions& options_;
  std::vector<FoldSplit> splits_;
  std::vector<Corpus> train_sets_;
};

}  // namespace

ExperimentReport run_cv(const Corpus& corpus, const Grid& grid, const CvOptions& options) {
  for (const auto& ex : corpus.examples) {
    if (ex.labels.size() != ex.sentence.size()) {
      throw ContractViolation("run_cv: corpus must be labeled");
    }
  }
  const std::vector<TrainConfig> configs = grid.expand();
  CvRunner runner(corpus, options);
  const std::size_t k = runner.folds();
  std::size_t workers = options.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  // Tuning: every config on every fold, dev split only.
  std::vector<PrfScore> dev(configs.size() * k);
  std::vector<std::string> tune_logs(configs.size() * k);
  run_pool(configs.size() * k, workers, [&](std::size_t job) {
    const std::size_t c = job / k, f = job % k;
    Model m = runner.train_fold(configs[c], f, tune_logs[job]);
    dev[job] = runner.score(m, f, Phase::kTune).prf;
  });

  ExperimentReport report;
  report.dataset = options.dataset;
  report.folds = k;
  report.seed = options.seed;
  for (Algorithm a : grid.algorithms) {
    if (std::any_of(report.algorithms.begin(), report.algorithms.end(),
                    [a](const AlgorithmReport& r) { return r.algorithm == a; })) {
      continue;
    }
    AlgorithmReport ar;
    ar.algorithm = a;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      if (configs[c].algorithm != a) continue;
      ConfigScore cs;
      cs.config = configs[c];
      cs.dev.assign(dev.begin() + static_cast<std::ptrdiff_t>(c * k),
                    dev.begin() + static_cast<std::ptrdiff_t>((c + 1) * k));
      cs.mean_dev_f1 = mean_over_folds(cs.dev).f1;
      ar.tried.push_back(std::move(cs));
    }
    ar.best = ar.tried[select_best(ar.tried)].config;
    report.algorithms.push_back(std::move(ar));
  }

  // Test: retrain each selected config per fold.
  const std::size_t n_alg = report.algorithms.size();
  std::vector<FoldScore> final_scores(n_alg * k);
  std::vector<std::string> final_logs(n_alg * k);
  std::vector<std::optional<Model>> final_models(n_alg * k);
  run_pool(n_alg * k, workers, [&](std::size_t job) {
    const std::size_t a = job / k, f = job % k;
    const TrainConfig& cfg = report.algorithms[a].best;
    Model m = runner.train_fold(cfg, f, final_logs[job]);
    Scored s = runner.score(m, f, Phase::kTest);
    FoldScore& fs = final_scores[job];
    fs.fold = f;
    fs.test = s.prf;
    fs.test_sentence_f1 = std::move(s.sentence_f1);
    if (options.on_model) final_models[job] = std::move(m);
  });

  for (std::size_t a = 0; a < n_alg; ++a) {
    AlgorithmReport& ar = report.algorithms[a];
    const ConfigScore& chosen = ar.tried[select_best(ar.tried)];
    std::vector<PrfScore> tests;
    for (std::size_t f = 0; f < k; ++f) {
      FoldScore fs = std::move(final_scores[a * k + f]);
      fs.dev = chosen.dev[f];
      tests.push_back(fs.test);
      ar.folds.push_back(std::move(fs));
    }
    ar.test = mean_over_folds(tests);
  }

  if (n_alg >= 2) {
    std::vector<std::size_t> order(n_alg);
    for (std::size_t i = 0; i < n_alg; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return report.algorithms[x].test.f1 > report.algorithms[y].test.f1;
    });
    Comparison cmp;
    cmp.best = order[0];
    cmp.second = order[1];
    std::vector<std::vector<double>> a_scores, b_scores;
    for (std::size_t f = 0; f < k; ++f) {
      a_scores.push_back(report.algorithms[cmp.best].folds[f].test_sentence_f1);
      b_scores.push_back(report.algorithms[cmp.second].folds[f].test_sentence_f1);
    }
    cmp.significance = paired_significance(a_scores, b_scores, options.alpha);
    report.algorithms[cmp.best].starred =
        cmp.significance.significant && cmp.significance.direction > 0;
    report.comparison = std::move(cmp);
  }

  if (options.on_log) {
    for (std::size_t j = 0; j < tune_logs.size(); ++j) {
      options.on_log(configs[j / k], j % k, false, tune_logs[j]);
    }
    for (std::size_t j = 0; j < final_logs.size(); ++j) {
      options.on_log(report.algorithms[j / k].best, j % k, true, final_logs[j]);
    }
  }
  if (options.on_model) {
    for (std::size_t j = 0; j < final_models.size(); ++j) {
      options.on_model(report.algorithms[j / k].best, j % k, *final_models[j]);
    }
  }
  return report;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string frac(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string config_triple(const TrainConfig& c) {
  if (!c.uses_gamma() && !c.uses_k_best()) return "-";
  std::string agg = c.uses_gamma() ? (c.aggressive ? "agg" : "bal") : "-";
  std::string gamma = c.uses_gamma() ? std::string(gamma_scheme_name(c.set_gamma)) : "-";
  std::string k = c.uses_k_best() ? std::to_string(c.k_best) : "-";
  return "(" + agg + ", " + gamma + ", " + k + ")";
}

}  // namespace

RenderedReport render_report(std::span<const ExperimentReport> reports) {
  if (reports.empty()) throw ContractViolation("render_report: no reports");
  const auto& rows = reports.front().algorithms;
  for (const auto& r : reports) {
    if (r.algorithms.size() != rows.size()) {
      throw ContractViolation("render_report: datasets list different algorithms");
    }
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (r.algorithms[a].algorithm != rows[a].algorithm) {
        throw ContractViolation("render_report: datasets list different algorithms");
      }
    }
  }

  constexpr std::size_t kName = 10, kCell = 8;
  const std::size_t block = 3 * kCell;
  std::ostringstream t;
  t << "Test P/R/F1 (%), mean over folds\n\n";
  t << pad("", kName);
  for (const auto& r : reports) t << " | " << pad(r.dataset, block);
  t << '\n' << pad("algorithm", kName);
  for (std::size_t d = 0; d < reports.size(); ++d) {
    t << " | " << lpad("P", kCell) << lpad("R", kCell) << pad(lpad("F1", kCell - 1), kCell);
  }
  t << '\n';
  for (std::size_t a = 0; a < rows.size(); ++a) {
    t << pad(std::string(algorithm_name(rows[a].algorithm)), kName);
    for (const auto& r : reports) {
      const AlgorithmReport& ar = r.algorithms[a];
      t << " | " << lpad(pct(ar.test.precision), kCell) << lpad(pct(ar.test.recall), kCell)
        << pad(lpad(pct(ar.test.f1), kCell - 1) + (ar.starred ? "*" : ""), kCell);
    }
    t << '\n';
  }
  t << "\nF1 is the mean of the per-fold F1 values, not the harmonic mean of the\n"
       "mean P and mean R. * marks the best F1 when it beats the runner-up\n"
       "significantly on every fold (paired t-test per fold, Bonferroni).\n";

  for (const auto& r : reports) {
    if (!r.comparison) continue;
    const Comparison& c = *r.comparison;
    t << "\n" << r.dataset << ": " << algorithm_name(r.algorithms[c.best].algorithm) << " vs "
      << algorithm_name(r.algorithms[c.second].algorithm) << ", alpha "
      << c.significance.alpha << ", rejected " << c.significance.rejected << "/" << r.folds
      << ", p =";
    for (const TTest& f : c.significance.folds) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.3g%s", f.p, f.degenerate ? "(degenerate)" : "");
      t << buf;
    }
    t << '\n';
  }

  t << "\nBest configuration (aggressive, set_gamma, K)\n\n" << pad("algorithm", kName);
  for (const auto& r : reports) t << " | " << r.dataset;
  t << '\n';
  for (std::size_t a = 0; a < rows.size(); ++a) {
    t << pad(std::string(algorithm_name(rows[a].algorithm)), kName);
    for (const auto& r : reports) t << " | " << config_triple(r.algorithms[a].best);
    t << '\n';
  }

  std::ostringstream csv;
  csv << "algorithm,dataset,fold,split,P,R,F1\n";
  for (const auto& r : reports) {
    for (const auto& ar : r.algorithms) {
      const std::string name(algorithm_name(ar.algorithm));
      for (const auto& f : ar.folds) {
        csv << name << ',' << r.dataset << ',' << f.fold << ",dev," << frac(f.dev.precision)
            << ',' << frac(f.dev.recall) << ',' << frac(f.dev.f1) << '\n';
        csv << name << ',' << r.dataset << ',' << f.fold << ",test," << frac(f.test.precision)
            << ',' << frac(f.test.recall) << ',' << frac(f.test.f1) << '\n';
      }
      csv << name << ',' << r.dataset << ",mean,test," << frac(ar.test.precision) << ','
          << frac(ar.test.recall) << ',' << frac(ar.test.f1) << '\n';
    }
  }
  return {t.str(), csv.str()};
}

RenderedReport render_report(const ExperimentReport& report) {
  return render_report(std::span<const ExperimentReport>(&report, 1));
}

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r";
  std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (true) {
    std::size_t j = v.find(',', i);
    std::string_view item = trim(v.substr(i, j == std::string_view::npos ? v.npos : j - i));
    if (!item.empty()) out.push_back(item);
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return out;
}

template <typename T>
T parse_count(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    std::string s(v);
    long long x = std::stoll(s, &used);
    if (used != s.size() || x < 0) throw std::invalid_argument(s);
    return static_cast<T>(x);
  } catch (const std::exception&) {
    throw ConfigError("invalid value for '" + std::string(key) + "': " + std::string(v));
  }
}

}  // namespace

ExperimentSpec parse_experiment(std::string_view text) {
  ExperimentSpec spec;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("experiment line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));

    if (key == "corpus") {
      spec.corpus = value;
    } else if (key == "dataset") {
      spec.dataset = value;
    } else if (key == "output") {
      spec.output = value;
    } else if (key == "scheme") {
      spec.options.scheme = parse_scheme(value);
    } else if (key == "folds") {
      spec.options.folds = parse_count<std::size_t>(key, value);
    } else if (key == "seed") {
      spec.options.seed = parse_count<std::uint64_t>(key, value);
      spec.grid.base.seed = spec.options.seed;
    } else if (key == "workers") {
      spec.options.workers = parse_count<std::size_t>(key, value);
    } else if (key == "alpha") {
      try {
        spec.options.alpha = std::stod(std::string(value));
      } catch (const std::exception&) {
        throw ConfigError("invalid value for 'alpha': " + std::string(value));
      }
      if (!(spec.options.alpha > 0.0 && spec.options.alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
      }
    } else if (key == "label_col") {
      try {
        spec.label_col = std::stoi(std::string(value));
      } catch (const std::exception&) {
        throw ConfigError("invalid value for 'label_col': " + std::string(value));
      }
    } else if (key == "algorithms") {
      spec.grid.algorithms.clear();
      for (auto v : split_list(value)) spec.grid.algorithms.push_back(parse_algorithm(v));
    } else if (key == "set_gamma") {
      spec.grid.set_gamma.clear();
      for (auto v : split_list(value)) spec.grid.set_gamma.push_back(parse_gamma_scheme(v));
    } else if (key == "aggressive") {
      spec.grid.aggressive.clear();
      for (auto v : split_list(value)) {
        TrainConfig probe;
        set_config_value(probe, "aggressive", v);
        spec.grid.aggressive.push_back(probe.aggressive);
      }
    } else if (key == "k_best") {
      spec.grid.k_best.clear();
      for (auto v : split_list(value)) {
        std::size_t kb = parse_count<std::size_t>(key, v);
        if (kb == 0) throw ConfigError("k_best must be at least 1");
        spec.grid.k_best.push_back(kb);
      }
    } else if (key == "algorithm" || !is_config_key(key)) {
      throw ConfigError("unknown experiment key '" + std::string(key) + "'");
    } else {
      set_config_value(spec.grid.base, key, value);
    }
  }
  if (spec.corpus.empty()) throw ConfigError("experiment: missing 'corpus'");
  if (spec.dataset.empty()) spec.dataset = std::filesystem::path(spec.corpus).stem().string();
  spec.options.dataset = spec.dataset;
  spec.grid.expand();  // validates the lists
  return spec;
}

ExperimentSpec read_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read experiment file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

}  // namespace swvm
