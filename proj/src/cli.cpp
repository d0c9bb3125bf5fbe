#include "swvm/cli.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "swvm/corpus.h"
#include "swvm/errors.h"
#include "swvm/evaluation.h"
#include "swvm/harness.h"
#include "swvm/learners.h"
#include "swvm/model_io.h"

namespace swvm::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + std::string(what) + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

// Applies a key = value file on top of `config`.
void apply_config_file(TrainConfig& config, const std::string& path) {
  std::istringstream in(read_file(path, "config file"));
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': " + line);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

struct TrainFlags {
  std::string config_file;
  std::optional<std::string> algorithm, set_gamma, aggressive, k_best, epochs, markov_order,
      averaging, seed;
  bool check_conditions = false;
  bool shuffle = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config_file, "key = value training config file");
  cmd->add_option("--algorithm", f.algorithm, "csp, swvp, mira or swvm");
  cmd->add_option("--set-gamma", f.set_gamma, "uniform, wm, softmin or optimization");
  cmd->add_option("--aggressive", f.aggressive, "on/off");
  cmd->add_option("--k-best", f.k_best, "K-best constraints (mira, swvm)");
  cmd->add_option("--epochs", f.epochs, "maximum epochs");
  cmd->add_option("--markov-order", f.markov_order, "1 or 2");
  cmd->add_option("--averaging", f.averaging, "on/off");
  cmd->add_option("--seed", f.seed, "shuffle seed");
  cmd->add_flag("--shuffle", f.shuffle, "shuffle examples every epoch");
  cmd->add_flag("--check-conditions", f.check_conditions,
                "abort when a weighting breaks condition 1 or 2");
}

TrainConfig build_config(const TrainFlags& f, std::ostream& err) {
  TrainConfig c;
  if (!f.config_file.empty()) apply_config_file(c, f.config_file);
  auto set = [&c](std::string_view key, const std::optional<std::string>& v) {
    if (v) set_config_value(c, key, *v);
  };
  set("algorithm", f.algorithm);
  set("set_gamma", f.set_gamma);
  set("aggressive", f.aggressive);
  set("k_best", f.k_best);
  set("epochs", f.epochs);
  set("markov_order", f.markov_order);
  set("averaging", f.averaging);
  set("seed", f.seed);
  if (f.shuffle) c.shuffle = true;
  if (f.check_conditions) c.check_conditions = true;
  const std::string alg(algorithm_name(c.algorithm));
  if (f.k_best && !c.uses_k_best()) {
    err << "warning: --k-best is ignored by " << alg << "\n";
  }
  if (f.set_gamma && !c.uses_gamma()) {
    err << "warning: --set-gamma is ignored by " << alg << "\n";
  }
  if (f.aggressive && !c.uses_gamma()) {
    err << "warning: --aggressive is ignored by " << alg << "\n";
  }
  return c;
}

ConllSchema labeled_schema(int label_col) {
  ConllSchema s;
  s.label_col = label_col;
  return s;
}

Corpus load_corpus(const std::string& path, const ConllSchema& schema) {
  if (!fs::exists(path)) throw ConfigError("corpus file not found: '" + path + "'");
  return read_conll_file(path, schema);
}

int cmd_train(const std::string& corpus_path, const TrainFlags& flags, int label_col,
              const std::string& output, std::ostream& err) {
  TrainConfig config = build_config(flags, err);
  Corpus corpus = load_corpus(corpus_path, labeled_schema(label_col));
  if (corpus.examples.empty()) throw ConfigError("corpus '" + corpus_path + "' is empty");
  std::ostringstream log;
  Model model = train(corpus, config, {&log, {}});
  save_model(model, output);
  write_file(output + ".log", log.str());
  err << describe(config) << ": " << model.epochs.size() << " epochs, "
      << model.space.dimension() << " features, model written to " << output << "\n";
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output, std::ostream& out) {
  if (!fs::exists(model_path)) throw ConfigError("model file not found: '" + model_path + "'");
  Model model = load_model(model_path);
  std::string text = read_file(input_path, "input file");
  ConllSchema schema;
  schema.has_labels = false;
  Corpus input = parse_conll(text, schema);

  // Echo the input line by line and append one label per token line, so
  // column layout and document markers survive untouched.
  std::string result;
  std::size_t sentence = 0, token = 0;
  LabelSequence labels;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    auto first = view.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
      if (token > 0) {
        ++sentence;
        token = 0;
      }
      result += '\n';
      continue;
    }
    if (view.substr(first).starts_with("-DOCSTART-")) {
      result += line + '\n';
      continue;
    }
    if (token == 0) labels = predict(model, input.examples.at(sentence).sentence);
    result += line + ' ' + model.space.labels().name(labels.at(token)) + '\n';
    ++token;
  }
  if (output.empty() || output == "-") {
    out << result;
  } else {
    write_file(output, result);
  }
  return kOk;
}

int cmd_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& scheme_name, int label_col, std::ostream& out) {
  Scheme scheme = parse_scheme(scheme_name);
  Corpus gold = load_corpus(gold_path, labeled_schema(label_col));
  Corpus pred = load_corpus(pred_path, labeled_schema(-1));
  if (gold.size() != pred.size()) {
    throw ContractViolation("gold has " + std::to_string(gold.size()) + " sentences, '" +
                            pred_path + "' has " + std::to_string(pred.size()));
  }
  std::vector<std::vector<std::string>> g, p;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold.examples[s].sentence.size() != pred.examples[s].sentence.size()) {
      throw ContractViolation("sentence " + std::to_string(s + 1) + " differs in length");
    }
    g.push_back(gold.label_names(s));
    p.push_back(pred.label_names(s));
  }
  PrfScore prf = micro_prf(g, p, scheme);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "precision %.4f\nrecall    %.4f\nf1        %.4f\n"
                "tp %zu fp %zu fn %zu\nPRF\t%.6f\t%.6f\t%.6f\n",
                prf.precision, prf.recall, prf.f1, prf.tp, prf.fp, prf.fn, prf.precision,
                prf.recall, prf.f1);
  out << buf;
  return kOk;
}

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (c == '(' || c == ')' || c == ',' || c == '=') c = '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

ExperimentReport run_experiment(const std::string& path, std::optional<std::uint64_t> seed,
                                std::optional<std::size_t> workers, std::ostream& err,
                                fs::path& outdir) {
  ExperimentSpec spec = read_experiment_file(path);
  if (seed) {
    spec.options.seed = *seed;
    spec.grid.base.seed = *seed;
  }
  if (workers) spec.options.workers = *workers;
  fs::path corpus_path = spec.corpus;
  if (corpus_path.is_relative()) corpus_path = fs::path(path).parent_path() / corpus_path;
  Corpus corpus = load_corpus(corpus_path.string(), labeled_schema(spec.label_col));

  // An explicit -o wins over the experiment's output key.
  if (outdir.empty()) {
    outdir = spec.output;
    if (outdir.is_relative()) outdir = fs::path(path).parent_path() / outdir;
  }
  spec.options.on_log = [&](const TrainConfig& c, std::size_t fold, bool final,
                            const std::string& log) {
    std::string name = file_safe(describe(c)) + "_fold" + std::to_string(fold) +
                       (final ? "_final" : "") + ".log";
    write_file(outdir / "logs" / name, log);
  };
  spec.options.on_model = [&](const TrainConfig& c, std::size_t fold, const Model& m) {
    fs::create_directories(outdir / "models");
    save_model(m, (outdir / "models" /
                   (std::string(algorithm_name(c.algorithm)) + "_fold" +
                    std::to_string(fold) + ".model"))
                      .string());
  };
  err << spec.dataset << ": " << corpus.size() << " sentences, "
      << spec.grid.expand().size() << " configs x " << spec.options.folds << " folds\n";
  return run_cv(corpus, spec.grid, spec.options);
}

int cmd_cv(const std::string& experiment, std::optional<std::uint64_t> seed,
           std::optional<std::size_t> workers, const std::string& output, std::ostream& out,
           std::ostream& err) {
  fs::path outdir = output;
  ExperimentReport report = run_experiment(experiment, seed, workers, err, outdir);
  RenderedReport r = render_report(report);
  write_file(outdir / "report.txt", r.text);
  write_file(outdir / "report.csv", r.csv);
  out << r.text;
  return kOk;
}

int cmd_compare(const std::vector<std::string>& experiments, std::optional<std::uint64_t> seed,
                std::optional<std::size_t> workers, const std::string& output,
                std::ostream& out, std::ostream& err) {
  std::vector<ExperimentReport> reports;
  for (const auto& e : experiments) {
    fs::path outdir;
    reports.push_back(run_experiment(e, seed, workers, err, outdir));
  }
  RenderedReport r = render_report(reports);
  fs::path outdir = output.empty() ? fs::path("compare_out") : fs::path(output);
  write_file(outdir / "report.txt", r.text);
  write_file(outdir / "report.csv", r.csv);
  out << r.text;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online structured learners for sequence labeling", "swvm"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  std::string corpus, model, input, gold, pred, output, scheme = "iob2", experiment;
  std::vector<std::string> experiments;
  int label_col = -1;
  std::optional<std::uint64_t> cv_seed;
  std::optional<std::size_t> workers;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a labeled CoNLL file");
  train_cmd->add_option("corpus", corpus, "labeled CoNLL corpus")->required();
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_option("--label-col", label_col, "label column (negative counts from the end)");
  train_cmd->add_option("--output,-o", output, "model file")->required();

  CLI::App* predict_cmd = app.add_subcommand("predict", "append predicted labels");
  predict_cmd->add_option("--model,-m", model, "model file")->required();
  predict_cmd->add_option("input", input, "CoNLL input")->required();
  predict_cmd->add_option("--output,-o", output, "output file (default stdout)");

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "span P/R/F1 of predictions");
  eval_cmd->add_option("gold", gold, "gold CoNLL file")->required();
  eval_cmd->add_option("pred", pred, "prediction file (label in the last column)")->required();
  eval_cmd->add_option("--scheme", scheme, "iob1 or iob2");
  eval_cmd->add_option("--label-col", label_col, "gold label column");

  CLI::App* cv_cmd = app.add_subcommand("cv", "cross-validation experiment");
  cv_cmd->add_option("experiment", experiment, "experiment config file")->required();
  cv_cmd->add_option("--seed", cv_seed, "override the experiment seed");
  cv_cmd->add_option("--workers", workers, "worker threads");
  cv_cmd->add_option("--output,-o", output, "report directory");

  CLI::App* compare_cmd = app.add_subcommand("compare", "one table over several experiments");
  compare_cmd->add_option("experiments", experiments, "experiment config files")->required();
  compare_cmd->add_option("--seed", cv_seed, "override the experiment seeds");
  compare_cmd->add_option("--workers", workers, "worker threads");
  compare_cmd->add_option("--output,-o", output, "report directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  }

  try {
    if (*train_cmd) return cmd_train(corpus, train_flags, label_col, output, err);
    if (*predict_cmd) return cmd_predict(model, input, output, out);
    if (*eval_cmd) return cmd_evaluate(gold, pred, scheme, label_col, out);
    if (*cv_cmd) return cmd_cv(experiment, cv_seed, workers, output, out, err);
    if (*compare_cmd) return cmd_compare(experiments, cv_seed, workers, output, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const ChecksumError& e) {
    err << "error: " << e.what() << "\n";
    return kBadModel;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace swvm::cli
