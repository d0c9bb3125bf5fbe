#include "swvm/model_io.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "swvm/errors.h"

namespace swvm {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_weights(std::string& out, std::string_view section, const WeightVector& w) {
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w.values()[i] != 0.0) nz.push_back(i);
  }
  out += std::string(section) + ' ' + std::to_string(nz.size()) + '\n';
  for (std::size_t i : nz) {
    out += std::to_string(i) + ':' + fmt_double(w.values()[i]) + '\n';
  }
}

std::string config_line(const TrainConfig& c) {
  std::string s = "config";
  auto kv = [&s](std::string_view k, const std::string& v) {
    s += ' ';
    s += k;
    s += '=';
    s += v;
  };
  kv("algorithm", std::string(algorithm_name(c.algorithm)));
  kv("set_gamma", std::string(gamma_scheme_name(c.set_gamma)));
  kv("aggressive", c.aggressive ? "1" : "0");
  kv("k_best", std::to_string(c.k_best));
  kv("epochs", std::to_string(c.max_epochs));
  kv("averaging", c.uses_averaging() ? "1" : "0");
  kv("markov_order", std::to_string(c.markov_order));
  kv("extra_columns", std::to_string(c.extra_columns));
  kv("seed", std::to_string(c.seed));
  kv("shuffle", c.shuffle ? "1" : "0");
  kv("full_template_only", c.full_template_only ? "1" : "0");
  kv("check_conditions", c.check_conditions ? "1" : "0");
  kv("qp_max_iter", std::to_string(c.qp_max_iter));
  kv("qp_tolerance", fmt_double(c.qp_tolerance));
  return s;
}

class LineReader {
 public:
  LineReader(std::string_view text, std::size_t first_line)
      : text_(text), line_no_(first_line - 1) {}

  std::string_view next() {
    if (pos_ >= text_.size()) fail("unexpected end of model file");
    std::size_t nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) nl = text_.size();
    std::string_view line = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    ++line_no_;
    return line;
  }

  bool done() const { return pos_ >= text_.size(); }

  // "<keyword> <value>"
  std::string_view field(std::string_view keyword) {
    std::string_view line = next();
    if (line.substr(0, keyword.size()) != keyword || line.size() <= keyword.size() ||
        line[keyword.size()] != ' ') {
      fail("expected '" + std::string(keyword) + "'");
    }
    return line.substr(keyword.size() + 1);
  }

  std::size_t count(std::string_view keyword) { return number<std::size_t>(field(keyword)); }

  template <typename T>
  T number(std::string_view s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail("bad number '" + std::string(s) + "'");
    }
    return v;
  }

  double real(std::string_view s) {
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) fail("bad value '" + tmp + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_no_, what); }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_no_;
};

WeightVector read_weights(LineReader& in, std::string_view section, std::size_t dim) {
  std::size_t n = in.count(section);
  WeightVector w(dim);
  for (std::size_t k = 0; k < n; ++k) {
    std::string_view line = in.next();
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) in.fail("expected id:value");
    auto id = in.number<std::size_t>(line.substr(0, colon));
    if (id >= dim) in.fail("weight id " + std::to_string(id) + " outside the feature alphabet");
    w.set(static_cast<FeatureId>(id), in.real(line.substr(colon + 1)));
  }
  return w;
}

std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = s.find(' ', i);
    if (j == std::string_view::npos) j = s.size();
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::string serialize_model(const Model& model) {
  const TrainConfig& c = model.config;
  std::string body;
  body += "algorithm " + std::string(algorithm_name(c.algorithm)) + '\n';
  body += "markov_order " + std::to_string(model.space.options().markov_order) + '\n';
  body += std::string("averaging ") + (model.averaged ? "1" : "0") + '\n';
  body += config_line(c) + '\n';
  body += "epochs " + std::to_string(model.epochs.size()) + '\n';
  for (const EpochStats& e : model.epochs) {
    body += std::to_string(e.epoch) + ' ' + std::to_string(e.mistakes) + ' ' +
            std::to_string(e.updates) + ' ' + std::to_string(e.fallbacks) + ' ' +
            fmt_double(e.mean_templates) + ' ' + std::to_string(e.cumulative_violations) +
            ' ' + std::to_string(e.qp_warnings) + '\n';
  }
  const LabelAlphabet& labels = model.space.labels();
  body += "labels " + std::to_string(labels.size()) + '\n';
  for (const auto& name : labels.names()) body += name + '\n';
  const FeatureAlphabet& alphabet = model.space.alphabet();
  body += "features " + std::to_string(alphabet.size()) + '\n';
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    body += alphabet.name(static_cast<FeatureId>(i)) + '\t' + std::to_string(i) + '\n';
  }
  write_weights(body, "weights", model.decoding_weights());
  write_weights(body, "raw_weights", model.weights);

  char sum[17];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  return "swvm-model " + std::to_string(kModelFormatVersion) + "\nchecksum " + sum + '\n' +
         body;
}

Model parse_model(std::string_view text) {
  LineReader head(text, 1);
  std::string_view magic = head.field("swvm-model");
  if (head.number<int>(magic) != kModelFormatVersion) {
    head.fail("unsupported model format version " + std::string(magic));
  }
  std::string_view declared = head.field("checksum");
  std::size_t body_start = text.find('\n', text.find('\n') + 1) + 1;
  std::string_view body = text.substr(body_start);
  char sum[17];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  if (declared != sum) {
    throw ChecksumError("model checksum mismatch: header says " + std::string(declared) +
                        ", content hashes to " + sum);
  }

  LineReader in(body, 3);
  TrainConfig config;
  try {
    config.algorithm = parse_algorithm(in.field("algorithm"));
  } catch (const ConfigError& e) {
    in.fail(e.what());
  }
  const int markov_order = in.number<int>(in.field("markov_order"));
  const bool averaging = in.number<int>(in.field("averaging")) != 0;
  for (std::string_view kv : split_spaces(in.field("config"))) {
    std::size_t eq = kv.find('=');
    if (eq == std::string_view::npos) in.fail("config entry without '='");
    try {
      set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const ConfigError& e) {
      in.fail(e.what());
    }
  }
  config.markov_order = markov_order;
  config.averaging = averaging;

  std::vector<EpochStats> epochs(in.count("epochs"));
  for (EpochStats& e : epochs) {
    auto f = split_spaces(in.next());
    if (f.size() != 7) in.fail("malformed epoch line");
    e.epoch = in.number<std::size_t>(f[0]);
    e.mistakes = in.number<std::size_t>(f[1]);
    e.updates = in.number<std::size_t>(f[2]);
    e.fallbacks = in.number<std::size_t>(f[3]);
    e.mean_templates = in.real(f[4]);
    e.cumulative_violations = in.number<std::size_t>(f[5]);
    e.qp_warnings = in.number<std::size_t>(f[6]);
  }

  std::size_t num_labels = in.count("labels");
  std::vector<std::string> label_names;
  for (std::size_t i = 0; i < num_labels; ++i) label_names.emplace_back(in.next());
  LabelAlphabet labels;
  try {
    labels = LabelAlphabet(label_names);
  } catch (const std::exception& e) {
    in.fail(e.what());
  }

  std::size_t num_features = in.count("features");
  std::vector<std::string> features;
  features.reserve(num_features);
  for (std::size_t i = 0; i < num_features; ++i) {
    std::string_view line = in.next();
    std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) in.fail("expected feature TAB id");
    if (in.number<std::size_t>(line.substr(tab + 1)) != i) in.fail("feature ids out of order");
    features.emplace_back(line.substr(0, tab));
  }
  FeatureSpace space = [&] {
    try {
      return FeatureSpace::from_feature_strings(std::move(labels),
                                                config.feature_options(), features);
    } catch (const ParseError& e) {
      in.fail(e.what());
    }
  }();

  WeightVector decoding = read_weights(in, "weights", num_features);
  WeightVector raw = read_weights(in, "raw_weights", num_features);
  if (!in.done()) in.fail("trailing content after raw_weights");

  std::optional<WeightVector> averaged;
  if (averaging) averaged = std::move(decoding);
  return Model{std::move(space), std::move(raw), std::move(averaged), config, std::move(epochs)};
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << serialize_model(model);
  if (!out) throw std::runtime_error("error writing model file '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace swvm
