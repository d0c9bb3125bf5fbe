#include "swvm/corpus.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "swvm/errors.h"
#include "swvm/random.h"

namespace swvm {

namespace {

std::vector<std::string> split_columns(std::string_view line) {
  std::vector<std::string> cols;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) cols.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return cols;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\r';
  });
}

std::size_t resolve_label_col(int label_col, std::size_t ncols,
                              std::size_t line_no) {
  long idx = label_col < 0 ? static_cast<long>(ncols) + label_col : label_col;
  if (idx < 0 || idx >= static_cast<long>(ncols)) {
    throw ParseError(line_no, "label column " + std::to_string(label_col) +
                                  " out of range for " + std::to_string(ncols) +
                                  " columns");
  }
  return static_cast<std::size_t>(idx);
}

// Splits "B-PER" into ('B', "PER"); plain labels become ('I', label).
std::pair<char, std::string_view> split_tag(std::string_view tag) {
  if (tag == "O") return {'O', {}};
  if (tag.size() >= 2 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) {
    return {tag[0], tag.substr(2)};
  }
  return {'I', tag};
}

}  // namespace

LabelAlphabet::LabelAlphabet(std::vector<std::string> names) {
  for (auto& n : names) intern(n);
}

LabelId LabelAlphabet::intern(std::string_view name) {
  if (auto id = find(name)) return *id;
  if (name == "BOS" || name == "EOS") {
    throw ConfigError("label name '" + std::string(name) +
                      "' is reserved for boundary sentinels");
  }
  if (names_.size() >= kMaxLabels) {
    throw ConfigError("too many labels (max " + std::to_string(kMaxLabels) + ")");
  }
  auto id = static_cast<LabelId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<LabelId> LabelAlphabet::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Corpus::label_names(std::size_t index) const {
  std::vector<std::string> out;
  for (LabelId id : examples.at(index).labels) out.push_back(labels.name(id));
  return out;
}

Corpus parse_conll(std::string_view text, const ConllSchema& schema) {
  Corpus corpus;
  corpus.schema = schema;
  Example current;
  std::size_t current_cols = 0;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!current.sentence.tokens.empty()) {
      corpus.examples.push_back(std::move(current));
    }
    current = Example{};
    current_cols = 0;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;

    if (is_blank(line)) {
      flush();
      continue;
    }
    auto cols = split_columns(line);
    if (schema.drop_docstart && cols.front() == "-DOCSTART-") continue;

    const std::size_t min_cols = schema.has_labels ? 2 : 1;
    if (cols.size() < min_cols) {
      throw ParseError(line_no, "expected at least " + std::to_string(min_cols) +
                                    " columns, found " + std::to_string(cols.size()));
    }
    if (schema.columns != 0 && cols.size() != schema.columns) {
      throw ParseError(line_no, "expected " + std::to_string(schema.columns) +
                                    " columns, found " + std::to_string(cols.size()));
    }
    if (current_cols != 0 && cols.size() != current_cols) {
      throw ParseError(line_no, "ragged row: expected " +
                                    std::to_string(current_cols) + " columns, found " +
                                    std::to_string(cols.size()));
    }
    current_cols = cols.size();

    if (schema.has_labels) {
      std::size_t lc = resolve_label_col(schema.label_col, cols.size(), line_no);
      current.labels.push_back(corpus.labels.intern(cols[lc]));
      cols.erase(cols.begin() + static_cast<long>(lc));
    }
    Token tok;
    tok.surface = std::move(cols.front());
    tok.extra_columns.assign(std::make_move_iterator(cols.begin() + 1),
                             std::make_move_iterator(cols.end()));
    current.sentence.tokens.push_back(std::move(tok));
  }
  flush();
  return corpus;
}

Corpus read_conll_file(const std::string& path, const ConllSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_conll(buf.str(), schema);
}

std::string serialize_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples) {
    for (std::size_t i = 0; i < ex.sentence.size(); ++i) {
      const Token& tok = ex.sentence.tokens[i];
      std::vector<std::string_view> cols;
      cols.push_back(tok.surface);
      for (const auto& c : tok.extra_columns) cols.push_back(c);
      if (corpus.schema.has_labels) {
        std::size_t ncols = cols.size() + 1;
        std::size_t lc = resolve_label_col(corpus.schema.label_col, ncols, 0);
        cols.insert(cols.begin() + static_cast<long>(lc),
                    corpus.labels.name(ex.labels[i]));
      }
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) out += ' ';
        out += cols[c];
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

Corpus subset(const Corpus& corpus, std::span<const std::size_t> indices,
              bool compact_labels) {
  Corpus out;
  out.schema = corpus.schema;
  if (!compact_labels) {
    out.labels = corpus.labels;
    for (std::size_t i : indices) out.examples.push_back(corpus.examples.at(i));
    return out;
  }
  std::vector<bool> used(corpus.labels.size(), false);
  for (std::size_t i : indices) {
    for (LabelId id : corpus.examples.at(i).labels) used[static_cast<std::size_t>(id)] = true;
  }
  std::vector<LabelId> remap(corpus.labels.size(), -1);
  for (std::size_t id = 0; id < used.size(); ++id) {
    if (used[id]) remap[id] = out.labels.intern(corpus.labels.name(static_cast<LabelId>(id)));
  }
  for (std::size_t i : indices) {
    Example ex = corpus.examples[i];
    for (LabelId& id : ex.labels) id = remap[static_cast<std::size_t>(id)];
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Scheme parse_scheme(std::string_view name) {
  if (name == "iob1") return Scheme::kIob1;
  if (name == "iob2") return Scheme::kIob2;
  throw ConfigError("unknown scheme '" + std::string(name) + "' (expected iob1 or iob2)");
}

std::string_view scheme_name(Scheme scheme) {
  return scheme == Scheme::kIob1 ? "iob1" : "iob2";
}

// Under lenient repair IOB1 and IOB2 decode identically: IOB1's "I-X opens a
// span after O or another type" is exactly the IOB2 repair rule.
std::vector<Span> decode_spans(std::span<const std::string> tags, Scheme) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&](std::size_t end) {
    if (open) {
      open->end = end;
      spans.push_back(std::move(*open));
      open.reset();
    }
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    auto [prefix, kind] = split_tag(tags[i]);
    if (prefix == 'O') {
      if (i > 0) close(i - 1);
    } else if (prefix == 'B' || !open || open->kind != kind) {
      if (i > 0) close(i - 1);
      open = Span{i, i, std::string(kind)};
    }
  }
  if (!tags.empty()) close(tags.size() - 1);
  return spans;
}

std::vector<Span> decode_spans(const LabelSequence& labels,
                               const LabelAlphabet& alphabet, Scheme scheme) {
  std::vector<std::string> tags;
  tags.reserve(labels.size());
  for (LabelId id : labels) tags.push_back(alphabet.name(id));
  return decode_spans(tags, scheme);
}

std::vector<FoldSplit> make_folds(std::size_t corpus_size, std::size_t k,
                                  std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  if (corpus_size < k * 10) {
    throw ConfigError("corpus of " + std::to_string(corpus_size) +
                      " sentences is too small for " + std::to_string(k) +
                      " folds (need at least " + std::to_string(k * 10) + ")");
  }
  std::vector<std::size_t> order(corpus_size);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  seeded_shuffle(order, rng);

  const std::size_t blocks = 2 * k;
  std::vector<std::size_t> bounds(blocks + 1, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    bounds[b + 1] = bounds[b] + corpus_size / blocks + (b < corpus_size % blocks ? 1 : 0);
  }
  auto block = [&](std::size_t b) {
    std::vector<std::size_t> out(order.begin() + static_cast<long>(bounds[b]),
                                 order.begin() + static_cast<long>(bounds[b + 1]));
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<FoldSplit> folds;
  for (std::size_t f = 0; f < k; ++f) {
    FoldSplit split;
    split.fold_id = f;
    split.test = block(2 * f);
    split.dev = block(2 * f + 1);
    for (std::size_t b = 0; b < blocks; ++b) {
      if (b == 2 * f || b == 2 * f + 1) continue;
      auto part = block(b);
      split.train.insert(split.train.end(), part.begin(), part.end());
    }
    std::sort(split.train.begin(), split.train.end());
    folds.push_back(std::move(split));
  }
  return folds;
}

}  // namespace swvm
