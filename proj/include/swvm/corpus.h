#ifndef SWVM_CORPUS_H_
#define SWVM_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace swvm {

using LabelId = std::int32_t;
using LabelSequence = std::vector<LabelId>;

struct Token {
  std::string surface;
  std::vector<std::string> extra_columns;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Label name <-> id. Ids are dense and assigned in first-seen order.
class LabelAlphabet {
 public:
  // Keeps label ids representable in the packed feature keys.
  static constexpr std::size_t kMaxLabels = 250;

  LabelAlphabet() = default;
  explicit LabelAlphabet(std::vector<std::string> names);

  LabelId intern(std::string_view name);
  std::optional<LabelId> find(std::string_view name) const;
  const std::string& name(LabelId id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const LabelAlphabet& a, const LabelAlphabet& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelId> ids_;
};

struct Example {
  Sentence sentence;
  LabelSequence labels;  // empty when the corpus was read without labels

  friend bool operator==(const Example&, const Example&) = default;
};

struct ConllSchema {
  // Column holding the label; negative values count from the end (-1 = last).
  int label_col = -1;
  bool has_labels = true;
  bool drop_docstart = true;
  // Required column count per row; 0 accepts any count that is consistent
  // within each sentence.
  std::size_t columns = 0;
};

struct Corpus {
  LabelAlphabet labels;
  std::vector<Example> examples;
  ConllSchema schema;

  std::size_t size() const { return examples.size(); }
  std::vector<std::string> label_names(std::size_t index) const;
};

Corpus parse_conll(std::string_view text, const ConllSchema& schema = {});
Corpus read_conll_file(const std::string& path, const ConllSchema& schema = {});

// Inverse of parse_conll: one space between columns, blank line after each
// sentence.
std::string serialize_conll(const Corpus& corpus);

// Copies the selected examples. With compact_labels the alphabet keeps only
// labels that occur in the subset, in their original relative order.
Corpus subset(const Corpus& corpus, std::span<const std::size_t> indices,
              bool compact_labels = true);

enum class Scheme { kIob1, kIob2 };

Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme scheme);

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  std::string kind;

  friend auto operator<=>(const Span&, const Span&) = default;
};

// Maximal typed spans, sorted by start. An I-X without a matching predecessor
// opens a new span (conlleval behaviour), so decoding never fails. Labels with
// no B-/I- prefix other than "O" are read as I-<label>.
std::vector<Span> decode_spans(std::span<const std::string> tags, Scheme scheme);
std::vector<Span> decode_spans(const LabelSequence& labels,
                               const LabelAlphabet& alphabet, Scheme scheme);

struct FoldSplit {
  std::size_t fold_id = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// Sentence-level k-fold splits. The shuffled corpus is cut into 2k blocks;
// fold f tests on block 2f and tunes on block 2f+1, so test sets are disjoint
// and the dev/test blocks of all folds together cover the corpus. For k = 5
// this gives 80/10/10.
std::vector<FoldSplit> make_folds(std::size_t corpus_size, std::size_t k,
                                  std::uint64_t seed);

}  // namespace swvm

#endif  // SWVM_CORPUS_H_
