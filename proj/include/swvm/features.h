#ifndef SWVM_FEATURES_H_
#define SWVM_FEATURES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "swvm/corpus.h"
#include "swvm/sparse.h"

namespace swvm {

// Boundary label sentinels for t[i-1] at i = 0 and t[i+1] at i = L-1.
inline constexpr LabelId kBos = -1;
inline constexpr LabelId kEos = -2;

// Boundary word sentinels for w[i-1] / w[i+1].
inline constexpr std::string_view kBosWord = "<BOS>";
inline constexpr std::string_view kEosWord = "<EOS>";

// Bidirectional feature-string <-> id map. Once frozen it never grows.
class FeatureAlphabet {
 public:
  std::optional<FeatureId> find(std::string_view name) const;
  // Returns the id of `name`, adding it when grow is set and the alphabet is
  // not frozen; otherwise nullopt for unseen strings.
  std::optional<FeatureId> lookup(const std::string& name, bool grow);
  const std::string& name(FeatureId id) const {
    return names_.at(static_cast<std::size_t>(id));
  }
  std::size_t size() const { return names_.size(); }
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, FeatureId> ids_;
  bool frozen_ = false;
};

// One observation element: a column (0 = surface, k = k-th extra column) read
// at a relative position.
struct ObservationPart {
  int offset = 0;
  std::size_t column = 0;
};

struct FeatureTemplate {
  std::string name;
  std::vector<ObservationPart> observations;
  // Label arguments as offsets from i, in the order they appear in the
  // feature string.
  std::vector<int> label_offsets;

  bool uses(int offset) const;
};

struct FeatureOptions {
  int markov_order = 2;
  // Number of extra input columns to add as "X<k>[i]:t[i]" unigram
  // templates. 0 keeps the 19 standard templates only.
  std::size_t extra_columns = 0;

  friend bool operator==(const FeatureOptions&, const FeatureOptions&) = default;
};

// The 19 word/label templates (6 unigram, 9 bigram, 4 trigram). Templates
// without a label argument are conjoined with t[i]. markov_order 1 drops the
// three templates that couple t[i-1] with t[i+1].
std::vector<FeatureTemplate> standard_templates(const FeatureOptions& options);

// Per-position observation ids for every template, computed once per
// sentence. -1 marks an observation string unknown to a frozen space.
struct EncodedSentence {
  std::size_t length = 0;
  std::size_t num_templates = 0;
  std::vector<std::int32_t> observations;

  std::int32_t observation(std::size_t position, std::size_t tmpl) const {
    return observations[position * num_templates + tmpl];
  }
};

struct LocalContext {
  const EncodedSentence* sentence = nullptr;
  std::size_t position = 0;
  LabelId prev = kBos;
  LabelId cur = 0;
  LabelId next = kEos;
};

// Label argument as stored in the packed feature key.
struct LabelTriple {
  static constexpr std::uint8_t kBosCode = 253;
  static constexpr std::uint8_t kEosCode = 254;
  static constexpr std::uint8_t kUnused = 255;

  std::uint8_t prev = kUnused;
  std::uint8_t cur = kUnused;
  std::uint8_t next = kUnused;
};

struct FeatureEntry {
  LabelTriple labels;
  FeatureId id = 0;
};

// Template set + alphabets. Every feature string is also indexed by a packed
// (template, observation, labels) key so extraction and decoding never build
// strings for features that already exist.
class FeatureSpace {
 public:
  FeatureSpace(LabelAlphabet labels, FeatureOptions options);

  // Rebuilds a space from serialized feature strings in id order.
  static FeatureSpace from_feature_strings(LabelAlphabet labels,
                                           FeatureOptions options,
                                           std::span<const std::string> features);

  const LabelAlphabet& labels() const { return labels_; }
  std::size_t num_labels() const { return labels_.size(); }
  const FeatureOptions& options() const { return options_; }
  const std::vector<FeatureTemplate>& templates() const { return templates_; }
  const FeatureAlphabet& alphabet() const { return alphabet_; }
  std::size_t dimension() const { return alphabet_.size(); }

  void freeze() { alphabet_.freeze(); }
  bool frozen() const { return alphabet_.frozen(); }

  // Observation strings are interned when grow is set and the space is not
  // frozen.
  EncodedSentence encode(const Sentence& sentence, bool grow);
  EncodedSentence encode(const Sentence& sentence) const;

  SparseVector local_features(const LocalContext& ctx, bool grow);
  SparseVector local_features(const LocalContext& ctx) const;

  // Ids of the features that fire at ctx and exist in the alphabet.
  void local_ids(const LocalContext& ctx, std::vector<FeatureId>& out) const;

  SparseVector global_phi(const EncodedSentence& x, const LabelSequence& y,
                          bool grow);
  SparseVector global_phi(const EncodedSentence& x, const LabelSequence& y) const;

  // Phi(x,y) - Phi(x,z). Only positions whose label window differs are
  // extracted; shared features cancel exactly.
  SparseVector delta_phi(const EncodedSentence& x, const LabelSequence& y,
                         const LabelSequence& z, bool grow);
  SparseVector delta_phi(const EncodedSentence& x, const LabelSequence& y,
                         const LabelSequence& z) const;

  // All features of template `tmpl` with observation id `obs`.
  std::span<const FeatureEntry> entries(std::size_t tmpl, std::int32_t obs) const;

  static std::string escape(std::string_view field);

 private:
  struct ObsAlphabet {
    std::vector<std::string> names;
    std::unordered_map<std::string, std::int32_t> ids;
    std::int32_t intern(const std::string& key);
    std::int32_t find(const std::string& key) const;
  };

  static std::uint64_t pack(std::size_t tmpl, std::int32_t obs, LabelTriple labels);
  std::uint8_t label_code(LabelId id) const;
  std::string label_field(std::uint8_t code) const;
  LabelTriple triple_for(const FeatureTemplate& t, const LocalContext& ctx) const;
  std::string observation_key(const FeatureTemplate& t, const Sentence& s,
                              std::size_t i) const;
  std::string feature_string(std::size_t tmpl, std::int32_t obs,
                             LabelTriple labels) const;
  void check_context(const LocalContext& ctx) const;
  EncodedSentence encode_impl(const Sentence& sentence, bool grow);
  std::optional<FeatureId> lookup(std::size_t tmpl, std::int32_t obs,
                                  LabelTriple labels, bool grow);
  std::optional<FeatureId> find(std::size_t tmpl, std::int32_t obs,
                                LabelTriple labels) const;
  void index(std::size_t tmpl, std::int32_t obs, LabelTriple labels, FeatureId id);

  LabelAlphabet labels_;
  FeatureOptions options_;
  std::vector<FeatureTemplate> templates_;
  FeatureAlphabet alphabet_;
  ObsAlphabet observations_;
  std::unordered_map<std::uint64_t, FeatureId> by_key_;
  std::unordered_map<std::uint64_t, std::vector<FeatureEntry>> by_observation_;
};

}  // namespace swvm

#endif  // SWVM_FEATURES_H_
