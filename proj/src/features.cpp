#include "swvm/features.h"

#include <algorithm>
#include <utility>

#include "swvm/errors.h"

namespace swvm {

namespace {

std::string unescape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] == '\\' && i + 1 < field.size()) ++i;
    out += field[i];
  }
  return out;
}

// Splits on '|' not preceded by an escaping backslash; fields stay escaped.
std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == '|') {
      fields.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  fields.push_back(s.substr(start));
  return fields;
}

}  // namespace

std::optional<FeatureId> FeatureAlphabet::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<FeatureId> FeatureAlphabet::lookup(const std::string& name, bool grow) {
  if (auto id = find(name)) return id;
  if (!grow || frozen_) return std::nullopt;
  auto id = static_cast<FeatureId>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

bool FeatureTemplate::uses(int offset) const {
  return std::find(label_offsets.begin(), label_offsets.end(), offset) !=
         label_offsets.end();
}

std::vector<FeatureTemplate> standard_templates(const FeatureOptions& options) {
  using O = ObservationPart;
  std::vector<FeatureTemplate> t = {
      // Unigrams.
      {"U_w[i]:t[i]", {O{0, 0}}, {0}},
      {"U_w[i-1]:t[i]", {O{-1, 0}}, {0}},
      {"U_w[i+1]:t[i]", {O{1, 0}}, {0}},
      {"U_t[i]", {}, {0}},
      {"U_t[i-1]", {}, {-1}},
      {"U_t[i+1]", {}, {1}},
      // Bigrams.
      {"B_w[i],w[i-1]:t[i]", {O{0, 0}, O{-1, 0}}, {0}},
      {"B_w[i],w[i+1]:t[i]", {O{0, 0}, O{1, 0}}, {0}},
      {"B_w[i-1],w[i+1]:t[i]", {O{-1, 0}, O{1, 0}}, {0}},
      {"B_t[i],t[i-1]", {}, {0, -1}},
      {"B_t[i],t[i+1]", {}, {0, 1}},
      {"B_t[i-1],t[i+1]", {}, {-1, 1}},
      {"B_w[i],t[i-1]", {O{0, 0}}, {-1}},
      {"B_w[i],t[i]", {O{0, 0}}, {0}},
      {"B_w[i],t[i+1]", {O{0, 0}}, {1}},
      // Trigrams.
      {"T_t3", {}, {-1, 0, 1}},
      {"T_w[i],t[i],t[i+1]", {O{0, 0}}, {0, 1}},
      {"T_w[i],t[i-1],t[i+1]", {O{0, 0}}, {-1, 1}},
      {"T_w[i],t[i],t[i-1]", {O{0, 0}}, {0, -1}},
  };
  if (options.markov_order == 1) {
    std::erase_if(t, [](const FeatureTemplate& f) { return f.uses(-1) && f.uses(1); });
  } else if (options.markov_order != 2) {
    throw ConfigError("markov order must be 1 or 2");
  }
  for (std::size_t k = 1; k <= options.extra_columns; ++k) {
    t.push_back({"X" + std::to_string(k) + "[i]:t[i]", {O{0, k}}, {0}});
  }
  return t;
}

std::int32_t FeatureSpace::ObsAlphabet::intern(const std::string& key) {
  auto [it, inserted] = ids.emplace(key, static_cast<std::int32_t>(names.size()));
  if (inserted) names.push_back(key);
  return it->second;
}

std::int32_t FeatureSpace::ObsAlphabet::find(const std::string& key) const {
  auto it = ids.find(key);
  return it == ids.end() ? -1 : it->second;
}

FeatureSpace::FeatureSpace(LabelAlphabet labels, FeatureOptions options)
    : labels_(std::move(labels)),
      options_(options),
      templates_(standard_templates(options)) {
  if (labels_.size() == 0) throw ConfigError("feature space needs at least one label");
}

std::string FeatureSpace::escape(std::string_view field) {
  std::string out;
  out.reserve(field.size());
  for (char c : field) {
    if (c == '|' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::uint64_t FeatureSpace::pack(std::size_t tmpl, std::int32_t obs, LabelTriple l) {
  return (static_cast<std::uint64_t>(tmpl) << 56) |
         (static_cast<std::uint64_t>(l.prev) << 48) |
         (static_cast<std::uint64_t>(l.cur) << 40) |
         (static_cast<std::uint64_t>(l.next) << 32) |
         static_cast<std::uint32_t>(obs);
}

std::uint8_t FeatureSpace::label_code(LabelId id) const {
  if (id == kBos) return LabelTriple::kBosCode;
  if (id == kEos) return LabelTriple::kEosCode;
  return static_cast<std::uint8_t>(id);
}

std::string FeatureSpace::label_field(std::uint8_t code) const {
  if (code == LabelTriple::kBosCode) return "BOS";
  if (code == LabelTriple::kEosCode) return "EOS";
  return escape(labels_.name(code));
}

LabelTriple FeatureSpace::triple_for(const FeatureTemplate& t,
                                     const LocalContext& ctx) const {
  LabelTriple out;
  if (t.uses(-1)) out.prev = label_code(ctx.prev);
  if (t.uses(0)) out.cur = label_code(ctx.cur);
  if (t.uses(1)) out.next = label_code(ctx.next);
  return out;
}

std::string FeatureSpace::observation_key(const FeatureTemplate& t,
                                          const Sentence& s, std::size_t i) const {
  std::string key;
  for (std::size_t p = 0; p < t.observations.size(); ++p) {
    const ObservationPart& part = t.observations[p];
    if (p) key += '|';
    long j = static_cast<long>(i) + part.offset;
    if (j < 0) {
      key += kBosWord;
    } else if (j >= static_cast<long>(s.size())) {
      key += kEosWord;
    } else {
      const Token& tok = s.tokens[static_cast<std::size_t>(j)];
      if (part.column == 0) {
        key += escape(tok.surface);
      } else if (part.column <= tok.extra_columns.size()) {
        key += escape(tok.extra_columns[part.column - 1]);
      } else {
        throw ContractViolation("token lacks extra column " + std::to_string(part.column));
      }
    }
  }
  return key;
}

std::string FeatureSpace::feature_string(std::size_t tmpl, std::int32_t obs,
                                         LabelTriple labels) const {
  const FeatureTemplate& t = templates_[tmpl];
  std::string s = t.name;
  if (!t.observations.empty()) {
    s += '|';
    s += observations_.names[static_cast<std::size_t>(obs)];
  }
  for (int off : t.label_offsets) {
    s += '|';
    s += label_field(off < 0 ? labels.prev : off == 0 ? labels.cur : labels.next);
  }
  return s;
}

EncodedSentence FeatureSpace::encode(const Sentence& sentence) const {
  EncodedSentence enc;
  enc.length = sentence.size();
  enc.num_templates = templates_.size();
  enc.observations.resize(enc.length * enc.num_templates);
  for (std::size_t i = 0; i < enc.length; ++i) {
    for (std::size_t t = 0; t < templates_.size(); ++t) {
      enc.observations[i * enc.num_templates + t] =
          observations_.find(observation_key(templates_[t], sentence, i));
    }
  }
  return enc;
}

EncodedSentence FeatureSpace::encode(const Sentence& sentence, bool grow) {
  if (!grow || frozen()) return std::as_const(*this).encode(sentence);
  EncodedSentence enc;
  enc.length = sentence.size();
  enc.num_templates = templates_.size();
  enc.observations.resize(enc.length * enc.num_templates);
  for (std::size_t i = 0; i < enc.length; ++i) {
    for (std::size_t t = 0; t < templates_.size(); ++t) {
      enc.observations[i * enc.num_templates + t] =
          observations_.intern(observation_key(templates_[t], sentence, i));
    }
  }
  return enc;
}

void FeatureSpace::check_context(const LocalContext& ctx) const {
  if (ctx.sentence == nullptr || ctx.position >= ctx.sentence->length) {
    throw ContractViolation("local context position out of range");
  }
  if (ctx.sentence->num_templates != templates_.size()) {
    throw ContractViolation("sentence was encoded by a different feature space");
  }
  const bool first = ctx.position == 0;
  const bool last = ctx.position + 1 == ctx.sentence->length;
  auto valid = [this](LabelId l) {
    return l >= 0 && static_cast<std::size_t>(l) < labels_.size();
  };
  if (first ? ctx.prev != kBos : !valid(ctx.prev)) {
    throw ContractViolation("previous label must be BOS exactly at position 0");
  }
  if (last ? ctx.next != kEos : !valid(ctx.next)) {
    throw ContractViolation("next label must be EOS exactly at the last position");
  }
  if (!valid(ctx.cur)) throw ContractViolation("current label out of range");
}

std::optional<FeatureId> FeatureSpace::find(std::size_t tmpl, std::int32_t obs,
                                            LabelTriple labels) const {
  if (obs < 0) return std::nullopt;
  auto it = by_key_.find(pack(tmpl, obs, labels));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

void FeatureSpace::index(std::size_t tmpl, std::int32_t obs, LabelTriple labels,
                         FeatureId id) {
  by_key_.emplace(pack(tmpl, obs, labels), id);
  by_observation_[pack(tmpl, obs, LabelTriple{0, 0, 0})].push_back({labels, id});
}

std::optional<FeatureId> FeatureSpace::lookup(std::size_t tmpl, std::int32_t obs,
                                              LabelTriple labels, bool grow) {
  if (auto id = find(tmpl, obs, labels)) return id;
  if (!grow || frozen() || obs < 0) return std::nullopt;
  auto id = alphabet_.lookup(feature_string(tmpl, obs, labels), true);
  index(tmpl, obs, labels, *id);
  return id;
}

std::span<const FeatureEntry> FeatureSpace::entries(std::size_t tmpl,
                                                    std::int32_t obs) const {
  if (obs < 0) return {};
  auto it = by_observation_.find(pack(tmpl, obs, LabelTriple{0, 0, 0}));
  if (it == by_observation_.end()) return {};
  return it->second;
}

void FeatureSpace::local_ids(const LocalContext& ctx, std::vector<FeatureId>& out) const {
  check_context(ctx);
  for (std::size_t t = 0; t < templates_.size(); ++t) {
    if (auto id = find(t, ctx.sentence->observation(ctx.position, t),
                       triple_for(templates_[t], ctx))) {
      out.push_back(*id);
    }
  }
}

SparseVector FeatureSpace::local_features(const LocalContext& ctx) const {
  std::vector<FeatureId> ids;
  local_ids(ctx, ids);
  std::vector<SparseVector::Entry> entries;
  for (FeatureId id : ids) entries.emplace_back(id, 1.0);
  return SparseVector::from_unsorted(std::move(entries));
}

SparseVector FeatureSpace::local_features(const LocalContext& ctx, bool grow) {
  if (!grow) return std::as_const(*this).local_features(ctx);
  check_context(ctx);
  std::vector<SparseVector::Entry> entries;
  for (std::size_t t = 0; t < templates_.size(); ++t) {
    if (auto id = lookup(t, ctx.sentence->observation(ctx.position, t),
                         triple_for(templates_[t], ctx), true)) {
      entries.emplace_back(*id, 1.0);
    }
  }
  return SparseVector::from_unsorted(std::move(entries));
}

namespace {

LocalContext context_at(const EncodedSentence& x, const LabelSequence& y,
                        std::size_t i) {
  LocalContext ctx;
  ctx.sentence = &x;
  ctx.position = i;
  ctx.prev = i == 0 ? kBos : y[i - 1];
  ctx.cur = y[i];
  ctx.next = i + 1 == y.size() ? kEos : y[i + 1];
  return ctx;
}

void check_lengths(const EncodedSentence& x, const LabelSequence& y) {
  if (y.size() != x.length) {
    throw ContractViolation("label sequence length " + std::to_string(y.size()) +
                            " does not match sentence length " +
                            std::to_string(x.length));
  }
}

}  // namespace

SparseVector FeatureSpace::global_phi(const EncodedSentence& x,
                                      const LabelSequence& y) const {
  check_lengths(x, y);
  std::vector<FeatureId> ids;
  for (std::size_t i = 0; i < x.length; ++i) local_ids(context_at(x, y, i), ids);
  std::vector<SparseVector::Entry> entries;
  entries.reserve(ids.size());
  for (FeatureId id : ids) entries.emplace_back(id, 1.0);
  return SparseVector::from_unsorted(std::move(entries));
}

SparseVector FeatureSpace::global_phi(const EncodedSentence& x,
                                      const LabelSequence& y, bool grow) {
  if (!grow) return std::as_const(*this).global_phi(x, y);
  check_lengths(x, y);
  std::vector<SparseVector::Entry> entries;
  for (std::size_t i = 0; i < x.length; ++i) {
    SparseVector local = local_features(context_at(x, y, i), true);
    entries.insert(entries.end(), local.entries().begin(), local.entries().end());
  }
  return SparseVector::from_unsorted(std::move(entries));
}

namespace {

// Positions whose (i-1, i, i+1) label window differs between y and z.
std::vector<std::size_t> affected_positions(const LabelSequence& y,
                                            const LabelSequence& z) {
  std::vector<std::size_t> out;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    bool differs = y[i] != z[i] || (i > 0 && y[i - 1] != z[i - 1]) ||
                   (i + 1 < n && y[i + 1] != z[i + 1]);
    if (differs) out.push_back(i);
  }
  return out;
}

}  // namespace

SparseVector FeatureSpace::delta_phi(const EncodedSentence& x, const LabelSequence& y,
                                     const LabelSequence& z) const {
  check_lengths(x, y);
  check_lengths(x, z);
  std::vector<SparseVector::Entry> entries;
  std::vector<FeatureId> ids;
  for (std::size_t i : affected_positions(y, z)) {
    ids.clear();
    local_ids(context_at(x, y, i), ids);
    for (FeatureId id : ids) entries.emplace_back(id, 1.0);
    ids.clear();
    local_ids(context_at(x, z, i), ids);
    for (FeatureId id : ids) entries.emplace_back(id, -1.0);
  }
  return SparseVector::from_unsorted(std::move(entries));
}

SparseVector FeatureSpace::delta_phi(const EncodedSentence& x, const LabelSequence& y,
                                     const LabelSequence& z, bool grow) {
  if (!grow) return std::as_const(*this).delta_phi(x, y, z);
  check_lengths(x, y);
  check_lengths(x, z);
  std::vector<SparseVector::Entry> entries;
  for (std::size_t i : affected_positions(y, z)) {
    SparseVector plus = local_features(context_at(x, y, i), true);
    entries.insert(entries.end(), plus.entries().begin(), plus.entries().end());
    SparseVector minus = local_features(context_at(x, z, i), true);
    for (const auto& [id, v] : minus.entries()) entries.emplace_back(id, -v);
  }
  return SparseVector::from_unsorted(std::move(entries));
}

FeatureSpace FeatureSpace::from_feature_strings(LabelAlphabet labels,
                                                FeatureOptions options,
                                                std::span<const std::string> features) {
  FeatureSpace space(std::move(labels), options);
  std::unordered_map<std::string_view, std::size_t> by_name;
  for (std::size_t t = 0; t < space.templates_.size(); ++t) {
    by_name.emplace(space.templates_[t].name, t);
  }
  auto label_from = [&space](std::string_view field) -> std::uint8_t {
    if (field == "BOS") return LabelTriple::kBosCode;
    if (field == "EOS") return LabelTriple::kEosCode;
    auto id = space.labels_.find(unescape(field));
    if (!id) throw ParseError(0, "feature references unknown label '" + std::string(field) + "'");
    return static_cast<std::uint8_t>(*id);
  };

  for (const std::string& f : features) {
    auto fields = split_fields(f);
    auto it = by_name.find(fields.front());
    if (it == by_name.end()) {
      throw ParseError(0, "unknown feature template in '" + f + "'");
    }
    const std::size_t tmpl = it->second;
    const FeatureTemplate& t = space.templates_[tmpl];
    if (fields.size() != 1 + t.observations.size() + t.label_offsets.size()) {
      throw ParseError(0, "malformed feature string '" + f + "'");
    }
    std::string obs_key;
    for (std::size_t p = 0; p < t.observations.size(); ++p) {
      if (p) obs_key += '|';
      obs_key += fields[1 + p];
    }
    std::int32_t obs = space.observations_.intern(obs_key);
    LabelTriple labels;
    for (std::size_t k = 0; k < t.label_offsets.size(); ++k) {
      std::uint8_t code = label_from(fields[1 + t.observations.size() + k]);
      int off = t.label_offsets[k];
      (off < 0 ? labels.prev : off == 0 ? labels.cur : labels.next) = code;
    }
    auto id = space.alphabet_.lookup(f, true);
    if (static_cast<std::size_t>(*id) + 1 != space.alphabet_.size()) {
      throw ParseError(0, "duplicate feature string '" + f + "'");
    }
    space.index(tmpl, obs, labels, *id);
  }
  space.freeze();
  return space;
}

}  // namespace swvm
