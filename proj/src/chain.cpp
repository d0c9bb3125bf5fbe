#include "swvm/chain.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swvm/errors.h"

namespace swvm {

double score(const FeatureSpace& space, const WeightVector& w,
             const EncodedSentence& x, const LabelSequence& y) {
  if (y.size() != x.length) {
    throw ContractViolation("score: label sequence length does not match sentence");
  }
  double total = 0.0;
  std::vector<FeatureId> ids;
  for (std::size_t i = 0; i < x.length; ++i) {
    LocalContext ctx{&x, i, i == 0 ? kBos : y[i - 1], y[i],
                     i + 1 == y.size() ? kEos : y[i + 1]};
    ids.clear();
    space.local_ids(ctx, ids);
    for (FeatureId id : ids) total += w[id];
  }
  return total;
}

namespace {

// Resolves a packed label code to a table index; kUnused selects all.
struct Range {
  std::size_t begin;
  std::size_t end;
};

Range range_of(std::uint8_t code, std::size_t labels, std::size_t full) {
  if (code == LabelTriple::kUnused) return {0, full};
  if (code == LabelTriple::kBosCode || code == LabelTriple::kEosCode) {
    return {labels, labels + 1};
  }
  return {code, std::size_t{code} + 1};
}

}  // namespace

ChainFactors::ChainFactors(const FeatureSpace& space, const WeightVector& w,
                           const EncodedSentence& x)
    : length_(x.length),
      labels_(space.num_labels()),
      stride_(space.num_labels() + 1),
      table_(x.length * stride_ * labels_ * stride_, 0.0) {
  const auto& templates = space.templates();
  if (x.num_templates != templates.size()) {
    throw ContractViolation("sentence was encoded by a different feature space");
  }
  if (length_ == 0) return;

  // Label-only templates score the same at every position.
  std::vector<double> label_only(stride_ * labels_ * stride_, 0.0);
  auto scatter = [&](double* base, const FeatureEntry& e, double value) {
    Range p = range_of(e.labels.prev, labels_, stride_);
    Range c = range_of(e.labels.cur, labels_, labels_);
    Range n = range_of(e.labels.next, labels_, stride_);
    for (std::size_t a = p.begin; a < p.end; ++a)
      for (std::size_t b = c.begin; b < c.end; ++b)
        for (std::size_t d = n.begin; d < n.end; ++d)
          base[(a * labels_ + b) * stride_ + d] += value;
  };

  for (std::size_t t = 0; t < templates.size(); ++t) {
    if (!templates[t].observations.empty()) continue;
    for (const FeatureEntry& e : space.entries(t, x.observation(0, t))) {
      double v = w[e.id];
      if (v != 0.0) scatter(label_only.data(), e, v);
    }
  }

  const std::size_t block = label_only.size();
  for (std::size_t i = 0; i < length_; ++i) {
    double* base = table_.data() + i * block;
    std::copy(label_only.begin(), label_only.end(), base);
    for (std::size_t t = 0; t < templates.size(); ++t) {
      if (templates[t].observations.empty()) continue;
      for (const FeatureEntry& e : space.entries(t, x.observation(i, t))) {
        double v = w[e.id];
        if (v != 0.0) scatter(base, e, v);
      }
    }
  }
}

DecodeResult viterbi(const FeatureSpace& space, const WeightVector& w,
                     const EncodedSentence& x) {
  return viterbi(ChainFactors(space, w, x));
}

DecodeResult viterbi(const ChainFactors& f) {
  const std::size_t L = f.length();
  const std::size_t n = f.num_labels();
  const std::size_t S = n + 1;
  const std::size_t bos = f.boundary();
  const std::size_t eos = f.boundary();
  DecodeResult result;
  if (L == 0) return result;

  if (L == 1) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < n; ++b) {
      if (f(0, bos, b, eos) > f(0, bos, best, eos)) best = b;
    }
    result.labeling = {static_cast<LabelId>(best)};
    result.score = f(0, bos, best, eos);
    return result;
  }

  // Backward pass: value[a*n+b] is the best score of positions i..L-1 given
  // y[i-1] = a, y[i] = b. Scanning c upwards with a strict comparison keeps
  // the smallest next label among ties, which yields the lexicographically
  // smallest optimum when the labeling is rebuilt front to back.
  std::vector<double> value(S * n), next_value(S * n);
  std::vector<std::uint8_t> choice((L - 1) * S * n);
  for (std::size_t a = 0; a < S; ++a)
    for (std::size_t b = 0; b < n; ++b) value[a * n + b] = f(L - 1, a, b, eos);

  for (std::size_t i = L - 1; i-- > 0;) {
    std::swap(value, next_value);
    for (std::size_t a = 0; a < S; ++a) {
      if ((i == 0) != (a == bos)) continue;
      for (std::size_t b = 0; b < n; ++b) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < n; ++c) {
          double s = f(i, a, b, c) + next_value[b * n + c];
          if (s > best) {
            best = s;
            arg = c;
          }
        }
        value[a * n + b] = best;
        choice[(i * S + a) * n + b] = static_cast<std::uint8_t>(arg);
      }
    }
  }

  std::size_t y0 = 0;
  for (std::size_t b = 1; b < n; ++b) {
    if (value[bos * n + b] > value[bos * n + y0]) y0 = b;
  }
  result.score = value[bos * n + y0];
  result.labeling.resize(L);
  result.labeling[0] = static_cast<LabelId>(y0);
  std::size_t prev = bos, cur = y0;
  for (std::size_t i = 0; i + 1 < L; ++i) {
    std::size_t nxt = choice[(i * S + prev) * n + cur];
    result.labeling[i + 1] = static_cast<LabelId>(nxt);
    prev = cur;
    cur = nxt;
  }
  return result;
}

std::vector<DecodeResult> kbest(const FeatureSpace& space, const WeightVector& w,
                                const EncodedSentence& x, std::size_t k) {
  return kbest(ChainFactors(space, w, x), k);
}

namespace {

struct Hyp {
  double score;
  std::uint32_t label;  // next label (or y[0] at the root)
  std::uint32_t rank;   // rank within the successor state's list

  // Best first; ties by label then by rank, i.e. lexicographic order.
  bool operator<(const Hyp& o) const {
    if (score != o.score) return score > o.score;
    if (label != o.label) return label < o.label;
    return rank < o.rank;
  }
};

void keep_top(std::vector<Hyp>& hyps, std::size_t k) {
  if (hyps.size() > k) {
    std::partial_sort(hyps.begin(), hyps.begin() + static_cast<long>(k), hyps.end());
    hyps.resize(k);
  } else {
    std::sort(hyps.begin(), hyps.end());
  }
}

}  // namespace

std::vector<DecodeResult> kbest(const ChainFactors& f, std::size_t k) {
  if (k == 0) throw ContractViolation("kbest: K must be at least 1");
  const std::size_t L = f.length();
  const std::size_t n = f.num_labels();
  const std::size_t S = n + 1;
  const std::size_t bos = f.boundary();
  const std::size_t eos = f.boundary();
  std::vector<DecodeResult> out;
  if (L == 0) return out;

  if (L == 1) {
    std::vector<Hyp> root;
    for (std::size_t b = 0; b < n; ++b) {
      root.push_back({f(0, bos, b, eos), static_cast<std::uint32_t>(b), 0});
    }
    keep_top(root, k);
    for (const Hyp& h : root) out.push_back({{static_cast<LabelId>(h.label)}, h.score});
    return out;
  }

  // lists[i][a*n+b]: best completions of positions i..L-1 given
  // (y[i-1], y[i]) = (a, b), each pointing into lists[i+1][b*n+c].
  std::vector<std::vector<std::vector<Hyp>>> lists(L, std::vector<std::vector<Hyp>>(S * n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      lists[L - 1][a * n + b] = {{f(L - 1, a, b, eos), 0, 0}};

  std::vector<Hyp> cand;
  for (std::size_t i = L - 1; i-- > 0;) {
    for (std::size_t a = 0; a < S; ++a) {
      if ((i == 0) != (a == bos)) continue;
      for (std::size_t b = 0; b < n; ++b) {
        cand.clear();
        for (std::size_t c = 0; c < n; ++c) {
          double local = f(i, a, b, c);
          const auto& succ = lists[i + 1][b * n + c];
          for (std::size_t r = 0; r < succ.size(); ++r) {
            cand.push_back({local + succ[r].score, static_cast<std::uint32_t>(c),
                            static_cast<std::uint32_t>(r)});
          }
        }
        keep_top(cand, k);
        lists[i][a * n + b] = cand;
      }
    }
  }

  std::vector<Hyp> root;
  for (std::size_t b = 0; b < n; ++b) {
    const auto& l = lists[0][bos * n + b];
    for (std::size_t r = 0; r < l.size(); ++r) {
      root.push_back({l[r].score, static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(r)});
    }
  }
  keep_top(root, k);

  for (const Hyp& h : root) {
    DecodeResult res;
    res.score = h.score;
    res.labeling.resize(L);
    std::size_t prev = bos, cur = h.label, rank = h.rank;
    res.labeling[0] = static_cast<LabelId>(cur);
    for (std::size_t i = 0; i + 1 < L; ++i) {
      const Hyp& step = lists[i][prev * n + cur][rank];
      res.labeling[i + 1] = static_cast<LabelId>(step.label);
      prev = cur;
      cur = step.label;
      rank = step.rank;
    }
    out.push_back(std::move(res));
  }
  return out;
}

DecodeResult brute_force_argmax(const FeatureSpace& space, const WeightVector& w,
                                const EncodedSentence& x) {
  const std::size_t n = space.num_labels();
  const std::size_t L = x.length;
  double count = std::pow(static_cast<double>(n), static_cast<double>(L));
  if (count > static_cast<double>(kBruteForceLimit)) {
    throw GuardError("brute force over " + std::to_string(n) + "^" +
                     std::to_string(L) + " labelings exceeds the limit of " +
                     std::to_string(kBruteForceLimit));
  }
  DecodeResult best;
  LabelSequence y(L, 0);
  bool first = true;
  while (true) {
    double s = score(space, w, x, y);
    if (first || s > best.score) {
      best = {y, s};
      first = false;
    }
    // Odometer with position 0 most significant: lexicographic order.
    std::size_t i = L;
    while (i > 0) {
      --i;
      if (static_cast<std::size_t>(++y[i]) < n) break;
      y[i] = 0;
      if (i == 0) return best;
    }
    if (L == 0) return best;
  }
}

}  // namespace swvm
