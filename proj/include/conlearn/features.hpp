#pragma once

// Constraint features psi(x, y) and the positive/negative example generators
// used to train a constraint network on them.
//
// Sequence templates work on (token, POS, label) sequences. The pair templates
// work on entity-relation records and live in namespace er.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "conlearn/common.hpp"
#include "conlearn/rectifier_net.hpp"

namespace conlearn {

struct TaggedSequence {
  std::vector<std::string> tokens;
  std::vector<std::string> pos_tags;  // empty when unavailable
  std::vector<std::string> labels;

  std::size_t size() const { return tokens.size(); }
  bool has_pos() const { return !pos_tags.empty(); }

  void validate() const {
    if (tokens.empty()) throw Error("TaggedSequence: empty sequence");
    check_dim(tokens.size(), labels.size(), "TaggedSequence labels");
    if (has_pos()) check_dim(tokens.size(), pos_tags.size(), "TaggedSequence pos_tags");
  }

  bool operator==(const TaggedSequence&) const = default;
};

/// I-X may not follow O, B-Y or I-Y with Y != X. `prev` empty means the
/// sequence start, which behaves like O.
inline bool iob_transition_allowed(std::string_view prev, std::string_view next) {
  if (!next.starts_with("I-")) return true;
  const std::string_view type = next.substr(2);
  if (prev.starts_with("B-") || prev.starts_with("I-")) return prev.substr(2) == type;
  return false;
}

inline void validate_iob(std::span<const std::string> labels) {
  std::string_view prev;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!iob_transition_allowed(prev, labels[i]))
      throw Error("IOB violation at position " + std::to_string(i) + ": '" + std::string(prev) + "' -> '" +
                  labels[i] + "'");
    prev = labels[i];
  }
}

/// A token is punctuation iff it has no alphanumeric character. Bytes >= 0x80
/// (UTF-8 letters) count as alphanumeric.
inline bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  for (unsigned char c : token)
    if (c >= 0x80 || std::isalnum(c)) return false;
  return true;
}

/// Ordered set of symbols with a stable index.
class SymbolTable {
 public:
  SymbolTable() = default;
  explicit SymbolTable(std::vector<std::string> names, std::string kind = "symbol") : kind_(std::move(kind)) {
    for (auto& s : names) add(s);
  }

  std::size_t add(const std::string& name) {
    auto [it, inserted] = index_.try_emplace(name, names_.size());
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error("unknown " + kind_ + " '" + std::string(name) + "'");
  }

  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  bool operator==(const SymbolTable& o) const { return names_ == o.names_; }

 private:
  std::string kind_ = "symbol";
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LabelVocab {
  SymbolTable labels{{}, "label"};
  SymbolTable pos_values{{}, "POS tag"};

  LabelVocab() = default;
  LabelVocab(std::vector<std::string> label_names, std::vector<std::string> pos_names)
      : labels(std::move(label_names), "label"), pos_values(std::move(pos_names), "POS tag") {}

  /// Labels and POS tags in order of first appearance.
  static LabelVocab from_corpus(std::span<const TaggedSequence> corpus) {
    LabelVocab v;
    for (const auto& seq : corpus) {
      for (const auto& l : seq.labels) v.labels.add(l);
      for (const auto& p : seq.pos_tags) v.pos_values.add(p);
    }
    return v;
  }

  bool operator==(const LabelVocab&) const = default;
};

enum class TemplateKind { label_existence, label_counts, ngram_labels, pos_window, punctuation_window, pair_indicator };
enum class PairRole { source_relation, relation_target, relation_relation };
enum class Scope { global, local };

inline constexpr std::size_t kMaxTemplateDim = 4'000'000;

struct FeatureTemplate {
  TemplateKind kind = TemplateKind::label_existence;
  std::size_t n = 1;  // n-gram / window length
  PairRole role = PairRole::source_relation;

  static FeatureTemplate label_existence(std::size_t n = 1) { return {TemplateKind::label_existence, n}; }
  static FeatureTemplate label_counts() { return {TemplateKind::label_counts, 1}; }
  static FeatureTemplate ngram_labels(std::size_t n) { return {TemplateKind::ngram_labels, n}; }
  static FeatureTemplate pos_window(std::size_t n) { return {TemplateKind::pos_window, n}; }
  static FeatureTemplate punctuation_window(std::size_t n) { return {TemplateKind::punctuation_window, n}; }
  static FeatureTemplate pair_indicator(PairRole r) { return {TemplateKind::pair_indicator, 2, r}; }

  Scope scope() const {
    return (kind == TemplateKind::label_existence || kind == TemplateKind::label_counts) ? Scope::global
                                                                                          : Scope::local;
  }

  bool operator==(const FeatureTemplate&) const = default;
};

inline std::string to_string(TemplateKind k) {
  switch (k) {
    case TemplateKind::label_existence: return "label-existence";
    case TemplateKind::label_counts: return "label-counts";
    case TemplateKind::ngram_labels: return "ngram-labels";
    case TemplateKind::pos_window: return "pos-window";
    case TemplateKind::punctuation_window: return "punctuation-window";
    case TemplateKind::pair_indicator: return "pair-indicator";
  }
  return "?";
}

inline std::string to_string(PairRole r) {
  switch (r) {
    case PairRole::source_relation: return "source-relation";
    case PairRole::relation_target: return "relation-target";
    case PairRole::relation_relation: return "relation-relation";
  }
  return "?";
}

inline TemplateKind parse_template_kind(std::string_view s) {
  for (auto k : {TemplateKind::label_existence, TemplateKind::label_counts, TemplateKind::ngram_labels,
                 TemplateKind::pos_window, TemplateKind::punctuation_window, TemplateKind::pair_indicator})
    if (to_string(k) == s) return k;
  throw Error("unknown template kind '" + std::string(s) + "'");
}

inline PairRole parse_pair_role(std::string_view s) {
  for (auto r : {PairRole::source_relation, PairRole::relation_target, PairRole::relation_relation})
    if (to_string(r) == s) return r;
  throw Error("unknown pair role '" + std::string(s) + "'");
}

inline std::string template_name(const FeatureTemplate& t) {
  if (t.kind == TemplateKind::pair_indicator) return to_string(t.kind) + ":" + to_string(t.role);
  if (t.kind == TemplateKind::label_counts) return to_string(t.kind);
  return to_string(t.kind) + ":" + std::to_string(t.n);
}

namespace er {

inline const std::vector<std::string>& entity_labels() {
  static const std::vector<std::string> v{"NoEnt", "Person", "Location", "Organization"};
  return v;
}
inline const std::vector<std::string>& relation_labels() {
  static const std::vector<std::string> v{"NoRel", "Kill", "LiveIn", "WorkFor", "LocatedAt", "OrgBasedIn"};
  return v;
}

/// One directed entity pair: labels of both entities and of both relations.
struct RelationRecord {
  std::string source;
  std::string relation;
  std::string target;
  std::string reverse_relation;
};

/// Sizes of the first and second one-hot block for a role.
inline std::pair<std::size_t, std::size_t> pair_blocks(PairRole role) {
  const std::size_t ne = entity_labels().size(), nr = relation_labels().size();
  switch (role) {
    case PairRole::source_relation: return {ne, nr};
    case PairRole::relation_target: return {nr, ne};
    case PairRole::relation_relation: return {nr, nr};
  }
  return {0, 0};
}

}  // namespace er

inline std::size_t checked_power(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > kMaxTemplateDim / base) throw Error("template dimension too large");
    r *= base;
  }
  return r;
}

inline std::size_t template_dim(const FeatureTemplate& t, const LabelVocab& vocab) {
  const std::size_t nl = vocab.labels.size();
  switch (t.kind) {
    case TemplateKind::label_existence:
    case TemplateKind::ngram_labels: return checked_power(nl, t.n);
    case TemplateKind::label_counts: return nl;
    case TemplateKind::pos_window: return t.n * (vocab.pos_values.size() + nl);
    case TemplateKind::punctuation_window: return t.n * (1 + nl);
    case TemplateKind::pair_indicator: {
      auto [a, b] = er::pair_blocks(t.role);
      return a + b;
    }
  }
  return 0;
}

inline void validate_template(const FeatureTemplate& t) {
  if (t.n == 0) throw Error("template " + to_string(t.kind) + ": n must be >= 1");
}

inline constexpr std::size_t kUnknownSymbol = std::numeric_limits<std::size_t>::max();

/// Sequence with symbols replaced by vocabulary indices. Unknown POS tags are
/// kUnknownSymbol when indexed leniently.
struct IndexedSequence {
  std::vector<std::size_t> labels;
  std::vector<std::size_t> pos;
  std::vector<std::uint8_t> punct;

  std::size_t size() const { return punct.size(); }
};

/// Token-side context only (POS, punctuation); labels left empty.
inline IndexedSequence index_context(const TaggedSequence& seq, const LabelVocab& vocab, bool strict) {
  IndexedSequence out;
  out.punct.reserve(seq.size());
  for (const auto& tok : seq.tokens) out.punct.push_back(is_punctuation(tok) ? 1 : 0);
  if (seq.has_pos()) {
    out.pos.reserve(seq.size());
    for (const auto& p : seq.pos_tags) {
      if (strict) out.pos.push_back(vocab.pos_values.index(p));
      else out.pos.push_back(vocab.pos_values.find(p).value_or(kUnknownSymbol));
    }
  }
  return out;
}

inline IndexedSequence index_sequence(const TaggedSequence& seq, const LabelVocab& vocab) {
  seq.validate();
  IndexedSequence out = index_context(seq, vocab, true);
  out.labels.reserve(seq.size());
  for (const auto& l : seq.labels) out.labels.push_back(vocab.labels.index(l));
  return out;
}

namespace detail {

inline std::size_t ngram_index(std::span<const std::size_t> labels, std::size_t nl) {
  std::size_t idx = 0;
  for (std::size_t l : labels) idx = idx * nl + l;
  return idx;
}

}  // namespace detail

/// Feature vector of a global template over a complete label sequence.
inline Vector encode_global(const FeatureTemplate& t, std::span<const std::size_t> labels, const LabelVocab& vocab) {
  const std::size_t nl = vocab.labels.size();
  Vector v(template_dim(t, vocab), 0.0);
  if (t.kind == TemplateKind::label_counts) {
    for (std::size_t l : labels) v[l] += 1.0;
  } else if (t.kind == TemplateKind::label_existence) {
    for (std::size_t i = 0; i + t.n <= labels.size(); ++i) v[detail::ngram_index(labels.subspan(i, t.n), nl)] = 1.0;
  } else {
    throw Error("encode_global: template " + template_name(t) + " is local");
  }
  return v;
}

/// Feature vector of a local template for the window of length t.n ending at
/// position `end` (inclusive). `labels` may be a prefix shorter than the
/// sentence. Returns nullopt when the window touches an unknown POS tag.
inline std::optional<Vector> encode_window(const FeatureTemplate& t, const IndexedSequence& ctx,
                                           std::span<const std::size_t> labels, std::size_t end,
                                           const LabelVocab& vocab) {
  const std::size_t n = t.n, nl = vocab.labels.size();
  if (end + 1 < n || end >= labels.size()) throw Error("encode_window: window out of range");
  const std::size_t begin = end + 1 - n;
  const auto window = labels.subspan(begin, n);
  Vector v(template_dim(t, vocab), 0.0);
  switch (t.kind) {
    case TemplateKind::ngram_labels:
      v[detail::ngram_index(window, nl)] = 1.0;
      return v;
    case TemplateKind::pos_window: {
      if (ctx.pos.empty()) throw Error("template pos-window requires POS tags");
      const std::size_t np = vocab.pos_values.size();
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t p = ctx.pos[begin + j];
        if (p == kUnknownSymbol) return std::nullopt;
        v[j * np + p] = 1.0;
        v[n * np + j * nl + window[j]] = 1.0;
      }
      return v;
    }
    case TemplateKind::punctuation_window:
      for (std::size_t j = 0; j < n; ++j) {
        v[j] = ctx.punct[begin + j] ? 1.0 : 0.0;
        v[n + j * nl + window[j]] = 1.0;
      }
      return v;
    default: throw Error("encode_window: template " + template_name(t) + " is not a sequence window");
  }
}

/// psi(x, y) for one sequence: one vector for global templates, one per
/// window (length - n + 1 of them) for local ones.
inline std::vector<Vector> extract(const FeatureTemplate& t, const TaggedSequence& seq, const LabelVocab& vocab) {
  validate_template(t);
  if (t.kind == TemplateKind::pair_indicator)
    throw Error("template pair-indicator applies to entity-relation records, not sequences");
  if (t.kind == TemplateKind::pos_window && !seq.has_pos()) throw Error("template pos-window requires POS tags");
  const IndexedSequence idx = index_sequence(seq, vocab);
  std::vector<Vector> out;
  if (t.scope() == Scope::global) {
    out.push_back(encode_global(t, idx.labels, vocab));
    return out;
  }
  for (std::size_t end = t.n - 1; end < idx.size(); ++end) out.push_back(*encode_window(t, idx, idx.labels, end, vocab));
  return out;
}

struct GeneratedDataset {
  std::vector<LabeledFeatureExample> positives;
  std::vector<LabeledFeatureExample> negatives;
  std::optional<FeatureTemplate> feature_template;  // unset for identity features
  std::size_t dim = 0;

  std::vector<LabeledFeatureExample> all() const {
    std::vector<LabeledFeatureExample> v = positives;
    v.insert(v.end(), negatives.begin(), negatives.end());
    return v;
  }
};

/// Deduplicated extract() outputs over the corpus, in first-seen order.
inline std::vector<LabeledFeatureExample> build_positive_set(const FeatureTemplate& t,
                                                             std::span<const TaggedSequence> corpus,
                                                             const LabelVocab& vocab) {
  if (corpus.empty()) throw Error("build_positive_set: empty corpus");
  std::set<Vector> seen;
  std::vector<LabeledFeatureExample> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::vector<Vector> vs;
    try {
      vs = extract(t, corpus[i], vocab);
    } catch (const Error& e) {
      throw Error("sequence " + std::to_string(i) + ": " + e.what());
    }
    for (auto& v : vs)
      if (seen.insert(v).second) out.push_back({std::move(v), 1});
  }
  return out;
}

enum class WindowNegativeScheme {
  /// Unseen windows whose token-side tuple and label tuple were both seen.
  enumerate_seen_parts,
  /// Change one randomly chosen label of a positive window to a random other label.
  random_label_perturbation,
};

struct NegativeOptions {
  std::size_t cap = 50'000;
  std::size_t perturb_attempts = 10;
  WindowNegativeScheme window_scheme = WindowNegativeScheme::enumerate_seen_parts;
};

namespace detail {

class NegativeCollector {
 public:
  explicit NegativeCollector(std::span<const LabeledFeatureExample> positives) {
    for (const auto& p : positives) positives_.insert(p.psi);
  }
  bool is_positive(const Vector& v) const { return positives_.count(v) != 0; }
  bool offer(Vector v) {
    if (is_positive(v) || !emitted_.insert(v).second) return false;
    out_.push_back({std::move(v), -1});
    return true;
  }
  std::vector<LabeledFeatureExample>& result() { return out_; }

 private:
  std::set<Vector> positives_;
  std::set<Vector> emitted_;
  std::vector<LabeledFeatureExample> out_;
};

// Seeded uniform subsample that keeps the original relative order.
inline void cap_negatives(std::vector<LabeledFeatureExample>& v, std::size_t cap, Rng& rng) {
  if (v.size() <= cap) return;
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  std::vector<LabeledFeatureExample> kept;
  kept.reserve(cap);
  for (std::size_t i : idx) kept.push_back(std::move(v[i]));
  v = std::move(kept);
}

inline std::size_t hot_index(std::span<const double> block) {
  for (std::size_t i = 0; i < block.size(); ++i)
    if (block[i] != 0.0) return i;
  throw Error("malformed one-hot block");
}

}  // namespace detail

/// Negative examples for a sequence template. Every scheme emits vectors that
/// are absent from `positives`, without duplicates:
///   label-existence: flip one bit of each positive;
///   label-counts: relabel one random position of a training sequence;
///   ngram-labels: enumerate unseen n-grams (n >= 3: one contained bigram seen);
///   pos/punctuation windows: see WindowNegativeScheme;
///   pair-indicator: every unseen (a, b) pair.
inline std::vector<LabeledFeatureExample> generate_negatives(const FeatureTemplate& t,
                                                             std::span<const TaggedSequence> corpus,
                                                             const LabelVocab& vocab,
                                                             std::span<const LabeledFeatureExample> positives,
                                                             std::uint64_t seed, const NegativeOptions& options = {}) {
  validate_template(t);
  Rng rng(seed);
  detail::NegativeCollector col(positives);
  const std::size_t nl = vocab.labels.size();
  const std::size_t dim = template_dim(t, vocab);

  std::vector<IndexedSequence> indexed;
  if (t.kind != TemplateKind::pair_indicator) {
    indexed.reserve(corpus.size());
    for (const auto& s : corpus) indexed.push_back(index_sequence(s, vocab));
  }

  switch (t.kind) {
    case TemplateKind::label_existence:
      for (const auto& p : positives) {
        for (std::size_t j = 0; j < p.psi.size(); ++j) {
          Vector v = p.psi;
          v[j] = v[j] != 0.0 ? 0.0 : 1.0;
          col.offer(std::move(v));
        }
      }
      break;

    case TemplateKind::label_counts:
      if (nl < 2) break;
      for (const auto& seq : indexed) {
        for (std::size_t attempt = 0; attempt < options.perturb_attempts; ++attempt) {
          std::vector<std::size_t> labels = seq.labels;
          const std::size_t pos = rng.below(labels.size());
          std::size_t repl = rng.below(nl - 1);
          if (repl >= labels[pos]) ++repl;
          labels[pos] = repl;
          if (col.offer(encode_global(t, labels, vocab))) break;
        }
      }
      break;

    case TemplateKind::ngram_labels: {
      std::set<std::pair<std::size_t, std::size_t>> bigrams;
      for (const auto& s : indexed)
        for (std::size_t i = 0; i + 1 < s.size(); ++i) bigrams.emplace(s.labels[i], s.labels[i + 1]);
      std::vector<std::size_t> tuple(t.n, 0);
      for (std::size_t code = 0; code < dim; ++code) {
        std::size_t c = code;
        for (std::size_t j = t.n; j-- > 0;) {
          tuple[j] = c % nl;
          c /= nl;
        }
        if (t.n >= 3) {
          bool near_feasible = false;
          for (std::size_t j = 0; j + 1 < t.n && !near_feasible; ++j)
            near_feasible = bigrams.count({tuple[j], tuple[j + 1]}) != 0;
          if (!near_feasible) continue;
        }
        Vector v(dim, 0.0);
        v[code] = 1.0;
        col.offer(std::move(v));
      }
      break;
    }

    case TemplateKind::pos_window:
    case TemplateKind::punctuation_window: {
      const bool pos = t.kind == TemplateKind::pos_window;
      const std::size_t side = pos ? vocab.pos_values.size() : 1;  // token-side block width
      if (options.window_scheme == WindowNegativeScheme::random_label_perturbation) {
        if (nl < 2) break;
        for (const auto& p : positives) {
          for (std::size_t attempt = 0; attempt < options.perturb_attempts; ++attempt) {
            Vector v = p.psi;
            const std::size_t j = rng.below(t.n);
            const std::size_t off = t.n * side + j * nl;
            const std::size_t cur = detail::hot_index(std::span<const double>(v).subspan(off, nl));
            std::size_t repl = rng.below(nl - 1);
            if (repl >= cur) ++repl;
            v[off + cur] = 0.0;
            v[off + repl] = 1.0;
            if (col.offer(std::move(v))) break;
          }
        }
        break;
      }
      std::set<std::vector<std::size_t>> token_tuples, label_tuples;
      for (const auto& s : indexed) {
        if (pos && s.pos.empty()) throw Error("template pos-window requires POS tags");
        for (std::size_t end = t.n - 1; end < s.size(); ++end) {
          const std::size_t begin = end + 1 - t.n;
          std::vector<std::size_t> tok(t.n), lab(t.n);
          for (std::size_t j = 0; j < t.n; ++j) {
            tok[j] = pos ? s.pos[begin + j] : s.punct[begin + j];
            lab[j] = s.labels[begin + j];
          }
          token_tuples.insert(std::move(tok));
          label_tuples.insert(std::move(lab));
        }
      }
      for (const auto& tok : token_tuples) {
        for (const auto& lab : label_tuples) {
          Vector v(dim, 0.0);
          for (std::size_t j = 0; j < t.n; ++j) {
            if (pos) v[j * side + tok[j]] = 1.0;
            else v[j] = static_cast<double>(tok[j]);
            v[t.n * side + j * nl + lab[j]] = 1.0;
          }
          col.offer(std::move(v));
        }
      }
      break;
    }

    case TemplateKind::pair_indicator: {
      auto [a, b] = er::pair_blocks(t.role);
      for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j) {
          Vector v(a + b, 0.0);
          v[i] = 1.0;
          v[a + j] = 1.0;
          col.offer(std::move(v));
        }
      break;
    }
  }

  auto& out = col.result();
  if (out.empty()) throw Error("degenerate template on corpus: " + template_name(t) + " produced no negatives");
  detail::cap_negatives(out, options.cap, rng);
  return std::move(out);
}

/// Positives and negatives for a sequence template in one call.
inline GeneratedDataset make_dataset(const FeatureTemplate& t, std::span<const TaggedSequence> corpus,
                                     const LabelVocab& vocab, std::uint64_t seed, const NegativeOptions& options = {}) {
  GeneratedDataset ds;
  ds.feature_template = t;
  ds.dim = template_dim(t, vocab);
  ds.positives = build_positive_set(t, corpus, vocab);
  ds.negatives = generate_negatives(t, corpus, vocab, ds.positives, seed, options);
  return ds;
}

namespace er {

/// Concatenated one-hots of the two labels, in the role's block order.
inline Vector encode_pair(PairRole role, std::string_view first, std::string_view second) {
  static const SymbolTable entities(entity_labels(), "entity label");
  static const SymbolTable relations(relation_labels(), "relation label");
  const SymbolTable& a = role == PairRole::source_relation ? entities : relations;
  const SymbolTable& b = role == PairRole::relation_target ? entities : relations;
  Vector v(a.size() + b.size(), 0.0);
  v[a.index(first)] = 1.0;
  v[a.size() + b.index(second)] = 1.0;
  return v;
}

/// The two (first, second) label pairs a record contributes under a role: one
/// per direction of the entity pair.
inline std::vector<std::pair<std::string, std::string>> record_pairs(const RelationRecord& r, PairRole role) {
  switch (role) {
    case PairRole::source_relation: return {{r.source, r.relation}, {r.target, r.reverse_relation}};
    case PairRole::relation_target: return {{r.relation, r.target}, {r.reverse_relation, r.source}};
    case PairRole::relation_relation: return {{r.relation, r.reverse_relation}, {r.reverse_relation, r.relation}};
  }
  return {};
}

}  // namespace er

/// Positives from observed entity-relation pairs, negatives from every pair
/// never observed.
inline GeneratedDataset pair_indicator_examples(std::span<const er::RelationRecord> records, PairRole role) {
  GeneratedDataset ds;
  ds.feature_template = FeatureTemplate::pair_indicator(role);
  auto [a, b] = er::pair_blocks(role);
  ds.dim = a + b;
  std::set<Vector> seen;
  for (const auto& r : records)
    for (const auto& [x, y] : er::record_pairs(r, role)) {
      Vector v = er::encode_pair(role, x, y);
      if (seen.insert(v).second) ds.positives.push_back({std::move(v), 1});
    }
  ds.negatives =
      generate_negatives(*ds.feature_template, {}, LabelVocab{}, ds.positives, 0, NegativeOptions{SIZE_MAX});
  return ds;
}

}  // namespace conlearn
