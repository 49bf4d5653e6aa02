#pragma once

// First-order Markov labeling: exact Viterbi, constraint-filtered beam search,
// a small discriminative trainer, and the score-matrix file format used to
// ingest emissions produced by an external model.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "conlearn/common.hpp"
#include "conlearn/constraint_system.hpp"
#include "conlearn/features.hpp"

namespace conlearn {

/// Emission scores for one sentence, T x L.
struct ScoreMatrix {
  Matrix emissions;

  std::size_t length() const { return emissions.rows(); }
  std::size_t label_count() const { return emissions.cols(); }

  bool operator==(const ScoreMatrix&) const = default;
};

struct SequenceModel {
  std::vector<std::string> labels;
  Matrix transitions;  // [from][to]
  Vector start;
  std::map<std::string, Vector> emission_weights;  // token feature -> per-label weight

  std::size_t label_count() const { return labels.size(); }

  static SequenceModel zeros(std::vector<std::string> labels) {
    SequenceModel m;
    const std::size_t L = labels.size();
    m.labels = std::move(labels);
    m.transitions = Matrix(L, L);
    m.start.assign(L, 0.0);
    return m;
  }

  void validate() const {
    const std::size_t L = labels.size();
    if (L == 0) throw Error("SequenceModel: no labels");
    check_dim(L, transitions.rows(), "SequenceModel transitions");
    check_dim(L, transitions.cols(), "SequenceModel transitions");
    check_dim(L, start.size(), "SequenceModel start");
    if (!all_finite(transitions.data()) || !all_finite(start)) throw Error("SequenceModel: non-finite score");
    for (const auto& [f, w] : emission_weights) {
      check_dim(L, w.size(), "SequenceModel emission weights");
      if (!all_finite(w)) throw Error("SequenceModel: non-finite weight for feature '" + f + "'");
    }
  }

  bool operator==(const SequenceModel&) const = default;
};

/// Token features of the built-in emission model.
inline std::vector<std::string> token_features(std::string_view token) {
  std::string lower(token);
  for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  std::vector<std::string> f;
  f.push_back("bias");
  f.push_back("w=" + std::string(token));
  f.push_back("lw=" + lower);
  f.push_back("p3=" + lower.substr(0, 3));
  f.push_back("s3=" + (lower.size() > 3 ? lower.substr(lower.size() - 3) : lower));
  if (std::any_of(token.begin(), token.end(), [](unsigned char c) { return std::isdigit(c); })) f.push_back("digit");
  if (is_punctuation(token)) f.push_back("punct");
  return f;
}

inline ScoreMatrix emission_scores(const SequenceModel& model, std::span<const std::string> tokens) {
  const std::size_t L = model.label_count();
  ScoreMatrix s{Matrix(tokens.size(), L)};
  for (std::size_t t = 0; t < tokens.size(); ++t)
    for (const auto& f : token_features(tokens[t])) {
      auto it = model.emission_weights.find(f);
      if (it == model.emission_weights.end()) continue;
      for (std::size_t l = 0; l < L; ++l) s.emissions(t, l) += it->second[l];
    }
  return s;
}

namespace detail {

inline void check_scores(const SequenceModel& model, const ScoreMatrix& scores) {
  check_dim(model.label_count(), scores.label_count(), "score matrix label count");
  if (scores.length() == 0) throw Error("empty sentence");
}

}  // namespace detail

inline double path_score(const SequenceModel& model, const ScoreMatrix& scores, std::span<const std::size_t> path) {
  detail::check_scores(model, scores);
  check_dim(scores.length(), path.size(), "path_score");
  double s = model.start[path[0]] + scores.emissions(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t) s += model.transitions(path[t - 1], path[t]) + scores.emissions(t, path[t]);
  return s;
}

/// Exact argmax. Ties go to the lower label index, both at backpointers and
/// at the final position.
inline std::vector<std::size_t> viterbi(const SequenceModel& model, const ScoreMatrix& scores) {
  detail::check_scores(model, scores);
  const std::size_t T = scores.length(), L = model.label_count();
  Matrix delta(T, L);
  std::vector<std::size_t> back(T * L, 0);
  for (std::size_t l = 0; l < L; ++l) delta(0, l) = model.start[l] + scores.emissions(0, l);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t l = 0; l < L; ++l) {
      std::size_t arg = 0;
      double best = delta(t - 1, 0) + model.transitions(0, l);
      for (std::size_t p = 1; p < L; ++p) {
        const double v = delta(t - 1, p) + model.transitions(p, l);
        if (v > best) best = v, arg = p;
      }
      delta(t, l) = best + scores.emissions(t, l);
      back[t * L + l] = arg;
    }
  std::vector<std::size_t> path(T);
  std::size_t arg = 0;
  for (std::size_t l = 1; l < L; ++l)
    if (delta(T - 1, l) > delta(T - 1, arg)) arg = l;
  path[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = back[t * L + path[t]];
  return path;
}

inline std::vector<std::size_t> viterbi(const SequenceModel& model, std::span<const std::string> tokens) {
  return viterbi(model, emission_scores(model, tokens));
}

// ---- beam search ----------------------------------------------------------

/// A learned system together with the template and vocabulary its features
/// were built with.
struct SequenceConstraint {
  ConstraintSystem system;
  FeatureTemplate feature_template;
  LabelVocab vocab;
};

struct BeamState {
  std::vector<std::size_t> prefix;
  double score = 0.0;
  bool alive = true;  // passed every local check so far
};

struct DecodeOptions {
  std::size_t beam_width = 50;
  bool fallback = true;
  bool rerank = false;  // order violating states last instead of removing them
  bool verify_scores = false;
};

enum class DecodeStatus {
  satisfied,  // output passed every system
  restored,   // some step had no surviving candidate and was restored unpruned
  fallback,   // nothing survived; output is the unconstrained beam's best
  infeasible  // nothing survived and fallback is off; labels empty
};

inline std::string to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::satisfied: return "satisfied";
    case DecodeStatus::restored: return "restored";
    case DecodeStatus::fallback: return "fallback";
    case DecodeStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct DecodeResult {
  std::vector<std::size_t> labels;
  double score = 0.0;
  DecodeStatus status = DecodeStatus::infeasible;
  std::vector<std::size_t> restored_steps;  // positions where pruning was undone
};

namespace detail {

// A system bound to one sentence: model labels mapped into the system's
// vocabulary and the token context indexed against it.
struct BoundConstraint {
  const SequenceConstraint* source;
  std::vector<std::size_t> label_map;
  IndexedSequence context;
  bool global;
};

inline std::vector<BoundConstraint> bind_constraints(const SequenceModel& model, const TaggedSequence& sentence,
                                                     std::span<const SequenceConstraint> systems) {
  std::vector<BoundConstraint> out;
  for (const auto& sc : systems) {
    validate_template(sc.feature_template);
    const auto& t = sc.feature_template;
    if (t.kind == TemplateKind::pair_indicator)
      throw Error("template pair-indicator cannot constrain a label sequence");
    check_dim(template_dim(t, sc.vocab), sc.system.input_dim, ("system for " + template_name(t)).c_str());
    if (t.kind == TemplateKind::pos_window && !sentence.has_pos())
      throw Error("template pos-window requires POS tags");
    BoundConstraint b{&sc, {}, index_context(sentence, sc.vocab, false), t.scope() == Scope::global};
    for (const auto& name : model.labels) b.label_map.push_back(sc.vocab.labels.index(name));
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<std::size_t> map_labels(const BoundConstraint& b, std::span<const std::size_t> prefix) {
  std::vector<std::size_t> out(prefix.size());
  for (std::size_t i = 0; i < prefix.size(); ++i) out[i] = b.label_map[prefix[i]];
  return out;
}

// Windows touching an unknown POS tag are not checked.
inline bool passes_local(const std::vector<BoundConstraint>& bound, std::span<const std::size_t> prefix) {
  const std::size_t end = prefix.size() - 1;
  for (const auto& b : bound) {
    if (b.global || prefix.size() < b.source->feature_template.n) continue;
    const auto mapped = map_labels(b, prefix);
    const auto psi = encode_window(b.source->feature_template, b.context, mapped, end, b.source->vocab);
    if (psi && !is_feasible(b.source->system, *psi)) return false;
  }
  return true;
}

inline bool passes_global(const std::vector<BoundConstraint>& bound, std::span<const std::size_t> labels) {
  for (const auto& b : bound) {
    if (!b.global) continue;
    if (!is_feasible(b.source->system, encode_global(b.source->feature_template, map_labels(b, labels), b.source->vocab)))
      return false;
  }
  return true;
}

// Higher score first, then lexicographically smaller prefix; with `alive_first`
// surviving states precede violating ones.
inline void rank_states(std::vector<BeamState>& states, bool alive_first) {
  std::sort(states.begin(), states.end(), [&](const BeamState& a, const BeamState& b) {
    if (alive_first && a.alive != b.alive) return a.alive;
    if (a.score != b.score) return a.score > b.score;
    return a.prefix < b.prefix;
  });
}

inline void verify_state(const SequenceModel& model, const ScoreMatrix& scores, const BeamState& s) {
  double ref = model.start[s.prefix[0]] + scores.emissions(0, s.prefix[0]);
  for (std::size_t t = 1; t < s.prefix.size(); ++t)
    ref += model.transitions(s.prefix[t - 1], s.prefix[t]) + scores.emissions(t, s.prefix[t]);
  if (std::abs(ref - s.score) > 1e-9 * std::max(1.0, std::abs(ref)))
    throw Error("beam state score drifted from model score at length " + std::to_string(s.prefix.size()));
}

inline DecodeResult run_beam(const SequenceModel& model, const ScoreMatrix& scores,
                             const std::vector<BoundConstraint>& bound, const DecodeOptions& opt) {
  const std::size_t T = scores.length(), L = model.label_count();
  std::vector<BeamState> beam{BeamState{}};
  DecodeResult res;
  std::vector<BeamState> cand;
  for (std::size_t t = 0; t < T; ++t) {
    cand.clear();
    for (const auto& s : beam)
      for (std::size_t l = 0; l < L; ++l) {
        BeamState n{s.prefix, s.score, s.alive};
        n.score += (t == 0 ? model.start[l] : model.transitions(s.prefix.back(), l)) + scores.emissions(t, l);
        n.prefix.push_back(l);
        if (n.alive && !passes_local(bound, n.prefix)) n.alive = false;
        cand.push_back(std::move(n));
      }
    if (!opt.rerank) {
      std::vector<BeamState> kept;
      for (auto& c : cand)
        if (c.alive) kept.push_back(std::move(c));
      if (kept.empty()) {
        if (!opt.fallback) return res;
        // Restore this step's candidates; later windows are still checked.
        res.restored_steps.push_back(t);
        for (auto& c : cand) c.alive = true;
      } else {
        cand = std::move(kept);
      }
    }
    rank_states(cand, opt.rerank);
    if (cand.size() > opt.beam_width) cand.resize(opt.beam_width);
    if (opt.verify_scores)
      for (const auto& s : cand) verify_state(model, scores, s);
    beam = std::move(cand);
    cand = {};
  }
  for (auto& s : beam)
    if (s.alive && !passes_global(bound, s.prefix)) s.alive = false;
  rank_states(beam, true);
  const BeamState& top = beam.front();
  if (!top.alive) return res;
  res.labels = top.prefix;
  res.score = top.score;
  res.status = res.restored_steps.empty() ? DecodeStatus::satisfied : DecodeStatus::restored;
  return res;
}

}  // namespace detail

/// Beam search over label prefixes. Local systems (n-gram and window
/// templates) check each window as soon as its last position is labeled;
/// global systems (existence, counts) check complete sequences only.
inline DecodeResult beam_decode(const SequenceModel& model, const ScoreMatrix& scores, const TaggedSequence& sentence,
                                std::span<const SequenceConstraint> systems, const DecodeOptions& opt) {
  if (opt.beam_width < 1) throw Error("beam_width must be >= 1");
  detail::check_scores(model, scores);
  check_dim(scores.length(), sentence.size(), "beam_decode sentence length");
  const auto bound = detail::bind_constraints(model, sentence, systems);
  DecodeResult res = detail::run_beam(model, scores, bound, opt);
  if (res.status != DecodeStatus::infeasible || !opt.fallback) return res;
  DecodeResult plain = detail::run_beam(model, scores, {}, opt);
  plain.status = DecodeStatus::fallback;
  plain.restored_steps = std::move(res.restored_steps);
  return plain;
}

/// Unconstrained beam search.
inline DecodeResult beam_decode(const SequenceModel& model, const ScoreMatrix& scores, std::size_t beam_width) {
  if (beam_width < 1) throw Error("beam_width must be >= 1");
  detail::check_scores(model, scores);
  DecodeOptions opt;
  opt.beam_width = beam_width;
  return detail::run_beam(model, scores, {}, opt);
}

// ---- training ---------------------------------------------------------------

enum class MarkovTrainMode { structured_hinge, averaged_perceptron };

inline std::string to_string(MarkovTrainMode m) {
  return m == MarkovTrainMode::structured_hinge ? "structured-hinge" : "averaged-perceptron";
}

inline MarkovTrainMode parse_train_mode(std::string_view s) {
  if (s == "structured-hinge") return MarkovTrainMode::structured_hinge;
  if (s == "averaged-perceptron") return MarkovTrainMode::averaged_perceptron;
  throw Error("unknown training mode '" + std::string(s) + "'");
}

struct MarkovTrainConfig {
  double trade_off = 0.0;  // L2 coefficient; 0 = unregularized
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  MarkovTrainMode mode = MarkovTrainMode::structured_hinge;
  double learning_rate = 0.1;

  void validate() const {
    if (!(trade_off >= 0.0) || !std::isfinite(trade_off)) throw Error("trade_off must be finite and >= 0");
    if (epochs < 1) throw Error("epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw Error("learning_rate must be positive");
  }
};

namespace detail {

// Dense parameter layout: emission block (F x L), transitions (L x L), start (L).
class MarkovParams {
 public:
  MarkovParams(std::size_t features, std::size_t labels)
      : F_(features), L_(labels), w_(features * labels + labels * labels + labels, 0.0) {}

  std::size_t emission(std::size_t f, std::size_t l) const { return f * L_ + l; }
  std::size_t transition(std::size_t a, std::size_t b) const { return F_ * L_ + a * L_ + b; }
  std::size_t start(std::size_t l) const { return F_ * L_ + L_ * L_ + l; }

  Vector& weights() { return w_; }
  const Vector& weights() const { return w_; }

  SequenceModel model(const std::vector<std::string>& labels, const Vector& w) const {
    SequenceModel m = SequenceModel::zeros(labels);
    for (std::size_t a = 0; a < L_; ++a) {
      m.start[a] = w[start(a)];
      for (std::size_t b = 0; b < L_; ++b) m.transitions(a, b) = w[transition(a, b)];
    }
    return m;
  }

 private:
  std::size_t F_, L_;
  Vector w_;
};

struct IndexedTraining {
  std::vector<std::vector<std::size_t>> features;  // per token
  std::vector<std::size_t> gold;
};

inline ScoreMatrix scores_of(const MarkovParams& p, const Vector& w, const IndexedTraining& s, std::size_t L) {
  ScoreMatrix sm{Matrix(s.gold.size(), L)};
  for (std::size_t t = 0; t < s.gold.size(); ++t)
    for (std::size_t f : s.features[t])
      for (std::size_t l = 0; l < L; ++l) sm.emissions(t, l) += w[p.emission(f, l)];
  return sm;
}

// Adds scale * phi(path) into g.
inline void add_phi(const MarkovParams& p, const IndexedTraining& s, std::span<const std::size_t> path, double scale,
                    Vector& g) {
  g[p.start(path[0])] += scale;
  for (std::size_t t = 0; t < path.size(); ++t) {
    for (std::size_t f : s.features[t]) g[p.emission(f, path[t])] += scale;
    if (t > 0) g[p.transition(path[t - 1], path[t])] += scale;
  }
}

}  // namespace detail

/// Hamming-cost loss-augmented decoding: argmax of score(y) + #{t: y_t != gold_t}.
inline std::vector<std::size_t> loss_augmented_viterbi(const SequenceModel& model, ScoreMatrix scores,
                                                       std::span<const std::size_t> gold) {
  check_dim(scores.length(), gold.size(), "loss_augmented_viterbi");
  for (std::size_t t = 0; t < gold.size(); ++t)
    for (std::size_t l = 0; l < scores.label_count(); ++l)
      if (l != gold[t]) scores.emissions(t, l) += 1.0;
  return viterbi(model, scores);
}

/// Structured hinge: stochastic subgradient on
///   trade_off/2 ||w||^2 + max_y [score(y) + hamming(y, gold)] - score(gold)
/// with step eta_t = eta_0 / (1 + eta_0 * trade_off * t).
/// Averaged perceptron: Viterbi updates, returning the average of all iterates.
inline SequenceModel train_markov(std::span<const TaggedSequence> corpus, const MarkovTrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw Error("train_markov: empty corpus");
  SymbolTable labels({}, "label"), feats({}, "feature");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      corpus[i].validate();
    } catch (const Error& e) {
      throw Error("sequence " + std::to_string(i) + ": " + e.what());
    }
    for (const auto& l : corpus[i].labels) labels.add(l);
  }
  const std::size_t L = labels.size();
  std::vector<detail::IndexedTraining> data;
  for (const auto& seq : corpus) {
    detail::IndexedTraining s;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      std::vector<std::size_t> fs;
      for (const auto& f : token_features(seq.tokens[t])) fs.push_back(feats.add(f));
      s.features.push_back(std::move(fs));
      s.gold.push_back(labels.index(seq.labels[t]));
    }
    data.push_back(std::move(s));
  }
  detail::MarkovParams params(feats.size(), L);
  Vector& w = params.weights();
  Vector sum(w.size(), 0.0);  // perceptron: running sum of iterates
  Vector g(w.size(), 0.0);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);
  std::uint64_t step = 0;
  const bool hinge = config.mode == MarkovTrainMode::structured_hinge;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const auto& s = data[idx];
      const SequenceModel m = params.model(labels.names(), w);
      ScoreMatrix sm = detail::scores_of(params, w, s, L);
      const auto pred = hinge ? loss_augmented_viterbi(m, std::move(sm), s.gold) : viterbi(m, sm);
      const double eta = hinge ? config.learning_rate / (1.0 + config.learning_rate * config.trade_off * step) : 1.0;
      if (hinge && config.trade_off > 0.0)
        for (double& x : w) x *= 1.0 - eta * config.trade_off;
      if (pred != s.gold) {
        std::fill(g.begin(), g.end(), 0.0);
        detail::add_phi(params, s, s.gold, 1.0, g);
        detail::add_phi(params, s, pred, -1.0, g);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] += eta * g[j];
      }
      if (!hinge)
        for (std::size_t j = 0; j < w.size(); ++j) sum[j] += w[j];
      ++step;
    }
  }
  if (!hinge)
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = sum[j] / static_cast<double>(step);

  SequenceModel model = params.model(labels.names(), w);
  for (std::size_t f = 0; f < feats.size(); ++f) {
    Vector row(L);
    bool nonzero = false;
    for (std::size_t l = 0; l < L; ++l) {
      row[l] = w[params.emission(f, l)];
      nonzero = nonzero || row[l] != 0.0;
    }
    if (nonzero) model.emission_weights.emplace(feats.name(f), std::move(row));
  }
  model.validate();
  return model;
}

inline double token_accuracy(std::span<const std::string> predicted, std::span<const std::string> gold) {
  check_dim(gold.size(), predicted.size(), "token_accuracy");
  if (gold.empty()) throw Error("token_accuracy: empty sequences");
  std::size_t same = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (predicted[i] == gold[i]) ++same;
  return static_cast<double>(same) / static_cast<double>(gold.size());
}

inline std::vector<std::string> label_names(const SequenceModel& model, std::span<const std::size_t> path) {
  std::vector<std::string> out;
  out.reserve(path.size());
  for (std::size_t l : path) out.push_back(model.labels.at(l));
  return out;
}

// ---- score-matrix files -----------------------------------------------------
//
//   labels:<TAB>A<TAB>B
//   0.1<TAB>-2.5          one row per token
//   ...
//                         blank line between sentences
//   transitions:          optional L x L block, [from][to]
//   0<TAB>1.5
//   ...

struct ScoreFile {
  std::vector<std::string> labels;
  std::vector<ScoreMatrix> sentences;
  std::optional<Matrix> transitions;

  /// Model with zero start scores and the file's transitions (or zeros).
  SequenceModel model() const {
    SequenceModel m = SequenceModel::zeros(labels);
    if (transitions) m.transitions = *transitions;
    return m;
  }

  bool operator==(const ScoreFile&) const = default;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_score(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || end != field.data() + field.size() || !std::isfinite(v))
    throw Error("line " + std::to_string(line_no) + ": malformed score '" + std::string(field) + "'");
  return v;
}

inline Vector parse_score_row(std::string_view line, std::size_t expected, std::size_t line_no) {
  const auto fields = split_tabs(line);
  if (fields.size() != expected)
    throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) + " scores, found " +
                std::to_string(fields.size()));
  Vector row;
  row.reserve(expected);
  for (auto f : fields) row.push_back(parse_score(f, line_no));
  return row;
}

inline Matrix rows_to_matrix(const std::vector<Vector>& rows, std::size_t cols) {
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  return m;
}

}  // namespace detail

inline ScoreFile read_scores(std::istream& in) {
  ScoreFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false, in_transitions = false;
  std::vector<Vector> block;
  auto flush = [&] {
    if (block.empty()) return;
    file.sentences.push_back({detail::rows_to_matrix(block, file.labels.size())});
    block.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view = line;
    if (!have_header) {
      if (detail::trim(view).empty()) continue;
      if (!view.starts_with("labels:")) throw Error("line " + std::to_string(line_no) + ": expected 'labels:' header");
      for (auto f : detail::split_tabs(view.substr(7))) {
        f = detail::trim(f);
        if (!f.empty()) file.labels.emplace_back(f);
      }
      if (file.labels.empty()) throw Error("line " + std::to_string(line_no) + ": no labels in header");
      have_header = true;
      continue;
    }
    if (detail::trim(view).empty()) {
      if (!in_transitions) flush();
      continue;
    }
    if (detail::trim(view) == "transitions:") {
      if (in_transitions) throw Error("line " + std::to_string(line_no) + ": duplicate transitions block");
      flush();
      in_transitions = true;
      continue;
    }
    block.push_back(detail::parse_score_row(view, file.labels.size(), line_no));
    if (in_transitions && block.size() > file.labels.size())
      throw Error("line " + std::to_string(line_no) + ": transitions block has more than " +
                  std::to_string(file.labels.size()) + " rows");
  }
  if (!have_header) throw Error("score file: missing 'labels:' header");
  if (in_transitions) {
    if (block.size() != file.labels.size())
      throw Error("score file: transitions block has " + std::to_string(block.size()) + " rows, expected " +
                  std::to_string(file.labels.size()));
    file.transitions = detail::rows_to_matrix(block, file.labels.size());
  } else {
    flush();
  }
  return file;
}

inline ScoreFile read_scores(const std::string& text) {
  std::istringstream in(text);
  return read_scores(in);
}

inline void write_scores(std::ostream& out, const ScoreFile& file) {
  if (file.labels.empty()) throw Error("write_scores: no labels");
  auto write_row = [&](std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << format_double(row[i]);
    out << '\n';
  };
  out << "labels:";
  for (const auto& l : file.labels) out << '\t' << l;
  out << '\n';
  for (std::size_t s = 0; s < file.sentences.size(); ++s) {
    const auto& m = file.sentences[s].emissions;
    check_dim(file.labels.size(), m.cols(), "write_scores");
    if (s) out << '\n';
    for (std::size_t t = 0; t < m.rows(); ++t) write_row(m.row(t));
  }
  if (file.transitions) {
    check_dim(file.labels.size(), file.transitions->rows(), "write_scores transitions");
    out << "\ntransitions:\n";
    for (std::size_t r = 0; r < file.transitions->rows(); ++r) write_row(file.transitions->row(r));
  }
}

inline std::string write_scores(const ScoreFile& file) {
  std::ostringstream out;
  write_scores(out, file);
  return out.str();
}

}  // namespace conlearn
