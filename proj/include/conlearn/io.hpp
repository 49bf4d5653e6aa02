#pragma once

// On-disk formats. Structured artifacts (nets, systems, ILP families, sequence
// models) are JSON documents tagged with "kind" and "format_version"; corpora
// are whitespace-separated columns. Doubles are written in shortest
// round-trip form, so every artifact reads back bit-exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "conlearn/common.hpp"
#include "conlearn/constraint_system.hpp"
#include "conlearn/features.hpp"
#include "conlearn/ilp.hpp"
#include "conlearn/rectifier_net.hpp"
#include "conlearn/sequence.hpp"

namespace conlearn::io {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---- files --------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("error reading '" + path.string() + "'");
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("error writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename into '" + path.string() + "'");
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(what + ": invalid JSON: " + e.what());
  }
}

namespace detail {

template <typename F>
auto guarded(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(what + ": " + e.what());
  }
}

inline void expect_kind(const json& j, const char* kind, const std::string& what) {
  if (!j.is_object()) throw Error(what + ": expected a JSON object");
  if (j.value("kind", std::string()) != kind) throw Error(what + ": expected kind '" + kind + "'");
  const int v = j.value("format_version", 0);
  if (v != kFormatVersion) throw Error(what + ": unsupported format_version " + std::to_string(v));
}

inline json header(const char* kind) { return json{{"kind", kind}, {"format_version", kFormatVersion}}; }

inline Matrix matrix_from(const json& rows, std::size_t cols, const std::string& what) {
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows.at(r).get<Vector>();
    check_dim(cols, row.size(), what.c_str());
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

inline json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(Vector(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace detail

// ---- feature templates and vocabularies ----------------------------------------

inline json to_json(const FeatureTemplate& t) {
  json j{{"kind", to_string(t.kind)}};
  if (t.kind == TemplateKind::pair_indicator) j["role"] = to_string(t.role);
  else j["n"] = t.n;
  return j;
}

inline FeatureTemplate template_from_json(const json& j) {
  const TemplateKind kind = parse_template_kind(j.at("kind").get<std::string>());
  FeatureTemplate t;
  t.kind = kind;
  if (kind == TemplateKind::pair_indicator) t.role = parse_pair_role(j.at("role").get<std::string>());
  else t.n = j.at("n").get<std::size_t>();
  validate_template(t);
  return t;
}

inline json to_json(const LabelVocab& v) { return json{{"labels", v.labels.names()}, {"pos_values", v.pos_values.names()}}; }

inline LabelVocab vocab_from_json(const json& j) {
  return LabelVocab(j.at("labels").get<std::vector<std::string>>(), j.at("pos_values").get<std::vector<std::string>>());
}

/// The template + vocabulary a net or system was trained over.
struct FeatureSpec {
  FeatureTemplate feature_template;
  LabelVocab vocab;

  bool operator==(const FeatureSpec&) const = default;
};

inline json to_json(const FeatureSpec& f) {
  return json{{"template", to_json(f.feature_template)}, {"vocab", to_json(f.vocab)}};
}

inline FeatureSpec feature_spec_from_json(const json& j) {
  return {template_from_json(j.at("template")), vocab_from_json(j.at("vocab"))};
}

// ---- nets ---------------------------------------------------------------------------

struct NetFile {
  ConstraintNet net;
  std::optional<FeatureSpec> features;
};

inline json to_json(const NetFile& f) {
  json j = detail::header("constraint-net");
  j["hidden_count"] = f.net.hidden_count();
  j["input_dim"] = f.net.input_dim();
  j["weights"] = f.net.weights.data();
  j["biases"] = f.net.biases;
  if (f.features) j["features"] = to_json(*f.features);
  return j;
}

inline NetFile net_from_json(const json& j, const std::string& what = "net") {
  return detail::guarded(what, [&] {
    detail::expect_kind(j, "constraint-net", what);
    const auto K = j.at("hidden_count").get<std::size_t>(), d = j.at("input_dim").get<std::size_t>();
    const auto w = j.at("weights").get<Vector>();
    check_dim(K * d, w.size(), (what + " weights").c_str());
    NetFile f;
    f.net.weights = Matrix(K, d);
    f.net.weights.data() = w;
    f.net.biases = j.at("biases").get<Vector>();
    f.net.validate();
    if (j.contains("features")) f.features = feature_spec_from_json(j.at("features"));
    return f;
  });
}

// ---- constraint systems --------------------------------------------------------------

struct SystemFile {
  ConstraintSystem system;
  std::optional<FeatureSpec> features;
};

inline json to_json(const SystemFile& f) {
  const auto& s = f.system;
  json j = detail::header("constraint-system");
  j["input_dim"] = s.input_dim;
  j["origin"] = s.origin;
  if (s.hidden_count) j["hidden_count"] = *s.hidden_count;
  if (f.features) j["features"] = to_json(*f.features);
  json rows = json::array();
  for (const auto& ineq : s.inequalities)
    rows.push_back(json{{"mask", ineq.subset_mask}, {"weights", ineq.weights}, {"bias", ineq.bias}});
  j["inequalities"] = std::move(rows);
  return j;
}

inline SystemFile system_from_json(const json& j, const std::string& what = "system") {
  return detail::guarded(what, [&] {
    detail::expect_kind(j, "constraint-system", what);
    SystemFile f;
    auto& s = f.system;
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.origin = j.at("origin").get<std::string>();
    if (j.contains("hidden_count")) s.hidden_count = j.at("hidden_count").get<std::size_t>();
    for (const auto& r : j.at("inequalities"))
      s.inequalities.push_back({r.at("weights").get<Vector>(), r.at("bias").get<double>(), r.at("mask").get<std::uint32_t>()});
    s.validate();
    for (const auto& ineq : s.inequalities)
      if (!all_finite(ineq.weights) || !std::isfinite(ineq.bias)) throw Error(what + ": non-finite coefficient");
    if (j.contains("features")) {
      f.features = feature_spec_from_json(j.at("features"));
      if (f.features->feature_template.kind != TemplateKind::pair_indicator)
        check_dim(template_dim(f.features->feature_template, f.features->vocab), s.input_dim, what.c_str());
    }
    return f;
  });
}

// ---- ILP families ------------------------------------------------------------------------

/// A family plus, optionally, one solution per instance.
struct FamilyFile {
  IlpFamily family;
  std::vector<std::optional<Assignment>> gold;  // empty or one per instance
};

inline json to_json(const FamilyFile& f) {
  const auto& fam = f.family;
  json j = detail::header("ilp-family");
  j["family_id"] = fam.family_id;
  j["n"] = fam.constraints.dim();
  j["m"] = fam.constraints.size();
  j["A"] = detail::matrix_rows(fam.constraints.matrix);
  j["b"] = fam.constraints.bounds;
  j["witness"] = fam.witness;
  json insts = json::array();
  for (std::size_t k = 0; k < fam.instances.size(); ++k) {
    json inst{{"costs", fam.instances[k].costs}};
    if (k < f.gold.size() && f.gold[k]) inst["gold_assignment"] = *f.gold[k];
    insts.push_back(std::move(inst));
  }
  j["instances"] = std::move(insts);
  return j;
}

inline FamilyFile family_from_json(const json& j, const std::string& what = "family") {
  return detail::guarded(what, [&] {
    detail::expect_kind(j, "ilp-family", what);
    FamilyFile f;
    auto& fam = f.family;
    fam.family_id = j.at("family_id").get<std::string>();
    const auto n = j.at("n").get<std::size_t>(), m = j.at("m").get<std::size_t>();
    fam.constraints.matrix = detail::matrix_from(j.at("A"), n, what + " A");
    check_dim(m, fam.constraints.matrix.rows(), (what + " A rows").c_str());
    fam.constraints.bounds = j.at("b").get<Vector>();
    check_dim(m, fam.constraints.bounds.size(), (what + " b").c_str());
    fam.witness = j.value("witness", Assignment{});
    bool any_gold = false;
    for (const auto& inst : j.at("instances")) {
      IlpInstance i{inst.at("costs").get<Vector>(), fam.family_id};
      check_dim(n, i.size(), (what + " costs").c_str());
      if (!all_finite(i.costs)) throw Error(what + ": non-finite cost");
      fam.instances.push_back(std::move(i));
      std::optional<Assignment> g;
      if (inst.contains("gold_assignment")) {
        g = inst.at("gold_assignment").get<Assignment>();
        check_dim(n, g->size(), (what + " gold_assignment").c_str());
        any_gold = true;
      }
      f.gold.push_back(std::move(g));
    }
    if (!any_gold) f.gold.clear();
    return f;
  });
}

// ---- sequence models -------------------------------------------------------------------------

inline json to_json(const SequenceModel& m) {
  json j = detail::header("sequence-model");
  j["labels"] = m.labels;
  j["start"] = m.start;
  j["transitions"] = detail::matrix_rows(m.transitions);
  json em = json::object();
  for (const auto& [f, w] : m.emission_weights) em[f] = w;
  j["emission_weights"] = std::move(em);
  return j;
}

inline SequenceModel sequence_model_from_json(const json& j, const std::string& what = "sequence model") {
  return detail::guarded(what, [&] {
    detail::expect_kind(j, "sequence-model", what);
    SequenceModel m;
    m.labels = j.at("labels").get<std::vector<std::string>>();
    m.start = j.at("start").get<Vector>();
    m.transitions = detail::matrix_from(j.at("transitions"), m.labels.size(), what + " transitions");
    for (const auto& [f, w] : j.at("emission_weights").items()) m.emission_weights.emplace(f, w.get<Vector>());
    m.validate();
    return m;
  });
}

// ---- corpora ---------------------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

}  // namespace detail

/// Columns per token: "token label" or "token POS ... label" (first column is
/// the token, second the POS tag, last the label). Blank lines end sequences;
/// -DOCSTART- lines are skipped. With `labeled` false, a single column is
/// accepted and labels are left empty.
inline std::vector<TaggedSequence> read_conll(std::istream& in, const std::string& what = "corpus",
                                              bool labeled = true) {
  std::vector<TaggedSequence> out;
  TaggedSequence cur;
  std::size_t width = 0, line_no = 0;
  auto flush = [&] {
    if (!cur.tokens.empty()) out.push_back(std::move(cur));
    cur = {};
    width = 0;
  };
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto f = detail::split_ws(line);
    if (f.empty()) {
      flush();
      continue;
    }
    if (f[0] == "-DOCSTART-") continue;
    const auto where = [&] { return what + ": line " + std::to_string(line_no); };
    if (width == 0) width = f.size();
    if (f.size() != width)
      throw Error(where() + ": expected " + std::to_string(width) + " columns, found " + std::to_string(f.size()));
    if (labeled && f.size() < 2) throw Error(where() + ": expected token and label columns");
    cur.tokens.push_back(f[0]);
    if (labeled) {
      cur.labels.push_back(f.back());
      if (f.size() >= 3) cur.pos_tags.push_back(f[1]);
    } else if (f.size() >= 2) {
      cur.pos_tags.push_back(f[1]);
    }
  }
  flush();
  return out;
}

inline std::vector<TaggedSequence> read_conll_file(const std::filesystem::path& path, bool labeled = true) {
  std::istringstream in(read_file(path));
  return read_conll(in, path.string(), labeled);
}

inline std::string write_conll(std::span<const TaggedSequence> corpus) {
  std::string out;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& seq = corpus[s];
    if (s) out += '\n';
    for (std::size_t t = 0; t < seq.size(); ++t) {
      out += seq.tokens[t];
      if (seq.has_pos()) out += '\t' + seq.pos_tags[t];
      if (!seq.labels.empty()) out += '\t' + seq.labels[t];
      out += '\n';
    }
  }
  return out;
}

/// One record per line: source relation target reverse_relation.
inline std::vector<er::RelationRecord> read_er_records(std::istream& in, const std::string& what = "records") {
  static const SymbolTable entities(er::entity_labels(), "entity label");
  static const SymbolTable relations(er::relation_labels(), "relation label");
  std::vector<er::RelationRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto f = detail::split_ws(line);
    if (f.empty() || f[0].starts_with('#')) continue;
    const std::string where = what + ": line " + std::to_string(line_no);
    if (f.size() != 4) throw Error(where + ": expected 4 fields, found " + std::to_string(f.size()));
    try {
      entities.index(f[0]);
      relations.index(f[1]);
      entities.index(f[2]);
      relations.index(f[3]);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    out.push_back({f[0], f[1], f[2], f[3]});
  }
  return out;
}

}  // namespace conlearn::io
