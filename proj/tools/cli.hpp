#pragma once

// Subcommand driver for the conlearn tool. Kept in a header so the test suite
// can run commands in-process.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "conlearn/constraint_system.hpp"
#include "conlearn/er_tables.hpp"
#include "conlearn/features.hpp"
#include "conlearn/ilp.hpp"
#include "conlearn/io.hpp"
#include "conlearn/rectifier_net.hpp"
#include "conlearn/sequence.hpp"

namespace conlearn::cli {

using json = io::json;

/// Bad flags or config; exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> parse_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& f : split_list(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(f, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != f.size()) throw UsageError("--" + key + ": not a number: '" + f + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--" + key + ": empty list");
  return out;
}

// Binds options of one subcommand and remembers how to echo their final
// values into reports.
class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
    auto* o = app_->add_option("--" + name, var, desc)
                  ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
                  ->capture_default_str();
    echo_.emplace_back(name, [&var] { return json(var); });
    return o;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    auto* o = app_->add_flag("--" + name, var, desc)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    echo_.emplace_back(name, [&var] { return json(var); });
    return o;
  }

  bool has(const std::string& name) const {
    for (const auto& [n, f] : echo_)
      if (n == name) return true;
    return false;
  }

  json echo() const {
    json j = json::object();
    for (const auto& [n, f] : echo_) j[n] = f();
    return j;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<json()>>> echo_;
};

inline json make_report(const std::string& command, const json& config) {
  return json{{"kind", "report"}, {"format_version", io::kFormatVersion}, {"command", command}, {"config", config}};
}

inline void set_table(json& report, std::vector<std::string> columns, json rows) {
  report["table"] = json{{"columns", std::move(columns)}, {"rows", std::move(rows)}};
}

inline std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  if (v.is_number_float()) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v.get<double>();
    return s.str();
  }
  return v.dump();
}

/// Human-readable rendering of a report's table.
inline std::string render_report(const json& report) {
  std::ostringstream out;
  out << "== " << report.value("command", std::string("?")) << "\n";
  if (!report.contains("table")) return out.str();
  const auto& t = report.at("table");
  const auto cols = t.at("columns").get<std::vector<std::string>>();
  std::vector<std::size_t> width(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
  for (const auto& row : t.at("rows"))
    for (std::size_t c = 0; c < cols.size() && c < row.size(); ++c) width[c] = std::max(width[c], cell(row[c]).size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c)
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
    out << "\n";
  };
  line(cols);
  for (const auto& row : t.at("rows")) {
    std::vector<std::string> cells;
    for (std::size_t c = 0; c < cols.size(); ++c) cells.push_back(c < row.size() ? cell(row[c]) : "");
    line(cells);
  }
  if (report.contains("runtime_seconds")) out << "runtime: " << cell(report.at("runtime_seconds")) << " s\n";
  return out.str();
}

// Bad enum names in flags are usage errors.
template <typename F>
auto usage_guard(F f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

inline json load_json_file(const std::string& path) { return io::parse_json(io::read_file(path), path); }

// ---- subcommands -----------------------------------------------------------------

struct TrainFlags {
  std::size_t epochs = 1000;
  std::size_t batch_size = 0;
  std::string learning_rates = "0.001,0.01,0.1";
  std::string lr_decays = "0,1e-07,1e-06";
  double heldout_fraction = 0.2;

  void bind(Options& o) {
    o.add("epochs", epochs, "training epochs");
    o.add("batch-size", batch_size, "minibatch size (0 = full batch)");
    o.add("learning-rates", learning_rates, "comma-separated learning-rate grid");
    o.add("lr-decays", lr_decays, "comma-separated learning-rate decay grid");
    o.add("heldout-fraction", heldout_fraction, "held-out share for model selection");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = seed;
    return c;
  }
};

inline json grid_json(const SelectionResult& sel) {
  json g = json::array();
  for (const auto& p : sel.grid)
    g.push_back(json{{"learning_rate", p.learning_rate}, {"lr_decay", p.lr_decay}, {"heldout_accuracy", p.heldout_accuracy}});
  return json{{"grid", g},
              {"chosen", json{{"learning_rate", sel.chosen.learning_rate}, {"lr_decay", sel.chosen.lr_decay}}}};
}

class Driver {
 public:
  Driver(std::ostream& out, std::ostream& err) : out_(out), err_(err) { build(); }

  int run(std::vector<std::string> args) {
    try {
      apply_config(args);
      std::vector<std::string> rev(args.rbegin(), args.rend());
      app_.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out_ << app_.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app_.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      return 2;
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << "\n";
      return 2;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return 1;
    }
    for (auto& [name, sub] : subs_) {
      if (!sub.opts.app()->parsed()) continue;
      try {
        sub.action();
        return 0;
      } catch (const UsageError& e) {
        err_ << "error: " << e.what() << "\n";
        return 2;
      } catch (const std::exception& e) {
        err_ << "error: " << e.what() << "\n";
        return 1;
      }
    }
    err_ << app_.help();
    return 2;
  }

 private:
  struct Sub {
    Options opts;
    std::function<void()> action;
  };

  Sub& sub(const std::string& name, const std::string& desc) {
    CLI::App* a = app_.add_subcommand(name, desc);
    a->add_option("--config", config_path_, "JSON file whose keys override flags");
    return subs_.emplace(name, Sub{Options(a), {}}).first->second;
  }

  // The config file is a flat JSON object keyed by flag name; its values are
  // appended after the command line, so they win under TakeLast.
  void apply_config(std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      else if (args[i].starts_with("--config=")) path = args[i].substr(9);
    }
    if (path.empty()) return;
    if (args.empty() || !subs_.count(args[0])) throw UsageError("--config requires a subcommand first");
    const Options& opts = subs_.at(args[0]).opts;
    const json cfg = load_json_file(path);
    if (!cfg.is_object()) throw UsageError(path + ": config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      if (key == "format_version") {
        if (value != io::kFormatVersion) throw UsageError(path + ": unsupported format_version");
        continue;
      }
      if (!opts.has(key)) throw UsageError(path + ": unknown config key '" + key + "'");
      std::string v;
      if (value.is_string()) v = value.get<std::string>();
      else if (value.is_array()) {
        for (const auto& x : value) v += (v.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      } else if (value.is_boolean() || value.is_number()) v = value.dump();
      else throw UsageError(path + ": unsupported value for config key '" + key + "'");
      args.push_back("--" + key + "=" + v);
    }
  }

  json config_of(const std::string& name) const { return subs_.at(name).opts.echo(); }

  void emit(const json& report, const std::string& path) {
    out_ << render_report(report);
    if (!path.empty()) io::write_file_atomic(path, io::dump(report));
  }

  void build() {
    app_.name("conlearn");
    app_.description("Learn linear-inequality constraints with rectifier networks and use them in inference.");
    app_.require_subcommand(1);
    build_gen_ilp();
    build_solve_ilp();
    build_learn();
    build_extract();
    build_eval_ilp();
    build_seq_train();
    build_seq_decode();
    build_eval_er_tables();
    build_report();
  }

  void build_gen_ilp() {
    auto& s = sub("gen-ilp", "generate a family of binary ILPs sharing hidden constraints");
    s.opts.add("n", g_.n, "number of variables");
    s.opts.add("m", g_.m, "number of hidden constraints");
    s.opts.add("count", g_.count, "number of instances");
    s.opts.add("slack-scale", g_.slack_scale, "u_k ~ U[0, slack-scale * sqrt(n)]");
    s.opts.add("seed", g_.seed, "random seed")->required();
    s.opts.add("out", g_.out, "family file to write")->required();
    s.action = [this] {
      io::FamilyFile f{generate_family(g_.n, g_.m, g_.count, g_.seed, g_.slack_scale), {}};
      io::write_file_atomic(g_.out, io::dump(io::to_json(f)));
      out_ << "wrote " << f.family.instances.size() << " instances (n=" << g_.n << ", m=" << g_.m << ") to " << g_.out
           << "\n";
    };
  }

  void build_solve_ilp() {
    auto& s = sub("solve-ilp", "solve every instance of a family exactly");
    s.opts.add("family", sv_.family, "family file")->required();
    s.opts.add("system", sv_.system, "constraint system to use instead of the shared constraints");
    s.opts.add("out", sv_.out, "family file with gold assignments")->required();
    s.opts.add("report", sv_.report, "report file");
    s.action = [this] {
      io::FamilyFile f = io::family_from_json(load_json_file(sv_.family), sv_.family);
      const ConstraintSystem sys = sv_.system.empty()
                                       ? f.family.constraints.as_system()
                                       : io::system_from_json(load_json_file(sv_.system), sv_.system).system;
      f.gold.assign(f.family.instances.size(), std::nullopt);
      json rows = json::array();
      std::size_t infeasible = 0;
      for (std::size_t k = 0; k < f.family.instances.size(); ++k) {
        const IlpSolution sol = solve_exact(f.family.instances[k], sys);
        if (sol.status == SolveStatus::optimal) f.gold[k] = sol.assignment;
        else ++infeasible;
        rows.push_back(json::array({k, to_string(sol.status), sol.objective, sol.nodes}));
      }
      io::write_file_atomic(sv_.out, io::dump(io::to_json(f)));
      json report = make_report("solve-ilp", config_of("solve-ilp"));
      set_table(report, {"instance", "status", "objective", "nodes"}, rows);
      report["infeasible"] = infeasible;
      if (!sv_.report.empty()) io::write_file_atomic(sv_.report, io::dump(report));
      out_ << "solved " << f.family.instances.size() - infeasible << "/" << f.family.instances.size()
           << " instances; wrote " << sv_.out << "\n";
    };
  }

  void build_learn() {
    auto& s = sub("learn", "train a rectifier constraint network");
    s.opts.add("data", l_.data, "labeled corpus (token [POS] label columns)");
    s.opts.add("records", l_.records, "entity-relation records (source relation target reverse)");
    s.opts.add("family", l_.family, "solved ILP family (identity features over assignments)");
    s.opts.add("template", l_.templ, "feature template for --data");
    s.opts.add("n", l_.n, "n-gram / window length");
    s.opts.add("role", l_.role, "pair role for --records");
    s.opts.add("window-scheme", l_.window_scheme, "enumerate-seen-parts or random-label-perturbation");
    s.opts.add("negative-cap", l_.cap, "maximum number of negatives");
    s.opts.add("train-fraction", l_.train_fraction, "leading share of --family instances used");
    s.opts.add("hidden", l_.hidden, "hidden ReLU units");
    s.opts.add("seed", l_.seed, "random seed")->required();
    s.opts.add("out", l_.out, "net file to write")->required();
    s.opts.add("report", l_.report, "report file");
    l_.train.bind(s.opts);
    s.action = [this] { learn(); };
  }

  void learn() {
    const int sources = !l_.data.empty() + !l_.records.empty() + !l_.family.empty();
    if (sources != 1) throw UsageError("learn: give exactly one of --data, --records, --family");
    io::NetFile nf;
    GeneratedDataset ds;
    if (!l_.data.empty()) {
      if (l_.templ.empty()) throw UsageError("learn: --template is required with --data");
      FeatureTemplate t;
      t.kind = usage_guard([&] { return parse_template_kind(l_.templ); });
      t.n = l_.n;
      if (t.kind == TemplateKind::label_counts) t.n = 1;
      if (t.kind == TemplateKind::pair_indicator) throw UsageError("learn: pair-indicator needs --records");
      const auto corpus = io::read_conll_file(l_.data);
      const LabelVocab vocab = LabelVocab::from_corpus(corpus);
      NegativeOptions opt;
      opt.cap = l_.cap;
      if (l_.window_scheme == "random-label-perturbation") opt.window_scheme = WindowNegativeScheme::random_label_perturbation;
      else if (l_.window_scheme != "enumerate-seen-parts")
        throw UsageError("learn: unknown --window-scheme '" + l_.window_scheme + "'");
      ds = make_dataset(t, corpus, vocab, l_.seed, opt);
      nf.features = io::FeatureSpec{t, vocab};
    } else if (!l_.records.empty()) {
      std::istringstream in(io::read_file(l_.records));
      const auto recs = io::read_er_records(in, l_.records);
      const PairRole role = usage_guard([&] { return parse_pair_role(l_.role); });
      ds = pair_indicator_examples(recs, role);
      nf.features = io::FeatureSpec{FeatureTemplate::pair_indicator(role), LabelVocab{}};
    } else {
      const io::FamilyFile f = io::family_from_json(load_json_file(l_.family), l_.family);
      if (f.gold.size() != f.family.instances.size()) throw Error(l_.family + ": family has no gold assignments");
      const auto n = static_cast<std::size_t>(std::llround(l_.train_fraction * static_cast<double>(f.gold.size())));
      std::vector<IlpSolution> sols;
      for (std::size_t k = 0; k < n; ++k) {
        if (!f.gold[k]) throw Error(l_.family + ": instance " + std::to_string(k) + " has no gold assignment");
        sols.push_back({*f.gold[k], objective_of(f.family.instances[k].costs, *f.gold[k]), SolveStatus::optimal, 0});
      }
      ds = make_training_pairs(std::span<const IlpInstance>(f.family.instances).first(n), sols);
    }
    if (ds.positives.empty() || ds.negatives.empty())
      throw Error("learn: degenerate training set (" + std::to_string(ds.positives.size()) + " positives, " +
                  std::to_string(ds.negatives.size()) + " negatives)");
    const auto data = ds.all();
    const SelectionResult sel =
        select_and_train(ds.dim, l_.hidden, data, l_.train.config(l_.seed), parse_doubles(l_.train.learning_rates, "learning-rates"),
                         parse_doubles(l_.train.lr_decays, "lr-decays"), l_.train.heldout_fraction);
    nf.net = sel.trained.net;
    io::write_file_atomic(l_.out, io::dump(io::to_json(nf)));
    const double acc = classification_accuracy(nf.net, data);
    json report = make_report("learn", config_of("learn"));
    set_table(report, {"positives", "negatives", "dim", "train accuracy"},
              json::array({json::array({ds.positives.size(), ds.negatives.size(), ds.dim, 100.0 * acc})}));
    report["selection"] = grid_json(sel);
    emit(report, l_.report);
    out_ << "wrote " << l_.out << "\n";
  }

  void build_extract() {
    auto& s = sub("extract", "convert a trained net into its 2^K - 1 linear inequalities");
    s.opts.add("net", x_.net, "net file")->required();
    s.opts.add("out", x_.out, "system file to write")->required();
    s.action = [this] {
      const io::NetFile nf = io::net_from_json(load_json_file(x_.net), x_.net);
      io::SystemFile sf{extract_system(nf.net), nf.features};
      io::write_file_atomic(x_.out, io::dump(io::to_json(sf)));
      out_ << "wrote " << sf.system.inequalities.size() << " inequalities over " << sf.system.input_dim
           << " features to " << x_.out << "\n";
    };
  }

  void build_eval_ilp() {
    auto& s = sub("eval-ilp", "learn hidden ILP constraints from solutions and measure recovery");
    s.opts.add("family", e_.family, "family file (gold assignments used when present)")->required();
    s.opts.add("hidden", e_.hidden, "hidden ReLU units");
    s.opts.add("train-fraction", e_.train_fraction, "leading share of instances used for training");
    s.opts.add("seed", e_.seed, "random seed")->required();
    s.opts.add("out", e_.out, "report file")->required();
    s.opts.add("net-out", e_.net_out, "write the trained net here");
    s.opts.add("system-out", e_.system_out, "write the extracted system here");
    s.opts.flag("timing", e_.timing, "record wall-clock runtime in the report");
    e_.train.bind(s.opts);
    s.action = [this] { eval_ilp(); };
  }

  void eval_ilp() {
    const auto t0 = std::chrono::steady_clock::now();
    const io::FamilyFile f = io::family_from_json(load_json_file(e_.family), e_.family);
    std::vector<IlpSolution> gold;
    if (!f.gold.empty()) {
      for (std::size_t k = 0; k < f.gold.size(); ++k) {
        if (!f.gold[k]) throw Error(e_.family + ": instance " + std::to_string(k) + " has no gold assignment");
        gold.push_back({*f.gold[k], objective_of(f.family.instances[k].costs, *f.gold[k]), SolveStatus::optimal, 0});
      }
    }
    IlpExperimentConfig cfg;
    cfg.hidden_count = e_.hidden;
    cfg.train_fraction = e_.train_fraction;
    cfg.train = e_.train.config(e_.seed);
    cfg.learning_rates = parse_doubles(e_.train.learning_rates, "learning-rates");
    cfg.lr_decays = parse_doubles(e_.train.lr_decays, "lr-decays");
    cfg.heldout_fraction = e_.train.heldout_fraction;
    const IlpExperimentResult r = run_ilp_experiment(f.family, cfg, std::move(gold));
    if (!e_.net_out.empty()) io::write_file_atomic(e_.net_out, io::dump(io::to_json(io::NetFile{r.selection.trained.net, {}})));
    if (!e_.system_out.empty())
      io::write_file_atomic(e_.system_out, io::dump(io::to_json(io::SystemFile{r.learned, {}})));
    json report = ilp_report(r, config_of("eval-ilp"));
    if (e_.timing)
      report["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit(report, e_.out);
  }

 public:
  static json ilp_report(const IlpExperimentResult& r, const json& config) {
    const auto& m = r.metrics;
    json report = make_report("eval-ilp", config);
    set_table(report, {"measure", "learned", "baseline"},
              json::array({
                  json::array({"binary classification acc.", m.classification_accuracy, nullptr}),
                  json::array({"bitwise solution acc.", m.bitwise_accuracy, m.baseline_bitwise_accuracy}),
                  json::array({"original constr. satisfied", m.original_satisfied, m.baseline_original_satisfied}),
                  json::array({"learned constr. satisfied", m.learned_satisfied, nullptr}),
              }));
    report["metrics"] = json{{"classification_accuracy", m.classification_accuracy},
                             {"bitwise_accuracy", m.bitwise_accuracy},
                             {"original_satisfied", m.original_satisfied},
                             {"learned_satisfied", m.learned_satisfied},
                             {"baseline_bitwise_accuracy", m.baseline_bitwise_accuracy},
                             {"baseline_original_satisfied", m.baseline_original_satisfied}};
    report["test_instances"] = m.instances;
    report["fallback_instances"] = m.fallback_instances;
    report["train"] = json{{"instances", r.train_instances},
                           {"positives", r.train_positives},
                           {"negatives", r.train_negatives},
                           {"inequalities", r.learned.inequalities.size()}};
    report["selection"] = grid_json(r.selection);
    return report;
  }

 private:
  void build_seq_train() {
    auto& s = sub("seq-train", "train a first-order sequence labeler");
    s.opts.add("data", st_.data, "labeled corpus")->required();
    s.opts.add("mode", st_.mode, "structured-hinge or averaged-perceptron");
    s.opts.add("trade-off", st_.trade_off, "L2 coefficient (0 = unregularized)");
    s.opts.add("epochs", st_.epochs, "passes over the corpus");
    s.opts.add("learning-rate", st_.learning_rate, "initial step size (structured-hinge)");
    s.opts.add("seed", st_.seed, "random seed")->required();
    s.opts.add("out", st_.out, "model file to write")->required();
    s.action = [this] {
      const auto corpus = io::read_conll_file(st_.data);
      MarkovTrainConfig cfg;
      cfg.mode = usage_guard([&] { return parse_train_mode(st_.mode); });
      cfg.trade_off = st_.trade_off;
      cfg.epochs = st_.epochs;
      cfg.learning_rate = st_.learning_rate;
      cfg.seed = st_.seed;
      const SequenceModel model = train_markov(corpus, cfg);
      io::write_file_atomic(st_.out, io::dump(io::to_json(model)));
      out_ << "wrote " << st_.out << " (" << model.label_count() << " labels, " << model.emission_weights.size()
           << " features)\n";
    };
  }

  void build_seq_decode() {
    auto& s = sub("seq-decode", "beam-decode sentences under learned constraint systems");
    s.opts.add("data", sd_.data, "corpus to decode (gold labels optional)")->required();
    s.opts.add("model", sd_.model, "sequence model file");
    s.opts.add("scores", sd_.scores, "score-matrix file, one block per sentence");
    s.opts.add("systems", sd_.systems, "comma-separated constraint system files");
    s.opts.add("beam", sd_.beam, "beam width");
    s.opts.flag("fallback", sd_.fallback, "return the unconstrained beam's best when nothing survives");
    s.opts.flag("rerank", sd_.rerank, "order violating states last instead of pruning");
    s.opts.flag("verify-scores", sd_.verify, "recompute every beam state's score");
    s.opts.add("out", sd_.out, "predicted corpus to write")->required();
    s.opts.add("report", sd_.report, "report file");
    s.action = [this] { seq_decode(); };
  }

  void seq_decode() {
    if (sd_.model.empty() == sd_.scores.empty()) throw UsageError("seq-decode: give exactly one of --model, --scores");
    std::istringstream in(io::read_file(sd_.data));
    auto corpus = io::read_conll(in, sd_.data, false);
    // A two-column file is ambiguous; treat the last column as gold labels
    // whenever the model knows every value in it.
    SequenceModel model;
    std::vector<ScoreMatrix> matrices;
    if (!sd_.model.empty()) {
      model = io::sequence_model_from_json(load_json_file(sd_.model), sd_.model);
    } else {
      std::istringstream sin(io::read_file(sd_.scores));
      ScoreFile sf = read_scores(sin);
      model = sf.model();
      matrices = std::move(sf.sentences);
      if (matrices.size() != corpus.size())
        throw Error(sd_.scores + ": " + std::to_string(matrices.size()) + " score blocks for " +
                    std::to_string(corpus.size()) + " sentences");
    }
    {
      std::istringstream lin(io::read_file(sd_.data));
      bool labeled = true;
      std::vector<TaggedSequence> with_labels;
      try {
        with_labels = io::read_conll(lin, sd_.data, true);
      } catch (const Error&) {
        labeled = false;
      }
      if (labeled && with_labels.size() == corpus.size()) {
        for (const auto& s : with_labels)
          for (const auto& l : s.labels)
            if (std::find(model.labels.begin(), model.labels.end(), l) == model.labels.end()) labeled = false;
        if (labeled) corpus = std::move(with_labels);
      }
    }

    std::vector<SequenceConstraint> systems;
    for (const auto& path : split_list(sd_.systems)) {
      io::SystemFile sf = io::system_from_json(load_json_file(path), path);
      if (!sf.features) throw Error(path + ": system has no feature template");
      systems.push_back({std::move(sf.system), sf.features->feature_template, std::move(sf.features->vocab)});
    }
    DecodeOptions opt;
    opt.beam_width = sd_.beam;
    opt.fallback = sd_.fallback;
    opt.rerank = sd_.rerank;
    opt.verify_scores = sd_.verify;

    std::vector<TaggedSequence> predicted;
    std::map<std::string, std::size_t> statuses;
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& seq = corpus[i];
      const ScoreMatrix sm = matrices.empty() ? emission_scores(model, seq.tokens) : matrices[i];
      const DecodeResult res = beam_decode(model, sm, seq, systems, opt);
      ++statuses[to_string(res.status)];
      TaggedSequence p{seq.tokens, seq.pos_tags, {}};
      if (res.status == DecodeStatus::infeasible) p.labels.assign(seq.size(), "_");
      else p.labels = label_names(model, res.labels);
      if (!seq.labels.empty())
        for (std::size_t t = 0; t < seq.size(); ++t) correct += p.labels[t] == seq.labels[t], ++total;
      predicted.push_back(std::move(p));
    }
    io::write_file_atomic(sd_.out, io::write_conll(predicted));
    json report = make_report("seq-decode", config_of("seq-decode"));
    json rows = json::array();
    rows.push_back(json::array({"sentences", corpus.size()}));
    for (const auto& [k, v] : statuses) rows.push_back(json::array({"status " + k, v}));
    if (total) rows.push_back(json::array({"token accuracy", 100.0 * static_cast<double>(correct) / static_cast<double>(total)}));
    set_table(report, {"measure", "value"}, rows);
    emit(report, sd_.report);
  }

  void build_eval_er_tables() {
    auto& s = sub("eval-er-tables", "check published entity-relation constraint tables against the designed rules");
    s.opts.add("tables", er_.tables, "directory with source-relation.json, relation-target.json, relation-relation.json");
    s.opts.add("out", er_.out, "report file");
    s.action = [this] {
      std::vector<ConstraintSystem> systems;
      for (PairRole role : {PairRole::source_relation, PairRole::relation_target, PairRole::relation_relation}) {
        if (er_.tables.empty()) {
          systems.push_back(er::published_system(role));
        } else {
          const std::string path = er_.tables + "/" + to_string(role) + ".json";
          systems.push_back(io::system_from_json(load_json_file(path), path).system);
        }
      }
      const er::TableAgreement a = er::check_tables(systems);
      json rows = json::array();
      std::map<PairRole, std::pair<std::size_t, std::size_t>> per_role;
      for (const auto& c : a.checks) {
        auto& [pairs, bad] = per_role[c.role];
        ++pairs;
        if (c.designed != c.learned) {
          ++bad;
          rows.push_back(json::array({to_string(c.role), c.first, c.second, c.designed, c.learned, c.worst_value}));
        }
      }
      json report = make_report("eval-er-tables", config_of("eval-er-tables"));
      json summary = json::array();
      for (const auto& [role, pb] : per_role) summary.push_back(json::array({to_string(role), pb.first, pb.second}));
      set_table(report, {"role", "pairs", "disagreements"}, summary);
      report["disagreements"] = rows;
      report["total_pairs"] = a.checks.size();
      report["total_disagreements"] = a.disagreements();
      const Vector loc_kill = er::encode_pair(PairRole::source_relation, "Location", "Kill");
      const auto& first = systems[0].inequalities.at(0);
      report["spot_check"] = json{{"pair", json::array({"Location", "Kill"})}, {"row", 0}, {"value", first.value(loc_kill)}};
      emit(report, er_.out);
      out_ << a.disagreements() << " disagreements over " << a.checks.size() << " pairs\n";
    };
  }

  void build_report() {
    auto& s = sub("report", "print report files as tables");
    s.opts.app()->add_option("inputs", rp_.inputs, "report files")->required();
    s.action = [this] {
      for (const auto& path : rp_.inputs) {
        const json r = load_json_file(path);
        if (r.value("kind", std::string()) != "report") throw Error(path + ": not a report file");
        out_ << render_report(r);
      }
    };
  }

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_;
  std::map<std::string, Sub> subs_;
  std::string config_path_;

  struct {
    std::size_t n = 50, m = 10, count = 100;
    double slack_scale = 0.5;
    std::uint64_t seed = 0;
    std::string out;
  } g_;
  struct {
    std::string family, system, out, report;
  } sv_;
  struct {
    std::string data, records, family, templ, role = "source-relation", window_scheme = "enumerate-seen-parts";
    std::size_t n = 2, cap = 50'000, hidden = 10;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    std::string out, report;
    TrainFlags train;
  } l_;
  struct {
    std::string net, out;
  } x_;
  struct {
    std::string family;
    std::size_t hidden = 10;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    std::string out, net_out, system_out;
    bool timing = false;
    TrainFlags train;
  } e_;
  struct {
    std::string data, mode = "structured-hinge";
    double trade_off = 0.0, learning_rate = 0.1;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    std::string out;
  } st_;
  struct {
    std::string data, model, scores, systems;
    std::size_t beam = 50;
    bool fallback = false, rerank = false, verify = false;
    std::string out, report;
  } sd_;
  struct {
    std::string tables, out;
  } er_;
  struct {
    std::vector<std::string> inputs;
  } rp_;
};

/// Runs one command line (without the program name). Exit status: 0 ok,
/// 1 runtime error, 2 usage error.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Driver d(out, err);
  return d.run(std::move(args));
}

}  // namespace conlearn::cli
