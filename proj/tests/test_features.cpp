#include <gtest/gtest.h>

#include <set>

#include "conlearn/features.hpp"

using namespace conlearn;

namespace {

TaggedSequence seq(std::vector<std::string> tokens, std::vector<std::string> pos, std::vector<std::string> labels) {
  return {std::move(tokens), std::move(pos), std::move(labels)};
}

std::vector<TaggedSequence> tiny_corpus() {
  return {seq({"Smith", ",", "Parsing", "."}, {"NNP", ",", "NN", "."}, {"A", "A", "T", "T"}),
          seq({"Lee", "1999", "Search"}, {"NNP", "CD", "NN"}, {"A", "D", "T"})};
}

std::size_t hot(const Vector& v) {
  std::size_t n = 0, at = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) ++n, at = i;
  EXPECT_EQ(n, 1u);
  return at;
}

}  // namespace

TEST(Features, PunctuationRule) {
  EXPECT_TRUE(is_punctuation(","));
  EXPECT_TRUE(is_punctuation("--"));
  EXPECT_FALSE(is_punctuation("a."));
  EXPECT_FALSE(is_punctuation("1999"));
  EXPECT_FALSE(is_punctuation("\xc3\xa9"));
  EXPECT_FALSE(is_punctuation(""));
}

TEST(Features, IobTransitions) {
  EXPECT_TRUE(iob_transition_allowed("", "B-NP"));
  EXPECT_FALSE(iob_transition_allowed("", "I-NP"));
  EXPECT_FALSE(iob_transition_allowed("O", "I-NP"));
  EXPECT_TRUE(iob_transition_allowed("B-NP", "I-NP"));
  EXPECT_FALSE(iob_transition_allowed("I-VP", "I-NP"));
  const std::vector<std::string> ok{"B-NP", "I-NP", "O", "B-VP"};
  EXPECT_NO_THROW(validate_iob(ok));
  const std::vector<std::string> bad{"O", "I-NP"};
  EXPECT_THROW(validate_iob(bad), Error);
}

TEST(Features, VocabInFirstSeenOrder) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  EXPECT_EQ(v.labels.names(), (std::vector<std::string>{"A", "T", "D"}));
  EXPECT_EQ(v.pos_values.size(), 5u);  // NNP , NN . CD
  EXPECT_THROW(v.labels.index("X"), Error);
}

TEST(Features, TemplateNamesRoundTrip) {
  for (auto k : {TemplateKind::label_existence, TemplateKind::label_counts, TemplateKind::ngram_labels,
                 TemplateKind::pos_window, TemplateKind::punctuation_window, TemplateKind::pair_indicator})
    EXPECT_EQ(parse_template_kind(to_string(k)), k);
  EXPECT_THROW(parse_template_kind("trigram"), Error);
  EXPECT_EQ(template_name(FeatureTemplate::ngram_labels(2)), "ngram-labels:2");
  EXPECT_EQ(template_name(FeatureTemplate::pair_indicator(PairRole::relation_target)), "pair-indicator:relation-target");
}

TEST(Features, Dimensions) {
  const LabelVocab v = LabelVocab::from_corpus(tiny_corpus());
  EXPECT_EQ(template_dim(FeatureTemplate::ngram_labels(2), v), 9u);
  EXPECT_EQ(template_dim(FeatureTemplate::label_existence(1), v), 3u);
  EXPECT_EQ(template_dim(FeatureTemplate::label_counts(), v), 3u);
  EXPECT_EQ(template_dim(FeatureTemplate::pos_window(2), v), 2u * (5 + 3));
  EXPECT_EQ(template_dim(FeatureTemplate::punctuation_window(3), v), 3u * (1 + 3));
  EXPECT_EQ(template_dim(FeatureTemplate::pair_indicator(PairRole::source_relation), v), 10u);
  EXPECT_EQ(template_dim(FeatureTemplate::pair_indicator(PairRole::relation_relation), v), 12u);
  LabelVocab big;
  for (int i = 0; i < 100; ++i) big.labels.add("L" + std::to_string(i));
  EXPECT_THROW(template_dim(FeatureTemplate::ngram_labels(4), big), Error);
}

TEST(Features, NgramWindows) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const auto w = extract(FeatureTemplate::ngram_labels(2), corpus[1], v);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(hot(w[0]), 0u * 3 + 2);  // A D
  EXPECT_EQ(hot(w[1]), 2u * 3 + 1);  // D T
  EXPECT_TRUE(extract(FeatureTemplate::ngram_labels(4), corpus[1], v).empty());
}

TEST(Features, GlobalTemplates) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const auto counts = extract(FeatureTemplate::label_counts(), corpus[0], v);
  ASSERT_EQ(counts.size(), 1u);
  EXPECT_EQ(counts[0], (Vector{2, 2, 0}));
  const auto exist = extract(FeatureTemplate::label_existence(2), corpus[0], v);
  ASSERT_EQ(exist.size(), 1u);
  Vector expect(9, 0.0);
  expect[0 * 3 + 0] = expect[0 * 3 + 1] = expect[1 * 3 + 1] = 1.0;
  EXPECT_EQ(exist[0], expect);
}

TEST(Features, PosAndPunctuationWindows) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const auto pw = extract(FeatureTemplate::pos_window(2), corpus[0], v);
  ASSERT_EQ(pw.size(), 3u);
  // Window (Smith/NNP/A, ","/","/A): POS blocks then label blocks.
  Vector e(16, 0.0);
  e[0 * 5 + 0] = e[1 * 5 + 1] = 1.0;
  e[10 + 0 * 3 + 0] = e[10 + 1 * 3 + 0] = 1.0;
  EXPECT_EQ(pw[0], e);
  const auto uw = extract(FeatureTemplate::punctuation_window(2), corpus[0], v);
  Vector u(8, 0.0);
  u[1] = 1.0;
  u[2 + 0] = u[2 + 3 + 0] = 1.0;
  EXPECT_EQ(uw[0], u);
}

TEST(Features, PosWindowNeedsTags) {
  const LabelVocab v({"A"}, {"NN"});
  const TaggedSequence s = seq({"x", "y"}, {}, {"A", "A"});
  EXPECT_THROW(extract(FeatureTemplate::pos_window(1), s, v), Error);
}

TEST(Features, UnknownPosSkipsWindowAtDecodeTime) {
  const LabelVocab v({"A"}, {"NN"});
  const TaggedSequence s = seq({"x", "y"}, {"NN", "VB"}, {"A", "A"});
  const IndexedSequence ctx = index_context(s, v, false);
  const std::vector<std::size_t> labels{0, 0};
  EXPECT_TRUE(encode_window(FeatureTemplate::pos_window(1), ctx, labels, 0, v).has_value());
  EXPECT_FALSE(encode_window(FeatureTemplate::pos_window(1), ctx, labels, 1, v).has_value());
  EXPECT_THROW(index_context(s, v, true), Error);
}

TEST(Features, PositivesDeduplicated) {
  auto corpus = tiny_corpus();
  corpus.push_back(corpus[0]);
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const auto pos = build_positive_set(FeatureTemplate::ngram_labels(2), corpus, v);
  EXPECT_EQ(pos.size(), 5u);  // AA AT TT AD DT
  for (const auto& p : pos) EXPECT_EQ(p.label, 1);
}

namespace {

void expect_disjoint(const GeneratedDataset& ds) {
  std::set<Vector> pos;
  for (const auto& p : ds.positives) pos.insert(p.psi);
  std::set<Vector> neg;
  for (const auto& n : ds.negatives) {
    EXPECT_EQ(n.label, -1);
    EXPECT_EQ(n.psi.size(), ds.dim);
    EXPECT_FALSE(pos.count(n.psi));
    EXPECT_TRUE(neg.insert(n.psi).second);
  }
}

}  // namespace

TEST(Negatives, NgramEnumeratesUnseenBigrams) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const GeneratedDataset ds = make_dataset(FeatureTemplate::ngram_labels(2), corpus, v, 1);
  EXPECT_EQ(ds.negatives.size(), 9u - 5u);
  expect_disjoint(ds);
}

TEST(Negatives, TrigramsNeedOneSeenBigram) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const GeneratedDataset ds = make_dataset(FeatureTemplate::ngram_labels(3), corpus, v, 1);
  expect_disjoint(ds);
  // D D D contains no seen bigram.
  Vector ddd(27, 0.0);
  ddd[2 * 9 + 2 * 3 + 2] = 1.0;
  for (const auto& n : ds.negatives) EXPECT_NE(n.psi, ddd);
}

TEST(Negatives, ExistenceFlipsOneBit) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const GeneratedDataset ds = make_dataset(FeatureTemplate::label_existence(1), corpus, v, 1);
  expect_disjoint(ds);
  for (const auto& n : ds.negatives) {
    std::size_t best = 99;
    for (const auto& p : ds.positives) {
      std::size_t diff = 0;
      for (std::size_t i = 0; i < n.psi.size(); ++i) diff += n.psi[i] != p.psi[i];
      best = std::min(best, diff);
    }
    EXPECT_EQ(best, 1u);
  }
}

TEST(Negatives, CountsKeepTheSequenceLength) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  const GeneratedDataset ds = make_dataset(FeatureTemplate::label_counts(), corpus, v, 3);
  expect_disjoint(ds);
  ASSERT_FALSE(ds.negatives.empty());
  for (const auto& n : ds.negatives) {
    const double total = n.psi[0] + n.psi[1] + n.psi[2];
    EXPECT_TRUE(total == 4.0 || total == 3.0);
  }
}

TEST(Negatives, WindowSchemes) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  for (auto scheme : {WindowNegativeScheme::enumerate_seen_parts, WindowNegativeScheme::random_label_perturbation}) {
    NegativeOptions opt;
    opt.window_scheme = scheme;
    const GeneratedDataset ds = make_dataset(FeatureTemplate::pos_window(2), corpus, v, 5, opt);
    EXPECT_FALSE(ds.negatives.empty());
    expect_disjoint(ds);
    const GeneratedDataset pw = make_dataset(FeatureTemplate::punctuation_window(1), corpus, v, 5, opt);
    expect_disjoint(pw);
  }
}

TEST(Negatives, CapIsSeededAndOrderPreserving) {
  const auto corpus = tiny_corpus();
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  NegativeOptions opt;
  opt.cap = 10;
  const GeneratedDataset full = make_dataset(FeatureTemplate::pos_window(2), corpus, v, 5);
  const GeneratedDataset a = make_dataset(FeatureTemplate::pos_window(2), corpus, v, 5, opt);
  const GeneratedDataset b = make_dataset(FeatureTemplate::pos_window(2), corpus, v, 5, opt);
  ASSERT_GT(full.negatives.size(), 10u);
  ASSERT_EQ(a.negatives.size(), 10u);
  EXPECT_EQ(a.negatives, b.negatives);
  std::size_t j = 0;
  for (const auto& n : a.negatives) {
    while (j < full.negatives.size() && full.negatives[j].psi != n.psi) ++j;
    EXPECT_LT(j, full.negatives.size());
  }
}

TEST(Negatives, DegenerateCorpusFails) {
  const std::vector<TaggedSequence> corpus{seq({"a", "b"}, {}, {"X", "X"})};
  const LabelVocab v = LabelVocab::from_corpus(corpus);
  EXPECT_THROW(make_dataset(FeatureTemplate::ngram_labels(2), corpus, v, 1), Error);
}

TEST(PairIndicator, EncodesBothBlocks) {
  const Vector v = er::encode_pair(PairRole::source_relation, "Location", "Kill");
  Vector e(10, 0.0);
  e[2] = e[4 + 1] = 1.0;
  EXPECT_EQ(v, e);
  EXPECT_THROW(er::encode_pair(PairRole::source_relation, "Kill", "Kill"), Error);
}

TEST(PairIndicator, ExamplesFromRecords) {
  const std::vector<er::RelationRecord> recs{{"Person", "Kill", "Person", "NoRel"},
                                             {"Person", "LiveIn", "Location", "NoRel"}};
  const GeneratedDataset ds = pair_indicator_examples(recs, PairRole::source_relation);
  // (Person, Kill), (Person, NoRel), (Person, LiveIn), (Location, NoRel)
  EXPECT_EQ(ds.positives.size(), 4u);
  EXPECT_EQ(ds.negatives.size(), 24u - 4u);
  expect_disjoint(ds);
}
