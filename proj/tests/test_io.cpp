#include <gtest/gtest.h>

#include <filesystem>

#include "conlearn/io.hpp"
#include "oracles.hpp"

using namespace conlearn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conlearn_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Io, NetRoundTripIsExact) {
  Rng rng(50);
  io::NetFile f{oracle::random_net(rng, 3, 4), io::FeatureSpec{FeatureTemplate::ngram_labels(2), LabelVocab({"A", "B"}, {})}};
  f.net.weights(0, 0) = 0.1;
  f.net.biases[1] = 1.0 / 3.0;
  const io::NetFile back = io::net_from_json(io::parse_json(io::dump(io::to_json(f)), "net"));
  EXPECT_EQ(back.net, f.net);
  EXPECT_EQ(back.features, f.features);
}

TEST(Io, SystemRoundTrip) {
  Rng rng(51);
  io::SystemFile f{extract_system(oracle::random_net(rng, 3, 2)), std::nullopt};
  const io::SystemFile back = io::system_from_json(io::parse_json(io::dump(io::to_json(f)), "sys"));
  EXPECT_EQ(back.system, f.system);
  EXPECT_FALSE(back.features.has_value());
}

TEST(Io, SystemRejectsWrongRowCount) {
  Rng rng(52);
  io::json j = io::to_json(io::SystemFile{extract_system(oracle::random_net(rng, 2, 2)), std::nullopt});
  j["inequalities"].erase(0);
  EXPECT_THROW(io::system_from_json(j), Error);
}

TEST(Io, SystemFeatureDimensionChecked) {
  io::json j = io::to_json(io::SystemFile{ConstraintSystem{3, {}, "manual", std::nullopt},
                                          io::FeatureSpec{FeatureTemplate::ngram_labels(2), LabelVocab({"A", "B"}, {})}});
  EXPECT_THROW(io::system_from_json(j), Error);
}

TEST(Io, FamilyRoundTripWithPartialGold) {
  io::FamilyFile f{generate_family(6, 2, 3, 1), {}};
  f.gold = {Assignment{1, 0, 1, 0, 1, 0}, std::nullopt, Assignment{0, 0, 0, 0, 0, 1}};
  const io::FamilyFile back = io::family_from_json(io::parse_json(io::dump(io::to_json(f)), "fam"));
  EXPECT_EQ(back.family.constraints, f.family.constraints);
  EXPECT_EQ(back.family.witness, f.family.witness);
  ASSERT_EQ(back.family.instances.size(), 3u);
  EXPECT_EQ(back.family.instances[2].costs, f.family.instances[2].costs);
  EXPECT_EQ(back.gold, f.gold);
}

TEST(Io, SequenceModelRoundTrip) {
  Rng rng(53);
  SequenceModel m = oracle::random_model(rng, 3);
  m.emission_weights["w=x"] = {0.1, -0.2, 1e-300};
  EXPECT_EQ(io::sequence_model_from_json(io::parse_json(io::dump(io::to_json(m)), "m")), m);
}

TEST(Io, KindAndVersionChecked) {
  Rng rng(54);
  io::json j = io::to_json(io::NetFile{oracle::random_net(rng, 1, 1), std::nullopt});
  EXPECT_THROW(io::system_from_json(j), Error);
  j["format_version"] = 2;
  EXPECT_THROW(io::net_from_json(j), Error);
  EXPECT_THROW(io::parse_json("{", "x"), Error);
  io::json missing = io::to_json(io::NetFile{oracle::random_net(rng, 1, 1), std::nullopt});
  missing.erase("biases");
  EXPECT_THROW(io::net_from_json(missing), Error);
}

TEST(Io, ConllColumns) {
  std::istringstream in("-DOCSTART- O\n\nSmith NNP Author\n, , Author\n\n\nParsing NN Title\n");
  const auto c = io::read_conll(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].tokens, (std::vector<std::string>{"Smith", ","}));
  EXPECT_EQ(c[0].pos_tags, (std::vector<std::string>{"NNP", ","}));
  EXPECT_EQ(c[0].labels, (std::vector<std::string>{"Author", "Author"}));
  std::istringstream two("a X\nb Y\n");
  const auto t = io::read_conll(two);
  EXPECT_TRUE(t[0].pos_tags.empty());
  EXPECT_EQ(t[0].labels, (std::vector<std::string>{"X", "Y"}));
}

TEST(Io, ConllErrors) {
  std::istringstream ragged("a NN X\nb Y\n");
  try {
    io::read_conll(ragged, "c.conll");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("c.conll: line 2"), std::string::npos);
  }
  std::istringstream single("a\nb\n");
  EXPECT_THROW(io::read_conll(single), Error);
  std::istringstream unlabeled("a\nb\n");
  EXPECT_EQ(io::read_conll(unlabeled, "c", false)[0].tokens.size(), 2u);
}

TEST(Io, ConllRoundTrip) {
  std::istringstream in("Smith NNP Author\n, , Author\n\nParsing NN Title\n");
  const auto c = io::read_conll(in);
  std::istringstream again(io::write_conll(c));
  EXPECT_EQ(io::read_conll(again), c);
}

TEST(Io, EntityRelationRecords) {
  std::istringstream in("# comment\nPerson Kill Person NoRel\n\nLocation NoRel Person LiveIn\n");
  const auto r = io::read_er_records(in);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].reverse_relation, "LiveIn");
  std::istringstream bad("Person Kill Planet NoRel\n");
  EXPECT_THROW(io::read_er_records(bad), Error);
  std::istringstream short_line("Person Kill\n");
  EXPECT_THROW(io::read_er_records(short_line), Error);
}

TEST(Io, AtomicWriteReplacesAndLeavesNoTemp) {
  const fs::path dir = scratch_dir("atomic");
  const fs::path p = dir / "out.json";
  io::write_file_atomic(p, "first");
  io::write_file_atomic(p, "second");
  EXPECT_EQ(io::read_file(p), "second");
  EXPECT_FALSE(fs::exists(dir / "out.json.tmp"));
  EXPECT_THROW(io::write_file_atomic(dir / "missing" / "x", "y"), Error);
  EXPECT_THROW(io::read_file(dir / "nope"), Error);
}

TEST(Io, MissingFileNamesThePath) {
  try {
    io::read_file("/nonexistent/abc.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/abc.json"), std::string::npos);
  }
}

TEST(Io, DoublesRoundTripExactly) {
  const Vector v{0.1, 1.0 / 3.0, -2.5e-17, 123456789.123456789, 5e-324};
  io::json j = v;
  EXPECT_EQ(io::parse_json(io::dump(j), "v").get<Vector>(), v);
}
