#include <gtest/gtest.h>

#include <fstream>

#include "bnrl/csv.hpp"
#include "bnrl/data.hpp"
#include "bnrl/strings.hpp"
#include "support.hpp"

using namespace bnrl;
using bnrl::testing::Rows;
using bnrl::testing::make_dataset;
using bnrl::testing::TempDir;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST(LoadProfiles, LevelsArePooledAndSorted) {
  const auto data = make_dataset({"state"}, {{{"CA"}, {"NY"}}, {{"CA"}, {"MI"}}});
  ASSERT_EQ(data.fields.size(), 1u);
  EXPECT_EQ(data.fields[0].levels, (std::vector<std::string>{"CA", "MI", "NY"}));
  EXPECT_NEAR(data.fields[0].empirical_freq[0], 0.5, 1e-15);
  EXPECT_NEAR(data.fields[0].empirical_freq[1], 0.25, 1e-15);
  EXPECT_NEAR(data.fields[0].empirical_freq[2], 0.25, 1e-15);
}

TEST(LoadProfiles, ReadsCsvAndKeepsRowOrder) {
  TempDir dir("profiles");
  write_text(dir.file("a.csv"), "record_id,state,name\nx1,CA,ann\nx2,NY,bob\nx3,CA,\nx4,MI,dan\n");
  write_text(dir.file("b.csv"), "record_id,state,name\ny1,MI,ann\n");
  std::vector<FieldSpec> fields;
  std::vector<ProfileTable> tables;
  load_profiles({dir.file("a.csv"), dir.file("b.csv")}, {{"name", FieldKind::StringValued}}, fields, tables);
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(tables[0].n_records(), 4);
  EXPECT_EQ(tables[0].record_ids[3], "x4");
  EXPECT_EQ(fields[1].kind, FieldKind::StringValued);
  EXPECT_EQ(tables[0].at(2, 1), kMissing);
  EXPECT_EQ(fields[0].levels[tables[0].at(1, 0)], "NY");
  for (const auto& f : fields) {
    double sum = 0.0;
    for (double v : f.empirical_freq) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(LoadProfiles, RejectsBadInput) {
  TempDir dir("bad_profiles");
  write_text(dir.file("ragged.csv"), "record_id,a,b\nx1,1\n");
  write_text(dir.file("empty.csv"), "");
  write_text(dir.file("ok.csv"), "record_id,a\nx1,1\n");
  std::vector<FieldSpec> fields;
  std::vector<ProfileTable> tables;
  EXPECT_THROW(load_profiles({dir.file("ragged.csv")}, {}, fields, tables), LoadError);
  EXPECT_THROW(load_profiles({dir.file("empty.csv")}, {}, fields, tables), LoadError);
  EXPECT_THROW(load_profiles({dir.file("ok.csv")}, {{"zzz", FieldKind::StringValued}}, fields, tables), LoadError);
  EXPECT_THROW(load_profiles({dir.file("missing.csv")}, {}, fields, tables), LoadError);
}

TEST(LoadNetwork, SymmetrizesAndDeduplicates) {
  const auto g = parse_network("1 2\n2 1\n# comment\n2,3\n", 3);
  EXPECT_EQ(g.n_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_TRUE(g.has_edge(2, 1));
}

TEST(LoadNetwork, RejectsSelfLoopsAndRange) {
  EXPECT_THROW(parse_network("3 3\n", 4), LoadError);
  EXPECT_THROW(parse_network("1 5\n", 4), LoadError);
  EXPECT_THROW(parse_network("0 1\n", 4), LoadError);
}

TEST(LoadNetwork, EmptyFileGivesEmptyGraph) {
  TempDir dir("empty_net");
  write_text(dir.file("g.txt"), "");
  const auto g = load_network(dir.file("g.txt"), 5);
  EXPECT_EQ(g.n_actors(), 5);
  EXPECT_EQ(g.n_edges(), 0u);
  EXPECT_DOUBLE_EQ(summary_statistics(g).density, 0.0);
}

TEST(SummaryStatistics, Triangle) {
  const auto s = summary_statistics(parse_network("1 2\n2 3\n1 3\n", 3));
  EXPECT_DOUBLE_EQ(s.density, 1.0);
  ASSERT_TRUE(s.clustering);
  EXPECT_DOUBLE_EQ(*s.clustering, 1.0);
  EXPECT_FALSE(s.assortativity);  // every degree equals 2
}

TEST(SummaryStatistics, Star) {
  const auto s = summary_statistics(parse_network("1 2\n1 3\n1 4\n", 4));
  ASSERT_TRUE(s.clustering);
  EXPECT_DOUBLE_EQ(*s.clustering, 0.0);
  ASSERT_TRUE(s.assortativity);
  EXPECT_NEAR(*s.assortativity, -1.0, 1e-12);
}

TEST(SummaryStatistics, PathOnThreeNodes) {
  const auto s = summary_statistics(parse_network("1 2\n2 3\n", 3));
  EXPECT_NEAR(s.density, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(*s.clustering, 0.0);
}

TEST(SummaryStatistics, AssortativityAgainstHandComputation) {
  // Path 1-2-3-4: edge degree pairs (1,2), (2,2), (2,1), each counted both ways.
  const auto s = summary_statistics(parse_network("1 2\n2 3\n3 4\n", 4));
  const std::vector<std::pair<double, double>> ends{{1, 2}, {2, 1}, {2, 2}, {2, 2}, {2, 1}, {1, 2}};
  double mx = 0, my = 0;
  for (auto [x, y] : ends) mx += x, my += y;
  mx /= ends.size();
  my /= ends.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (auto [x, y] : ends) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
  }
  ASSERT_TRUE(s.assortativity);
  EXPECT_NEAR(*s.assortativity, sxy / std::sqrt(sxx * syy), 1e-12);
}

TEST(RoundTrip, ProfilesAndNetworks) {
  TempDir dir("roundtrip");
  auto data = make_dataset({"a", "b"}, {{{"x", "p"}, {"y", ""}, {"x", "q"}}, {{"z", "p"}}});
  bnrl::testing::attach_networks(data, {{{0, 1}, {1, 2}}, {}});
  write_profiles(dir.file("p0.csv"), data.profiles[0], data.fields);
  write_profiles(dir.file("p1.csv"), data.profiles[1], data.fields);
  write_network(dir.file("n0.txt"), data.networks[0]);
  write_network(dir.file("n1.txt"), data.networks[1]);
  const auto back = load_dataset({dir.file("p0.csv"), dir.file("p1.csv")}, {dir.file("n0.txt"), dir.file("n1.txt")}, {});
  ASSERT_EQ(back.n_files(), 2);
  for (int j = 0; j < 2; ++j) {
    EXPECT_EQ(back.profiles[j].cells, data.profiles[j].cells);
    EXPECT_EQ(back.profiles[j].record_ids, data.profiles[j].record_ids);
    EXPECT_TRUE(back.networks[j] == data.networks[j]);
  }
  EXPECT_EQ(back.fields[0].levels, data.fields[0].levels);
}

TEST(RecordPairs, RoundTripAndValidation) {
  TempDir dir("pairs");
  const auto pairs = bnrl::testing::pairs_of({{0, 0, 1, 2}, {0, 1, 1, 0}});
  write_record_pairs(dir.file("t.csv"), pairs);
  const auto back = load_record_pairs(dir.file("t.csv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.pairs[0].second.index, 2);
  EXPECT_NO_THROW(validate_record_pairs(back, {2, 3}));
  EXPECT_THROW(validate_record_pairs(back, {2, 2}), Error);
  EXPECT_THROW(validate_record_pairs(bnrl::testing::pairs_of({{0, 0, 0, 1}}), {2, 2}), Error);
  EXPECT_THROW(validate_record_pairs(bnrl::testing::pairs_of({{0, 0, 1, 0}, {0, 0, 1, 1}}), {2, 2}), Error);
}

TEST(Dataset, GlobalIndexing) {
  const auto data = make_dataset({"a"}, {{{"1"}, {"2"}}, {{"3"}, {"4"}, {"5"}}});
  EXPECT_EQ(data.total_records(), 5);
  EXPECT_EQ(data.global_index({1, 2}), 4);
  EXPECT_EQ(data.ref_of(3), (RecordRef{1, 1}));
  EXPECT_EQ(data.cross_file_pairs(), 6);
}

TEST(EditDistance, Unicode) {
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3);
  EXPECT_EQ(edit_distance("", "abc"), 3);
  EXPECT_EQ(edit_distance("caf\xc3\xa9", "cafe"), 1);  // one code point differs
  EXPECT_EQ(edit_distance("Ab", "ab"), 1);
}

TEST(Csv, QuotedFields) {
  const auto f = csv::split_line("a,\"b,c\",\"d\"\"e\"");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d\"e");
}
