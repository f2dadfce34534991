#include <psymeter/data.hpp>
#include <psymeter/error.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace psymeter;

namespace {

ScaleSpec likert05() {
  ScaleSpec s;
  s.min_score = 0;
  s.max_score = 5;
  return s;
}

ResponseMatrix parse(const std::string& text, const ScaleSpec& spec = likert05(),
                     const std::set<std::string>& aux = {}) {
  std::istringstream in(text);
  return read_csv(in, spec, aux);
}

}  // namespace

TEST(Csv, FullGridHasNoMissingCells) {
  auto m = parse("participant_id,q1,q2\na,1,2\nb,3,4\nc,5,0\n");
  EXPECT_EQ(m.n_participants(), 3u);
  EXPECT_EQ(m.n_items(), 2u);
  EXPECT_EQ(m.missing_count(), 0u);
  EXPECT_EQ(m.participants()[2], "c");
  EXPECT_EQ(*m.cell(1, 1), 4.0);
}

TEST(Csv, EmptyCellIsMissingAtItsPosition) {
  auto m = parse("participant_id,q1,q2\na,1,\nb,3,4\nc,5,0\n");
  EXPECT_EQ(m.missing_count(), 1u);
  EXPECT_TRUE(m.missing(0, 1));
  EXPECT_FALSE(m.missing(0, 0));
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  try {
    parse("q1,q2,q3\n1,2,abc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), "q3");
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("\"q3\""), std::string::npos);
  }
}

TEST(Csv, RaggedRowIsParseError) {
  EXPECT_THROW(parse("q1,q2\n1,2\n3\n"), ParseError);
}

TEST(Csv, DuplicateItemIdsRejected) {
  EXPECT_THROW(parse("q1,q1\n1,2\n"), DataError);
}

TEST(Csv, ColumnOrderPreservedAndIdsSynthesized) {
  auto m = parse("z,a,m\n1,2,3\n4,5,0\n");
  EXPECT_EQ(m.items(), (std::vector<std::string>{"z", "a", "m"}));
  EXPECT_EQ(m.participants(), (std::vector<std::string>{"1", "2"}));
}

TEST(Csv, QuotedFieldsAndCrlf) {
  auto m = parse("participant_id,\"q,1\",q2\r\n\"x \"\"y\"\"\",1,2\r\n");
  EXPECT_EQ(m.items()[0], "q,1");
  EXPECT_EQ(m.participants()[0], "x \"y\"");
}

TEST(Csv, GroupColumnKeptAsAuxiliary) {
  auto spec = likert05();
  spec.group_column = "grp";
  auto m = parse("participant_id,q1,grp,q2\na,1,m,2\nb,3,f,4\n", spec);
  EXPECT_EQ(m.n_items(), 2u);
  EXPECT_EQ(m.aux().at("grp"), (std::vector<std::string>{"m", "f"}));
  EXPECT_THROW(parse("participant_id,q1\na,1\n", spec), DataError);
}

TEST(Csv, WriteReadRoundTrip) {
  auto m = parse("participant_id,q1,q2\na,1.25,\nb,3,4\n");
  std::ostringstream out;
  write_csv(out, m);
  EXPECT_EQ(parse(out.str()), m);
}

TEST(ListwiseDelete, NoMissingIsIdentity) {
  auto m = parse("q1,q2\n1,2\n3,4\n");
  auto r = listwise_delete(m);
  EXPECT_EQ(r.matrix, m);
  EXPECT_EQ(r.dropped, 0u);
}

TEST(ListwiseDelete, DropsIncompleteRows) {
  auto m = parse("q1,q2\n1,2\n,4\n3,4\n5,\n0,1\n");
  auto r = listwise_delete(m);
  EXPECT_EQ(r.matrix.n_participants(), 3u);
  EXPECT_EQ(r.dropped, 2u);
  EXPECT_EQ(r.matrix.items(), m.items());
  EXPECT_EQ(r.matrix.participants(), (std::vector<std::string>{"1", "3", "5"}));
}

TEST(ListwiseDelete, AllRowsDroppedThrows) {
  auto m = parse("q1,q2\n1,\n,4\n");
  EXPECT_THROW(listwise_delete(m), EmptyDatasetError);
}

TEST(ListwiseDelete, Idempotent) {
  auto m = parse("q1,q2,g\n1,2,a\n,4,b\n3,4,c\n", likert05(), {"g"});
  auto once = listwise_delete(m).matrix;
  auto twice = listwise_delete(once);
  EXPECT_EQ(twice.matrix, once);
  EXPECT_EQ(twice.dropped, 0u);
  EXPECT_EQ(once.aux().at("g"), (std::vector<std::string>{"a", "c"}));
}

TEST(Scoring, ReverseKeyBoundaryAndInterior) {
  auto spec = likert05();
  spec.reverse_keyed = {"q1"};
  auto s = score(parse("q1,q2\n5,5\n2,2\n"), spec);
  EXPECT_EQ(s.scores()(0, 0), 0.0);
  EXPECT_EQ(s.scores()(1, 0), 3.0);
  EXPECT_EQ(s.scores()(0, 1), 5.0);
}

TEST(Scoring, ReverseKeyingIsAnInvolution) {
  auto spec = likert05();
  spec.reverse_keyed = {"q1", "q3"};
  auto m = parse("q1,q2,q3\n0,1,2\n3,,5\n4,4,1\n");
  EXPECT_EQ(apply_reverse_keying(apply_reverse_keying(m, spec), spec), m);
}

TEST(Scoring, UnknownReverseKeyedItemRejected) {
  auto spec = likert05();
  spec.reverse_keyed = {"nope"};
  EXPECT_THROW(score(parse("q1\n1\n"), spec), UsageError);
}

TEST(Scoring, KnowledgeItemsScoredAgainstKey) {
  ScaleSpec spec;
  spec.min_score = 1;
  spec.max_score = 4;
  spec.test_type = TestType::knowledge;
  spec.key = std::map<std::string, double>{{"q1", 3.0}, {"q2", 1.0}};
  auto s = score(parse("q1,q2\n3,1\n2,1\n3,4\n"), spec);
  EXPECT_EQ(s.test_type(), TestType::knowledge);
  EXPECT_EQ(s.scores()(0, 0), 1.0);
  EXPECT_EQ(s.scores()(1, 0), 0.0);
  EXPECT_EQ(s.scores()(2, 1), 0.0);
  EXPECT_EQ(s.totals()(0), 2.0);
}

TEST(Scoring, TotalsAreExactRowSums) {
  auto spec = likert05();
  spec.reverse_keyed = {"q2"};
  auto m = parse("q1,q2,q3\n0.1,0.2,0.3\n1,2,3\n5,4,0\n");
  auto s = score(m, spec);
  for (Eigen::Index r = 0; r < s.scores().rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < s.scores().cols(); ++j) sum += s.scores()(r, j);
    EXPECT_EQ(s.totals()(r), sum);
  }
  EXPECT_EQ(s.n_participants(), m.n_participants());
  EXPECT_EQ(s.n_items(), m.n_items());
  EXPECT_GE(s.scores().minCoeff(), 0.0);
  EXPECT_LE(s.scores().maxCoeff(), 5.0);
}

TEST(Scoring, OutOfRangeCellNamed) {
  try {
    score(parse("participant_id,q1\nann,7\n"), likert05());
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("'ann'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'q1'"), std::string::npos);
  }
}

TEST(Scoring, MissingCellRejected) {
  EXPECT_THROW(score(parse("q1,q2\n1,\n"), likert05()), DataError);
}

TEST(ScaleSpec, KeyRulesByTestType) {
  ScaleSpec s = likert05();
  s.key = std::map<std::string, double>{};
  EXPECT_THROW(s.validate(), UsageError);
  s.test_type = TestType::knowledge;
  EXPECT_NO_THROW(s.validate());
  s.key.reset();
  EXPECT_THROW(s.validate(), UsageError);
  ScaleSpec bad;
  bad.min_score = 3;
  bad.max_score = 3;
  EXPECT_THROW(bad.validate(), UsageError);
}

TEST(ScoredTest, SelectItemsRecomputesTotals) {
  auto s = score(parse("a,b,c\n1,2,3\n4,5,0\n"), likert05());
  auto sub = s.select_items({2, 0});
  EXPECT_EQ(sub.items(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(sub.totals()(0), 4.0);
  EXPECT_THROW(s.column("zz"), UsageError);
}
