#include <gtest/gtest.h>

#include <random>

#include "aqe/error.hpp"
#include "aqe/query.hpp"

namespace aqe {
namespace {

ErrorKind kind_of(const std::string& sql) {
  try {
    parse(sql);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << sql;
  return ErrorKind::kInvalidArgument;
}

TEST(Parse, ErrorBoundQuery) {
  const BoundedQuery q = parse(
      "SELECT COUNT(*) FROM Sessions WHERE Genre = 'western' GROUP BY OS ERROR WITHIN 10% AT "
      "CONFIDENCE 95%");
  EXPECT_EQ(q.table, "Sessions");
  ASSERT_EQ(q.select.size(), 1u);
  EXPECT_EQ(q.select[0].aggregate.op, AggregateOp::kCount);
  EXPECT_FALSE(q.select[0].aggregate.target.has_value());
  ASSERT_EQ(q.where.size(), 1u);
  EXPECT_EQ(q.where[0][0], (Atom{"Genre", CompareOp::kEq, std::string("western")}));
  EXPECT_EQ(q.group_by, std::vector<std::string>{"OS"});
  EXPECT_EQ(q.bound.kind, Bound::Kind::kError);
  EXPECT_DOUBLE_EQ(q.bound.relative_fraction(), 0.10);
  EXPECT_EQ(q.bound.measure, ErrorMeasure::kRelative);
  EXPECT_DOUBLE_EQ(q.bound.confidence, 0.95);
  EXPECT_TRUE(q.warnings.empty());
}

TEST(Parse, BareErrorBoundWarnsAndIsRelative) {
  // A bound written without a percent sign, plus a
  // backtick-opened string literal.
  const BoundedQuery q = parse(
      "SELECT COUNT(*)\nFROM Sessions\nWHERE Genre = `western'\nGROUP BY OS\nERROR WITHIN 10");
  EXPECT_EQ(q.bound.measure, ErrorMeasure::kRelative);
  EXPECT_DOUBLE_EQ(q.bound.epsilon, 10.0);
  EXPECT_EQ(q.where[0][0].literal, Value(std::string("western")));
  EXPECT_EQ(q.warnings.size(), 1u);
}

TEST(Parse, AbsoluteBoundAndConfidenceForms) {
  const BoundedQuery a = parse("SELECT AVG(x) FROM t ERROR WITHIN 2.5 ABSOLUTE AT CONFIDENCE 0.9");
  EXPECT_EQ(a.bound.measure, ErrorMeasure::kAbsolute);
  EXPECT_DOUBLE_EQ(a.bound.epsilon, 2.5);
  EXPECT_DOUBLE_EQ(a.bound.confidence, 0.9);
  EXPECT_DOUBLE_EQ(parse("SELECT AVG(x) FROM t ERROR WITHIN 5% AT CONFIDENCE 99").bound.confidence, 0.99);
  EXPECT_DOUBLE_EQ(parse("SELECT AVG(x) FROM t ERROR WITHIN 5%", 0.8).bound.confidence, 0.8);
}

TEST(Parse, TimeBoundWithRelativeErrorItem) {
  const BoundedQuery q = parse(
      "SELECT COUNT(*), RELATIVE ERROR AT 95 FROM Sessions WHERE Genre = 'western' GROUP BY OS "
      "WITHIN 5 SECONDS");
  EXPECT_EQ(q.bound.kind, Bound::Kind::kTime);
  EXPECT_DOUBLE_EQ(q.bound.seconds, 5.0);
  ASSERT_EQ(q.select.size(), 2u);
  EXPECT_EQ(q.select[1].kind, SelectItem::Kind::kRelativeError);
  EXPECT_DOUBLE_EQ(q.select[1].confidence, 0.95);
}

TEST(Parse, UnboundedAndSumExample) {
  EXPECT_EQ(parse("SELECT AVG(x) FROM t").bound.kind, Bound::Kind::kNone);
  const BoundedQuery q = parse("SELECT City, SUM(SessionTime) FROM Sessions GROUP BY City WITHIN 5 SECONDS");
  ASSERT_EQ(q.select.size(), 2u);
  EXPECT_EQ(q.select[0].kind, SelectItem::Kind::kColumn);
  EXPECT_EQ(q.select[0].column, "City");
  EXPECT_EQ(q.select[1].aggregate.op, AggregateOp::kSum);
  EXPECT_EQ(*q.select[1].aggregate.target, Expr::col("SessionTime"));
}

TEST(Parse, AggregateSpellings) {
  const BoundedQuery q =
      parse("select mean(a), median(b), quantile(c, 0.9), sum(a * 2 + b) from t");
  EXPECT_EQ(q.select[0].aggregate.op, AggregateOp::kAvg);
  EXPECT_EQ(q.select[0].aggregate.spelling, "MEAN");
  EXPECT_EQ(q.select[1].aggregate.op, AggregateOp::kQuantile);
  EXPECT_DOUBLE_EQ(q.select[1].aggregate.p, 0.5);
  EXPECT_DOUBLE_EQ(q.select[2].aggregate.p, 0.9);
  EXPECT_EQ(*q.select[3].aggregate.target,
            Expr::binary('+', Expr::binary('*', Expr::col("a"), Expr::num(2)), Expr::col("b")));
}

TEST(Parse, PredicatesNormalizeToDnf) {
  const BoundedQuery q = parse("SELECT COUNT(*) FROM t WHERE (a = 1 OR b = 2) AND NOT c >= 3");
  ASSERT_EQ(q.where.size(), 2u);
  EXPECT_EQ(q.where[0], (Conjunction{{"a", CompareOp::kEq, std::int64_t{1}},
                                     {"c", CompareOp::kLt, std::int64_t{3}}}));
  EXPECT_EQ(q.where[1], (Conjunction{{"b", CompareOp::kEq, std::int64_t{2}},
                                     {"c", CompareOp::kLt, std::int64_t{3}}}));
  const BoundedQuery m = parse("SELECT COUNT(*) FROM t WHERE 5 < x AND y <> 'q' AND z != 1.5");
  EXPECT_EQ(m.where[0][0], (Atom{"x", CompareOp::kGt, std::int64_t{5}}));
  EXPECT_EQ(m.where[0][1].op, CompareOp::kNe);
  EXPECT_EQ(m.where[0][2].literal, Value(1.5));
}

TEST(Parse, Errors) {
  EXPECT_EQ(kind_of("SELECT COUNT(*) FROM t ERROR WITHIN 5% WITHIN 3 SECONDS"), ErrorKind::kParse);
  EXPECT_EQ(kind_of("SELECT STDDEV(x) FROM t"), ErrorKind::kParse);
  EXPECT_EQ(kind_of("SELECT COUNT(*) FROM"), ErrorKind::kParse);
  EXPECT_EQ(kind_of("SELECT COUNT(*) FROM t WHERE a = "), ErrorKind::kParse);
  EXPECT_EQ(kind_of("SELECT COUNT(*) FROM t WHERE a LIKE 'x'"), ErrorKind::kParse);
  try {
    parse("SELECT COUNT(*) FRM t");  // positions are 1-based
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("position 17"), std::string::npos) << e.what();
  }
}

TEST(Parse, RoundTrip) {
  const std::vector<std::string> qs = {
      "SELECT COUNT(*) FROM Sessions WHERE Genre = 'western' GROUP BY OS ERROR WITHIN 10%",
      "SELECT COUNT(*), RELATIVE ERROR AT 95 FROM Sessions WHERE Genre = 'western' GROUP BY OS "
      "WITHIN 5 SECONDS",
      "SELECT City, SUM(SessionTime) FROM Sessions GROUP BY City WITHIN 5 SECONDS",
      "SELECT AVG(a / (b - 1)), QUANTILE(c, 0.25) FROM \"odd name\" WHERE (a < 1 OR b >= 2.5) AND "
      "s = 'it''s' ERROR WITHIN 3 ABSOLUTE AT CONFIDENCE 90%",
      "SELECT MEDIAN(-x) FROM t WHERE NOT (a = 1 AND b = 2)",
  };
  for (const auto& s : qs) {
    const BoundedQuery q = parse(s);
    const std::string text = unparse(q);
    EXPECT_EQ(parse(text), q) << text;
    EXPECT_EQ(unparse(parse(text)), text);
  }
}

TEST(Parse, RandomRoundTrip) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> cols = {"a", "b", "c"};
  const std::vector<std::string> ops = {"=", "<>", "<", "<=", ">", ">="};
  for (int i = 0; i < 200; ++i) {
    std::string where;
    const int atoms = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < atoms; ++k) {
      if (k > 0) where += rng() % 2 ? " AND " : " OR ";
      if (rng() % 4 == 0) where += "NOT ";
      where += cols[rng() % 3] + " " + ops[rng() % 6] + " " + std::to_string(rng() % 9);
    }
    const std::string sql = "SELECT SUM(a), COUNT(*) FROM t WHERE " + where + " GROUP BY c";
    const BoundedQuery q = parse(sql);
    EXPECT_EQ(parse(unparse(q)), q) << sql;
  }
}

TEST(Fingerprint, IgnoresBoundOnly) {
  const auto a = parse("SELECT COUNT(*) FROM t WHERE a = 1 ERROR WITHIN 5%");
  const auto b = parse("SELECT COUNT(*) FROM t WHERE a = 1 WITHIN 2 SECONDS");
  const auto c = parse("SELECT COUNT(*) FROM t WHERE a = 2");
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_NE(fingerprint(a), fingerprint(c));
}

TEST(Parse, FilterColumns) {
  const auto q = parse("SELECT SUM(v) FROM t WHERE b = 1 OR a = 2 GROUP BY c, b");
  EXPECT_EQ(q.filter_columns(), (std::vector<std::string>{"b", "a", "c"}));
}

}  // namespace
}  // namespace aqe
