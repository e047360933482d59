#include <gtest/gtest.h>

#include <random>

#include "aqe/catalog.hpp"
#include "aqe/error.hpp"
#include "aqe/optimizer.hpp"
#include "aqe/query.hpp"
#include "aqe/sampling.hpp"
#include "test_support.hpp"

namespace aqe {
namespace {

TEST(Templates, WeightsAreRelativeFrequencies) {
  std::vector<BoundedQuery> log;
  for (int i = 0; i < 6; ++i) log.push_back(parse("SELECT COUNT(*) FROM S WHERE City = 'a" + std::to_string(i) + "'"));
  for (int i = 0; i < 5; ++i) log.push_back(parse("SELECT COUNT(*) FROM S WHERE Genre = 'x' GROUP BY City"));
  for (int i = 0; i < 9; ++i) log.push_back(parse("SELECT AVG(t) FROM S GROUP BY OS"));
  log.push_back(parse("SELECT COUNT(*) FROM S"));  // no template
  const WorkloadProfile p = extract_templates(log);
  ASSERT_EQ(p.templates.size(), 3u);
  EXPECT_EQ(p.table, "S");
  EXPECT_EQ(p.templates[0].columns, ColumnSet::parse("City"));
  EXPECT_DOUBLE_EQ(p.templates[0].weight, 0.30);
  EXPECT_EQ(p.templates[1].columns, ColumnSet::parse("City,Genre"));
  EXPECT_DOUBLE_EQ(p.templates[1].weight, 0.25);
  EXPECT_DOUBLE_EQ(p.templates[2].weight, 0.45);
}

TEST(Templates, SingleQueryAndEmptyLog) {
  const std::vector<BoundedQuery> one = {parse("SELECT SUM(x) FROM t WHERE a > 3")};
  const auto p = extract_templates(one);
  ASSERT_EQ(p.templates.size(), 1u);
  EXPECT_DOUBLE_EQ(p.templates[0].weight, 1.0);
  EXPECT_THROW(extract_templates(std::vector<BoundedQuery>{}), Error);
}

TEST(Templates, WorkloadFileRoundTrip) {
  WorkloadProfile p;
  p.table = "my table";
  p.templates = {{ColumnSet::parse("a,b"), 0.25}, {ColumnSet::parse("c"), 0.75}};
  EXPECT_EQ(parse_workload(format_workload(p)), p);
  const auto q = parse_workload("# comment\ntable t\nx 2\ny,z 2\n");
  EXPECT_DOUBLE_EQ(q.templates[0].weight, 0.5);
  EXPECT_THROW(parse_workload("x -1\n"), Error);
  EXPECT_THROW(parse_workload("x 1\nx 2\n"), Error);
}

Table abc_table() {
  Table t(parse_schema("A:int,B:int,C:int,D:int"));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    t.append_row(std::vector<Value>{std::int64_t(rng() % 5), std::int64_t(rng() % 7),
                                    std::int64_t(rng() % 11), std::int64_t(rng() % 3)});
  }
  return t;
}

TEST(Candidates, SubsetsOfTemplates) {
  Catalog cat;
  cat.add_table("t", abc_table());
  WorkloadProfile p;
  p.table = "t";
  p.templates = {{ColumnSet::parse("A,B"), 0.5}, {ColumnSet::parse("C"), 0.5}};
  const CandidateSet set = generate_candidates(p, cat, 100, 2, 2);
  std::vector<ColumnSet> got;
  for (const auto& c : set.candidates) got.push_back(c.phi);
  // D never co-occurs with any template column and is excluded.
  EXPECT_EQ(got, (std::vector<ColumnSet>{ColumnSet::parse("A"), ColumnSet::parse("B"),
                                         ColumnSet::parse("C"), ColumnSet::parse("A,B")}));
  const CandidateSet singles = generate_candidates(p, cat, 100, 2, 1);
  EXPECT_EQ(singles.candidates.size(), 3u);
  EXPECT_EQ(set.candidates[3].distinct, 35);
  EXPECT_EQ(set.candidates[0].delta, 0);  // each A value appears ~400 times >= 100
}

TEST(Coverage, Ratios) {
  TemplateInfo t{ColumnSet::parse("a,b"), 1.0, 100, 10};
  std::vector<Candidate> c = {{ColumnSet::parse("a"), 0, 80, 10, false},
                              {ColumnSet::parse("a,b"), 0, 100, 10, false},
                              {ColumnSet::parse("z"), 0, 5, 10, false}};
  EXPECT_DOUBLE_EQ(coverage_of(t, c, {true, false, false}), 0.8);
  EXPECT_DOUBLE_EQ(coverage_of(t, c, {true, true, false}), 1.0);
  EXPECT_DOUBLE_EQ(coverage_of(t, c, {false, false, true}), 0.0);
}

CandidateSet small_set() {
  CandidateSet s;
  s.table = "t";
  s.table_rows = 1000;
  s.base_cap = 10;
  s.candidates = {{ColumnSet::parse("a"), 5, 50, 300, false},
                  {ColumnSet::parse("b"), 5, 40, 300, false},
                  {ColumnSet::parse("a,b"), 9, 100, 600, false}};
  s.templates = {{ColumnSet::parse("a,b"), 0.6, 100, 9}, {ColumnSet::parse("b"), 0.4, 40, 5}};
  return s;
}

TEST(Solver, TightBudgetMatchesBruteForce) {
  const CandidateSet s = small_set();
  for (double budget : {0.2, 0.3, 0.6, 0.7, 0.9, 1.2}) {
    SolveOptions o;
    o.budget_fraction = budget;
    o.mode = SolverMode::kExact;
    const SamplePlan p = solve_plan(s, o);
    EXPECT_DOUBLE_EQ(p.objective, test::brute_force_objective(s, budget, 1.0)) << budget;
    EXPECT_TRUE(plan_within_budget(p));
    EXPECT_TRUE(p.first_run);
  }
}

TEST(Solver, ZeroDriftFreezesPlan) {
  CandidateSet s = small_set();
  s.candidates[1].exists = true;
  SolveOptions o;
  o.budget_fraction = 5.0;
  o.drift = 0.0;
  const SamplePlan p = solve_plan(s, o);
  EXPECT_EQ(p.chosen, (std::vector<bool>{false, true, false}));
  EXPECT_FALSE(p.first_run);
  EXPECT_TRUE(plan_within_drift(p));
}

TEST(Solver, UnconstrainedChoosesFullCoverage) {
  const CandidateSet s = small_set();
  SolveOptions o;
  o.budget_fraction = 10.0;
  const SamplePlan p = solve_plan(s, o);
  for (double y : p.coverage) EXPECT_DOUBLE_EQ(y, 1.0);
}

TEST(Solver, InfeasibleDriftReported) {
  CandidateSet s = small_set();
  s.candidates[2].exists = true;  // 600 rows exist
  SolveOptions o;
  o.budget_fraction = 0.3;  // 300 rows: the existing family must go
  o.drift = 0.1;            // but only 60 rows may change
  try {
    solve_plan(s, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
  }
}

TEST(Solver, DriftMonotone) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const CandidateSet s = test::random_candidate_set(rng, 10);
    double last = -1.0;
    for (double r : {0.0, 0.25, 0.5, 1.0}) {
      SolveOptions o;
      o.budget_fraction = 0.6;
      o.drift = r;
      try {
        const SamplePlan p = solve_plan(s, o);
        EXPECT_GE(p.objective, last - 1e-12);
        last = p.objective;
      } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
        EXPECT_LT(last, 0.0);  // infeasibility only before any feasible r
      }
    }
  }
}

TEST(Solver, RandomExactEqualsBruteForceAndHeuristicDominated) {
  std::mt19937_64 rng(2024);
  int good = 0;
  int total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const CandidateSet s = test::random_candidate_set(rng, 12);
    SolveOptions o;
    o.budget_fraction = 0.4;
    o.drift = 0.5;
    const double oracle = test::brute_force_objective(s, o.budget_fraction, o.drift);
    if (oracle < 0) continue;
    o.mode = SolverMode::kExact;
    const SamplePlan ex = solve_plan(s, o);
    EXPECT_NEAR(ex.objective, oracle, 1e-9 * std::max(1.0, oracle));
    EXPECT_TRUE(plan_within_budget(ex));
    EXPECT_TRUE(plan_within_drift(ex));
    o.mode = SolverMode::kHeuristic;
    const SamplePlan h = solve_plan(s, o);
    EXPECT_TRUE(plan_within_budget(h));
    EXPECT_TRUE(plan_within_drift(h));
    EXPECT_LE(h.objective, ex.objective + 1e-9);
    ++total;
    if (h.objective >= 0.9 * ex.objective) ++good;
  }
  ASSERT_GT(total, 50);
  EXPECT_GE(good, static_cast<int>(0.95 * total));
}

TEST(Solver, ZeroDeltaCandidateNotNeeded) {
  CandidateSet s = small_set();
  s.candidates.push_back({ColumnSet::parse("c"), 0, 3, 200, false});
  s.templates.push_back({ColumnSet::parse("c"), 0.2, 3, 0});
  SolveOptions o;
  o.budget_fraction = 0.7;
  const SamplePlan with = solve_plan(s, o);
  CandidateSet without = s;
  without.candidates.pop_back();
  EXPECT_DOUBLE_EQ(solve_plan(without, o).objective, with.objective);
}

TEST(Solver, Deterministic) {
  std::mt19937_64 rng(5);
  const CandidateSet s = test::random_candidate_set(rng, 12);
  SolveOptions o;
  o.budget_fraction = 0.5;
  EXPECT_EQ(solve_plan(s, o), solve_plan(s, o));
}

TEST(PlanFile, RoundTrip) {
  test::TempDir dir("plan");
  std::mt19937_64 rng(9);
  const CandidateSet s = test::random_candidate_set(rng, 8);
  SolveOptions o;
  o.budget_fraction = 0.5;
  const SamplePlan p = solve_plan(s, o);
  write_plan(p, dir / "p.plan");
  EXPECT_EQ(read_plan(dir / "p.plan"), p);
  EXPECT_EQ(format_plan(parse_plan(format_plan(p))), format_plan(p));
  // Missing parent directories are created.
  write_plan(p, dir / "nested" / "plans" / "p.plan");
  EXPECT_EQ(read_plan(dir / "nested" / "plans" / "p.plan"), p);
}

}  // namespace
}  // namespace aqe
