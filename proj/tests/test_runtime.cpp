#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aqe/catalog.hpp"
#include "aqe/error.hpp"
#include "aqe/executor.hpp"
#include "aqe/query.hpp"
#include "aqe/runtime.hpp"
#include "aqe/sampling.hpp"
#include "test_support.hpp"

namespace aqe {
namespace {

ScanSpec spec_of(const std::string& sql) {
  const BoundedQuery q = parse(sql);
  return ScanSpec{filter_from_dnf(q.where), q.group_by, q.aggregates()};
}

bool same_result(const ScanResult& a, const ScanResult& b) {
  if (a.keys != b.keys || a.seen != b.seen || a.rows_read != b.rows_read ||
      a.rows_matched != b.rows_matched || a.samples.size() != b.samples.size()) {
    return false;
  }
  for (std::size_t g = 0; g < a.samples.size(); ++g) {
    for (std::size_t k = 0; k < a.samples[g].size(); ++k) {
      const auto& x = a.samples[g][k];
      const auto& y = b.samples[g][k];
      if (x.rows_read != y.rows_read || x.strata.size() != y.strata.size()) return false;
      for (std::size_t s = 0; s < x.strata.size(); ++s) {
        const auto& p = x.strata[s];
        const auto& q = y.strata[s];
        if (p.population != q.population || p.read != q.read || p.matched != q.matched ||
            !(p.sum == q.sum) || p.sum_sq != q.sum_sq || p.values != q.values) {
          return false;
        }
      }
    }
  }
  return true;
}

TEST(LevelRules, ErrorBoundExamples) {
  const std::vector<std::int64_t> caps = {100000, 10000, 1000};
  // n = 5000 with K_m = 1000, n_im = 50 -> 100000: nothing strictly larger.
  EXPECT_EQ(error_bound_level(caps, 2, 5000.0 * 1000 / 50), -1);
  EXPECT_EQ(error_bound_level(caps, 2, 400.0 * 1000 / 50), 1);
  EXPECT_EQ(error_bound_level(caps, 2, 10.0), 2);
  EXPECT_EQ(error_bound_level(caps, 1, 10.0), 1);
}

TEST(LevelRules, TimeBoundExamples) {
  const std::vector<std::int64_t> caps = {100000, 10000, 1000};
  EXPECT_EQ(time_bound_level(caps, std::numeric_limits<double>::infinity()), 0);
  EXPECT_EQ(time_bound_level(caps, 50000.0), 1);
  EXPECT_EQ(time_bound_level(caps, 10000.0), 2);
  EXPECT_EQ(time_bound_level(caps, 1000.0), -1);
}

TEST(Lemma, WorkedValues) {
  std::vector<std::int64_t> caps = family_caps(1024, 2);
  const auto e = lemma_bound_check(caps, 2, 100, LemmaMode::kError);
  EXPECT_EQ(e.chosen_cap, 128);
  EXPECT_NEAR(e.bound, 2.01, 1e-12);
  EXPECT_TRUE(e.holds);
  const auto t = lemma_bound_check(caps, 2, 100, LemmaMode::kTime);
  EXPECT_EQ(t.chosen_cap, 64);
  EXPECT_NEAR(t.bound, 1.0 / std::sqrt(0.49), 1e-12);
  EXPECT_NEAR(t.bound, 1.4286, 1e-4);
  EXPECT_TRUE(t.holds);
  const auto hit = lemma_bound_check(caps, 2, 256, LemmaMode::kError);
  EXPECT_EQ(hit.chosen_cap, 256);
  EXPECT_DOUBLE_EQ(hit.factor, 1.0);
  EXPECT_DOUBLE_EQ(lemma_bound_check(caps, 2, 256, LemmaMode::kTime).factor, 1.0);
  EXPECT_THROW(lemma_bound_check(caps, 2, 2048, LemmaMode::kError), Error);
  EXPECT_THROW(lemma_bound_check(caps, 2, 1, LemmaMode::kTime), Error);
}

class RuntimeFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    table_ = cat_.add_table("t", test::skewed_table(4 * kBlockRows, 60, 99, 1.2));
    g_ = std::make_shared<SampleFamily>(build_family(table_, ColumnSet::parse("g"), 8192, 2, 5));
    gh_ = std::make_shared<SampleFamily>(build_family(table_, ColumnSet::parse("g,h"), 4096, 2, 6));
    h_ = std::make_shared<SampleFamily>(build_family(table_, ColumnSet::parse("h"), 8192, 2, 7));
    cat_.put_family(g_);
    cat_.put_family(gh_);
    cat_.put_family(h_);
    cat_.put_uniform(std::make_shared<UniformSample>(build_uniform(*table_, 0.05, 8)));
  }

  Catalog cat_;
  std::shared_ptr<const TableHandle> table_;
  std::shared_ptr<SampleFamily> g_, gh_, h_;
};

TEST_F(RuntimeFixture, ReuseMatchesScratch) {
  const ScanSpec spec = spec_of("SELECT SUM(v), AVG(v), COUNT(*), QUANTILE(v, 0.3) FROM t WHERE h < 6 GROUP BY g");
  ReuseCache cache;
  const SampleChoice choice{g_, nullptr};
  ReuseStats small;
  const ScanResult a = execute_with_reuse(spec, choice.source(choice.smallest_level()), cache, &small);
  EXPECT_EQ(small.blocks_reused, 0u);
  ReuseStats big;
  const ScanResult b = execute_with_reuse(spec, choice.source(0), cache, &big);
  EXPECT_EQ(big.blocks_reused, small.blocks_computed);
  EXPECT_TRUE(same_result(b, scan_source(spec, choice.source(0))));
  EXPECT_TRUE(same_result(a, scan_source(spec, choice.source(choice.smallest_level()))));
}

TEST_F(RuntimeFixture, CorruptEntryForcesRecompute) {
  const ScanSpec spec = spec_of("SELECT SUM(v) FROM t GROUP BY g");
  ReuseCache cache;
  const SampleSource src = SampleChoice{g_, nullptr}.source(0);
  const ScanResult first = execute_with_reuse(spec, src, cache);
  ASSERT_TRUE(cache.corrupt_for_testing(scan_fingerprint(spec), src.id, src.blocks.front().block_id));
  ReuseStats st;
  const ScanResult second = execute_with_reuse(spec, src, cache, &st);
  EXPECT_EQ(cache.warnings(), 1u);
  EXPECT_EQ(st.blocks_reused, 0u);
  EXPECT_TRUE(same_result(first, second));
}

TEST_F(RuntimeFixture, CacheByteLimitEvicts) {
  const ScanSpec spec = spec_of("SELECT COUNT(*) FROM t GROUP BY g");
  ReuseCache cache(1);
  const SampleSource src = SampleChoice{g_, nullptr}.source(0);
  execute_with_reuse(spec, src, cache);
  EXPECT_LE(cache.size(), 1u);
  ReuseCache unbounded;
  execute_with_reuse(spec, src, unbounded);
  EXPECT_EQ(unbounded.size(), src.blocks.size());
  EXPECT_GT(unbounded.bytes(), 0u);
}

TEST_F(RuntimeFixture, SelectCoveringFamilyWithFewestColumns) {
  ReuseCache cache;
  const auto sel = select_family(spec_of("SELECT COUNT(*) FROM t WHERE g = 3"), "t", cat_, cache);
  EXPECT_TRUE(sel.covers);
  EXPECT_EQ(sel.choice.family, g_);
  EXPECT_TRUE(sel.probes.empty());
  const auto both = select_family(spec_of("SELECT COUNT(*) FROM t WHERE g = 3 GROUP BY h"), "t", cat_, cache);
  EXPECT_EQ(both.choice.family, gh_);
}

TEST_F(RuntimeFixture, SelectByProbeRatio) {
  Catalog cat;
  cat.add_table("t", test::skewed_table(50000, 30, 2));
  auto t = cat.table("t");
  auto fg = std::make_shared<SampleFamily>(build_family(t, ColumnSet::parse("g"), 512, 2, 1));
  auto fh = std::make_shared<SampleFamily>(build_family(t, ColumnSet::parse("h"), 512, 2, 1));
  cat.put_family(fg);
  cat.put_family(fh);
  ReuseCache cache;
  // A rare g value: the family stratified on g sees a larger share of it.
  const auto sel = select_family(spec_of("SELECT AVG(v) FROM t WHERE g = 25 AND v > 0"), "t", cat, cache);
  EXPECT_FALSE(sel.covers);
  EXPECT_EQ(sel.probes.size(), 2u);
  EXPECT_EQ(sel.choice.family, fg);
  // Determinism.
  const auto again = select_family(spec_of("SELECT AVG(v) FROM t WHERE g = 25 AND v > 0"), "t", cat, cache);
  EXPECT_EQ(again.choice.family, fg);
}

TEST_F(RuntimeFixture, UniformOnlyAndNoSamples) {
  Catalog cat;
  auto t = cat.add_table("u", test::skewed_table(1000, 5, 3));
  ReuseCache cache;
  try {
    select_family(spec_of("SELECT COUNT(*) FROM u WHERE g = 1"), "u", cat, cache);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotFound);
  }
  cat.put_uniform(std::make_shared<UniformSample>(build_uniform(*t, 0.5, 1)));
  const auto sel = select_family(spec_of("SELECT COUNT(*) FROM u WHERE g = 1"), "u", cat, cache);
  EXPECT_FALSE(sel.choice.is_family());
  EXPECT_EQ(sel.choice.level_count(), 1);
}

TEST(Disjunction, RewriteIsDisjoint) {
  const BoundedQuery single = parse("SELECT COUNT(*) FROM t WHERE a = 1 AND b = 2");
  EXPECT_EQ(rewrite_disjunction(single).subqueries.size(), 1u);
  EXPECT_DOUBLE_EQ(rewrite_disjunction(single).variance_share, 1.0);

  const BoundedQuery q = parse("SELECT COUNT(*) FROM t WHERE a = 1 OR b = 2");
  const auto r = rewrite_disjunction(q);
  ASSERT_EQ(r.subqueries.size(), 2u);
  EXPECT_DOUBLE_EQ(r.variance_share, 0.5);
  EXPECT_DOUBLE_EQ(r.epsilon_scale, std::sqrt(0.5));
  const auto& second = r.subqueries[1].filter.at(0);
  EXPECT_EQ(second.include, q.where[1]);
  ASSERT_EQ(second.exclude.size(), 1u);
  EXPECT_EQ(second.exclude[0], q.where[0]);

  std::string wide = "SELECT COUNT(*) FROM t WHERE a = 0";
  for (int i = 1; i <= 64; ++i) wide += " OR a = " + std::to_string(i);
  EXPECT_THROW(rewrite_disjunction(parse(wide)), Error);
}

TEST(Disjunction, SubqueriesPartitionMatches) {
  Catalog cat;
  auto t = cat.add_table("t", test::skewed_table(20000, 20, 4));
  const BoundedQuery q = parse("SELECT COUNT(*) FROM t WHERE g < 3 OR h = 2 OR (g = 1 AND h > 5)");
  const auto r = rewrite_disjunction(q);
  const SampleSource src = table_source(t);
  std::int64_t total = 0;
  for (const auto& s : r.subqueries) total += scan_source(s, src).rows_matched;
  const ScanSpec whole{filter_from_dnf(q.where), {}, q.aggregates()};
  EXPECT_EQ(total, scan_source(whole, src).rows_matched);
}

TEST_F(RuntimeFixture, ErrorProfileFollowsRule) {
  ReuseCache cache;
  const ScanSpec spec = spec_of("SELECT AVG(v) FROM t WHERE h = 4 GROUP BY g");
  const SampleChoice choice{h_, nullptr};
  const ConfidenceSpec bound{0.95, 0.05, ErrorMeasure::kRelative};
  const ProfiledRun run = build_error_profile(spec, choice, false, bound, cache);
  const auto& p = run.profile;
  EXPECT_GE(p.rows_matched, 1);
  EXPECT_GE(p.selectivity, 0.0);
  EXPECT_LE(p.selectivity, 1.0);
  const int rule = error_bound_level(h_->caps, p.probe_level, p.target_cap);
  if (p.bound_not_guaranteed) {
    EXPECT_EQ(rule, -1);
    EXPECT_EQ(p.chosen_level, 0);
  } else if (!p.exact) {
    EXPECT_EQ(p.chosen_level, rule);
  }
  EXPECT_EQ(p.chosen_cap, h_->cap(p.chosen_level));
  EXPECT_NE(p.dump().find("chosen"), std::string::npos);
  EXPECT_TRUE(same_result(run.result, scan_source(spec, choice.source(p.chosen_level))));
}

TEST_F(RuntimeFixture, ExactWhenGroupsFitProbe) {
  // A tiny table: every group fits the smallest cap.
  Catalog cat;
  auto t = cat.add_table("s", test::skewed_table(200, 4, 1, 0.0));
  auto f = std::make_shared<SampleFamily>(build_family(t, ColumnSet::parse("g"), 4096, 2, 1));
  ReuseCache cache;
  const ScanSpec spec = spec_of("SELECT SUM(v) FROM s WHERE g = 2");
  const ProfiledRun run = build_error_profile(spec, SampleChoice{f, nullptr}, true,
                                              ConfidenceSpec{0.95, 0.01, ErrorMeasure::kRelative}, cache);
  EXPECT_TRUE(run.profile.exact);
}

TEST_F(RuntimeFixture, ZeroMatchProbeIsMissingGroup) {
  ReuseCache cache;
  try {
    build_error_profile(spec_of("SELECT COUNT(*) FROM t WHERE g = 100000"), SampleChoice{g_, nullptr}, true,
                        ConfidenceSpec{0.95, 0.1, ErrorMeasure::kRelative}, cache);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingGroup);
  }
}

TEST_F(RuntimeFixture, LatencyProfile) {
  ReuseCache cache;
  const ScanSpec spec = spec_of("SELECT COUNT(*) FROM t WHERE v > 3 GROUP BY h");
  const SampleChoice choice{g_, nullptr};
  const ProfiledRun slow = build_latency_profile(spec, choice, false, 1e6, Clock::now(), cache);
  EXPECT_EQ(slow.profile.chosen_level, 0);
  EXPECT_GT(slow.profile.rate, 0.0);
  EXPECT_GE(slow.profile.runs.size(), 2u);
  EXPECT_LE(slow.profile.runs.size(), 3u);

  ReuseCache cold;
  const ProfiledRun rushed = build_latency_profile(spec, choice, false, 1e-9, Clock::now(), cold);
  EXPECT_TRUE(rushed.profile.bound_exceeded || rushed.profile.bound_may_be_exceeded);
  EXPECT_GE(rushed.profile.chosen_level, 1);
  EXPECT_THROW(build_latency_profile(spec, choice, false, 0.0, Clock::now(), cold), Error);
}

}  // namespace
}  // namespace aqe
