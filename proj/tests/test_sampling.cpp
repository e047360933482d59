#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "aqe/catalog.hpp"
#include "aqe/error.hpp"
#include "aqe/sampling.hpp"
#include "test_support.hpp"

namespace aqe {
namespace {

std::shared_ptr<const TableHandle> sessions(Catalog& cat) {
  return cat.add_table("Sessions", test::sessions_table());
}

TEST(Uniform, FullProbabilityIsIdentity) {
  Catalog cat;
  auto h = sessions(cat);
  const UniformSample s = build_uniform(*h, 1.0, 9);
  EXPECT_EQ(s.rows, h->data);
  EXPECT_EQ(s.population, 5);
}

TEST(Uniform, SizeWithinThreeSigma) {
  Catalog cat;
  auto h = cat.add_table("t", test::skewed_table(100000, 50, 1));
  const UniformSample s = build_uniform(*h, 0.5, 1234);
  const double sigma = std::sqrt(100000 * 0.25);
  EXPECT_LE(std::fabs(static_cast<double>(s.rows.row_count()) - 50000.0), 3 * sigma);
}

TEST(Uniform, DeterministicAndValidated) {
  Catalog cat;
  auto h = cat.add_table("t", test::skewed_table(5000, 10, 2));
  EXPECT_EQ(build_uniform(*h, 0.1, 5), build_uniform(*h, 0.1, 5));
  EXPECT_NE(build_uniform(*h, 0.1, 5).rows, build_uniform(*h, 0.1, 6).rows);
  EXPECT_THROW(build_uniform(*h, 0.0, 1), Error);
  EXPECT_THROW(build_uniform(*h, 1.5, 1), Error);
}

TEST(Family, CapsFollowRatio) {
  const auto caps = family_caps(100000, 2);
  ASSERT_EQ(caps.size(), 16u);
  EXPECT_EQ(caps.front(), 100000);
  EXPECT_EQ(caps[1], 50000);
  EXPECT_EQ(caps.back(), 3);
  EXPECT_EQ(family_caps(1000, 10), (std::vector<std::int64_t>{1000, 100, 10}));
  EXPECT_EQ(family_caps(1, 2), (std::vector<std::int64_t>{1}));
  EXPECT_THROW(family_caps(0, 2), Error);
  EXPECT_THROW(family_caps(10, 1), Error);
}

TEST(Family, BrowserExample) {
  Catalog cat;
  auto h = sessions(cat);
  const SampleFamily f = build_family(h, ColumnSet::parse("Browser"), 1, 2, 42);
  ASSERT_EQ(f.level_count(), 1);
  ASSERT_EQ(f.rows.row_count(), 3u);
  const std::size_t browser = f.rows.column_index("Browser");
  std::map<std::string, double> rate;
  for (std::size_t r = 0; r < f.rows.row_count(); ++r) {
    rate[f.rows.column(browser).string_at(r)] = f.rate(r, 0);
  }
  EXPECT_DOUBLE_EQ(rate.at("Firefox"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rate.at("Safari"), 1.0);
  EXPECT_DOUBLE_EQ(rate.at("IE"), 1.0);
}

TEST(Family, LargeCapKeepsWholeTable) {
  Catalog cat;
  auto h = sessions(cat);
  const SampleFamily f = build_family(h, ColumnSet::parse("City"), 8, 2, 1);
  EXPECT_EQ(f.rows.row_count(), 5u);
  for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(f.rate(r, 0), 1.0);
  std::multiset<std::vector<Value>> a;
  std::multiset<std::vector<Value>> b;
  for (std::size_t r = 0; r < 5; ++r) {
    a.insert(f.rows.row(r));
    b.insert(h->data.row(r));
  }
  EXPECT_EQ(a, b);
}

TEST(Family, UnknownColumnRejected) {
  Catalog cat;
  auto h = sessions(cat);
  EXPECT_THROW(build_family(h, ColumnSet::parse("Nope"), 4, 2, 1), Error);
}

TEST(Family, LevelViewCapRule) {
  // One group with F = 5 at cap 3: three rows, each rate 0.6.
  Table t(parse_schema("g:int,v:int"));
  for (int i = 0; i < 5; ++i) t.append_row(std::vector<Value>{std::int64_t{1}, std::int64_t{i}});
  Catalog cat;
  auto h = cat.add_table("t", std::move(t));
  const SampleFamily f = build_family(h, ColumnSet::parse("g"), 6, 2, 3);
  ASSERT_EQ(f.caps, (std::vector<std::int64_t>{6, 3}));
  const LevelView v = sample_at_level(f, 1);
  ASSERT_EQ(v.size(), 3u);
  for (std::size_t r = 0; r < v.size(); ++r) EXPECT_DOUBLE_EQ(v.rate(r), 0.6);
  EXPECT_EQ(sample_at_level(f, 0).size(), 5u);
  EXPECT_THROW(sample_at_level(f, 2), Error);
  EXPECT_THROW(sample_at_level(f, -1), Error);
}

TEST(Family, StructuralInvariants) {
  Catalog cat;
  auto h = cat.add_table("t", test::skewed_table(20000, 40, 11, 1.3));
  const SampleFamily f = build_family(h, ColumnSet::parse("g,h"), 256, 4, 17);
  const auto stats = compute_column_set_stats(h->data, ColumnSet::parse("g,h"));
  for (int level = 0; level < f.level_count(); ++level) {
    const LevelView v = sample_at_level(f, level);
    std::map<std::int64_t, std::int64_t> count;
    for (std::size_t r = 0; r < v.size(); ++r) {
      ++count[v.group(r)];
      EXPECT_LT(v.rank(r), f.cap(level));
    }
    for (std::size_t g = 0; g < f.group_keys.size(); ++g) {
      const std::int64_t freq = stats.frequency_of(f.group_keys[g]);
      EXPECT_EQ(f.group_freq[g], freq);
      EXPECT_EQ(count[static_cast<std::int64_t>(g)], std::min(f.cap(level), freq));
      EXPECT_DOUBLE_EQ(f.group_rate(static_cast<std::int64_t>(g), level),
                       std::min(1.0, double(f.cap(level)) / double(freq)));
    }
    if (level + 1 < f.level_count()) {
      // Level i+1 is a row prefix of level i.
      EXPECT_LE(sample_at_level(f, level + 1).size(), v.size());
    }
  }
  // Blocks of a level never extend past that level's rows.
  for (int level = 0; level < f.level_count(); ++level) {
    std::int64_t rows = 0;
    for (const auto& b : f.level_blocks(level)) rows += b.rows();
    EXPECT_EQ(rows, f.level_rows[static_cast<std::size_t>(level)]);
  }
}

TEST(Family, InclusionFrequency) {
  // F = 10, K = 5: each row is kept with probability 0.5 across seeds.
  Table t(parse_schema("g:int,id:int"));
  for (int i = 0; i < 10; ++i) t.append_row(std::vector<Value>{std::int64_t{0}, std::int64_t{i}});
  Catalog cat;
  auto h = cat.add_table("t", std::move(t));
  std::vector<int> kept(10, 0);
  const int seeds = 500;
  for (int s = 0; s < seeds; ++s) {
    const SampleFamily f = build_family(h, ColumnSet::parse("g"), 5, 5, static_cast<std::uint64_t>(s));
    const std::size_t id = f.rows.column_index("id");
    for (std::size_t r = 0; r < f.rows.row_count(); ++r) ++kept[f.rows.column(id).int_at(r)];
  }
  for (int c : kept) EXPECT_NEAR(c / double(seeds), 0.5, 0.06);
}

TEST(Family, StoreCost) {
  ColumnSetStats s;
  s.columns = ColumnSet::parse("x");
  s.frequency[{std::int64_t{1}}] = 5;
  s.frequency[{std::int64_t{2}}] = 50;
  s.frequency[{std::int64_t{3}}] = 500;
  EXPECT_EQ(family_store_cost(s, 100), 155);
  EXPECT_EQ(family_store_cost(s, 1000), 555);
}

TEST(Family, BuilderStepsMatchOneShot) {
  Catalog cat;
  auto h = cat.add_table("t", test::skewed_table(3 * kBlockRows + 100, 30, 4));
  FamilyBuilder b(h, ColumnSet::parse("g"), 1000, 2, 8);
  int steps = 0;
  while (b.step()) ++steps;
  EXPECT_GE(steps, 3);
  EXPECT_EQ(b.take(), build_family(h, ColumnSet::parse("g"), 1000, 2, 8));
}

TEST(Refresh, SameSeedSameRowsNewSeedSwaps) {
  Catalog cat;
  auto h = cat.add_table("t", test::skewed_table(5000, 20, 4));
  auto f = std::make_shared<SampleFamily>(build_family(h, ColumnSet::parse("g"), 64, 2, 1));
  cat.put_family(f);
  auto same = refresh_family(cat, *f, 1);
  EXPECT_EQ(same->rows, f->rows);
  EXPECT_GT(same->generation, f->generation);

  RefreshTask task(cat, *same, 2);
  task.pause();
  EXPECT_TRUE(task.run_quantum());
  EXPECT_EQ(cat.family(f->name)->generation, same->generation);  // old one readable
  task.resume();
  task.run_to_completion();
  EXPECT_TRUE(task.finished());
  auto fresh = cat.family(f->name);
  EXPECT_EQ(fresh->seed, 2u);
  EXPECT_NE(fresh->rows, f->rows);
  EXPECT_EQ(fresh->caps, f->caps);
}

TEST(Zipf, OverheadMatchesDirectSum) {
  // Small instance summed term by term: M = 1000, s = 1.5, K = 50.
  const double M = 1000.0;
  const double s = 1.5;
  const double K = 50.0;
  std::int64_t m = 0;
  while (std::pow(double(m + 1), s) <= M + 1e-9) ++m;  // 100 distinct values
  EXPECT_EQ(m, 100);
  double kept = 0.0;
  double total = 0.0;
  for (std::int64_t x = 1; x <= m; ++x) {
    const double f = M / std::pow(double(x), s);
    kept += std::min(K, f);
    total += f;
  }
  EXPECT_NEAR(zipf_overhead(s, M, K), kept / total, 1e-9);
  EXPECT_THROW(zipf_overhead(0.5, M, K), Error);
  EXPECT_THROW(zipf_overhead(1.5, 10, 100), Error);
}

TEST(Zipf, StoreCostOfSimulatedColumn) {
  // A materialized Zipf column: store cost / N agrees with the analytic ratio.
  const double M = 20000.0;
  const double s = 1.6;
  const std::int64_t K = 200;
  std::int64_t m = 0;
  while (std::pow(double(m + 1), s) <= M) ++m;
  ColumnSetStats st;
  st.columns = ColumnSet::parse("x");
  std::int64_t n = 0;
  for (std::int64_t x = 1; x <= m; ++x) {
    const auto f = static_cast<std::int64_t>(std::llround(M / std::pow(double(x), s)));
    st.frequency[{x}] = std::max<std::int64_t>(f, 1);
    n += std::max<std::int64_t>(f, 1);
  }
  const double simulated = double(family_store_cost(st, K)) / double(n);
  EXPECT_NEAR(simulated / zipf_overhead(s, M, double(K)), 1.0, 0.01);
}

}  // namespace
}  // namespace aqe
