#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "aqe/block_io.hpp"
#include "aqe/catalog.hpp"
#include "aqe/error.hpp"
#include "aqe/exact_sum.hpp"
#include "aqe/manifest.hpp"
#include "aqe/optimizer.hpp"
#include "aqe/sampling.hpp"
#include "test_support.hpp"

namespace aqe {
namespace {

TEST(Schema, ParseAndFormat) {
  const Schema s = parse_schema("a:int, b:float,c:string");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].type, ColumnType::kInteger);
  EXPECT_EQ(s[1].type, ColumnType::kFloat);
  EXPECT_EQ(s[2].name, "c");
  EXPECT_EQ(parse_schema(format_schema(s)), s);
  EXPECT_THROW(parse_schema("a:blob"), Error);
  EXPECT_THROW(parse_schema("a:int,a:int"), Error);
}

TEST(ColumnSetTest, SetSemantics) {
  const ColumnSet a = ColumnSet::parse("b,a");
  const ColumnSet b = ColumnSet::parse("a,b,c");
  EXPECT_TRUE(a.subset_of(b));
  EXPECT_FALSE(b.subset_of(a));
  EXPECT_TRUE(a.same_set(ColumnSet::parse("a,b")));
  EXPECT_EQ(a.canonical().to_string(), "a,b");
  EXPECT_THROW(ColumnSet::parse("a,a"), Error);
  EXPECT_THROW(ColumnSet(std::vector<std::string>{}), Error);
}

TEST(Csv, ReadsQuotedFields) {
  test::TempDir dir("csv");
  test::write_file(dir / "t.csv",
                   "name,n,x\n\"a, b\",1,0.5\n\"say \"\"hi\"\"\",2,1.5\nplain,3,2\n");
  const Table t = read_csv(dir / "t.csv", parse_schema("name:string,n:int,x:float"));
  ASSERT_EQ(t.row_count(), 3u);
  EXPECT_EQ(t.column(0).string_at(0), "a, b");
  EXPECT_EQ(t.column(0).string_at(1), "say \"hi\"");
  EXPECT_EQ(t.column(1).int_at(2), 3);
  EXPECT_DOUBLE_EQ(t.column(2).float_at(1), 1.5);
}

TEST(Csv, ErrorsNameTheLine) {
  test::TempDir dir("csvbad");
  test::write_file(dir / "t.csv", "n\n1\nx\n");
  try {
    read_csv(dir / "t.csv", parse_schema("n:int"));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_csv(dir / "missing.csv", parse_schema("n:int")), Error);
}

TEST(Blocks, PartitionCoversRange) {
  const auto blocks = partition_blocks(0, 3 * kBlockRows + 5);
  ASSERT_EQ(blocks.size(), 4u);
  EXPECT_EQ(blocks.back().rows(), 5);
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    EXPECT_EQ(blocks[i].row_begin, blocks[i - 1].row_end);
    EXPECT_EQ(blocks[i].block_id, static_cast<std::int64_t>(i));
  }
  EXPECT_TRUE(partition_blocks(7, 7).empty());
}

TEST(Blocks, RoundTripAndChecksum) {
  test::TempDir dir("block");
  const Table t = test::sessions_table();
  std::vector<std::int64_t> extra = {10, 20, 30, 40, 50};
  const auto sum = write_block(dir / "b0", t, 1, 4, {&extra});
  Table back = Table::sharing_dictionaries(t);
  std::vector<std::int64_t> extra_back;
  read_block(dir / "b0", sum, back, {&extra_back});
  ASSERT_EQ(back.row_count(), 3u);
  EXPECT_EQ(back.row(0), t.row(1));
  EXPECT_EQ(extra_back, (std::vector<std::int64_t>{20, 30, 40}));

  Table again = Table::sharing_dictionaries(t);
  EXPECT_THROW(read_block(dir / "b0", sum + 1, again), Error);
  try {
    read_block(dir / "nope", sum, again);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Stats, FrequenciesAreExact) {
  Catalog cat;
  auto h = cat.add_table("Sessions", test::sessions_table());
  auto s = cat.stats("Sessions", ColumnSet::parse("City"));
  EXPECT_EQ(s->distinct(), 3);
  EXPECT_EQ(s->total(), 5);
  EXPECT_EQ(s->frequency_of({std::string("New York")}), 3);
  EXPECT_EQ(s->frequency_of({std::string("Paris")}), 0);
  auto b = cat.stats("Sessions", ColumnSet::parse("Browser,City"));
  EXPECT_EQ(b->frequency_of({std::string("Firefox"), std::string("New York")}), 2);
  EXPECT_THROW(cat.stats("Sessions", ColumnSet::parse("Nope")), Error);
  EXPECT_THROW(cat.stats("Missing", ColumnSet::parse("City")), Error);
}

TEST(CatalogTest, DuplicateTableRejected) {
  Catalog cat;
  cat.add_table("t", test::sessions_table());
  try {
    cat.add_table("t", test::sessions_table());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAlreadyExists);
  }
  EXPECT_TRUE(cat.has_table("t"));
  EXPECT_EQ(cat.table_names(), std::vector<std::string>{"t"});
}

TEST(Manifest, PersistAndReload) {
  test::TempDir dir("manifest");
  {
    Catalog cat(dir.path());
    auto h = cat.add_table("Sessions", test::sessions_table());
    cat.stats("Sessions", ColumnSet::parse("City"));
    cat.put_family(std::make_shared<SampleFamily>(
        build_family(h, ColumnSet::parse("Browser"), 2, 2, 7)));
    cat.put_uniform(std::make_shared<UniformSample>(build_uniform(*h, 0.5, 3)));
    persist_manifest(cat);
  }
  auto loaded = load_manifest(dir.path());
  ASSERT_TRUE(loaded->has_table("Sessions"));
  EXPECT_EQ(loaded->table("Sessions")->data, test::sessions_table());
  auto fam = loaded->family(family_name("Sessions", ColumnSet::parse("Browser")));
  ASSERT_NE(fam, nullptr);
  EXPECT_EQ(fam->caps, (std::vector<std::int64_t>{2}));
  EXPECT_EQ(fam->rows.row_count(), 4u);
  ASSERT_NE(loaded->uniform_for("Sessions"), nullptr);
  EXPECT_EQ(loaded->stats_snapshot("Sessions").at(ColumnSet::parse("City")).distinct(), 3);

  // A second persist of the reloaded catalog yields the same manifest text.
  std::ifstream in(dir / kManifestName);
  const std::string first((std::istreambuf_iterator<char>(in)), {});
  persist_manifest(*loaded);
  std::ifstream in2(dir / kManifestName);
  const std::string second((std::istreambuf_iterator<char>(in2)), {});
  EXPECT_EQ(first, second);
}

TEST(Manifest, DetectsCorruptionAndMissingFiles) {
  test::TempDir dir("manifest-bad");
  std::string block_path;
  {
    Catalog cat(dir.path());
    auto h = cat.add_table("Sessions", test::sessions_table());
    block_path = h->blocks.front().path;
    persist_manifest(cat);
  }
  {
    std::fstream f(dir / block_path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  try {
    load_manifest(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCorrupt);
  }
  std::filesystem::remove(dir / block_path);
  try {
    load_manifest(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("missing block file"), std::string::npos);
  }
}

TEST(Manifest, VersionMismatch) {
  test::TempDir dir("manifest-ver");
  test::write_file(dir / kManifestName, "aqe-manifest 999\n");
  try {
    load_manifest(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kVersionMismatch);
  }
}

TEST(ExactSumTest, OrderIndependentAndCorrectlyRounded) {
  std::vector<double> xs = {1e100, 1.0, -1e100, 1e-3, 3.5, -2.25, 1e16, 1.0, -1e16};
  ExactSum a;
  for (double x : xs) a.add(x);
  ExactSum b;
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) b.add(*it);
  EXPECT_EQ(a.value(), b.value());
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.value(), test::fsum(xs));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> ys;
  for (int i = 0; i < 10000; ++i) ys.push_back(u(rng) * std::pow(10.0, i % 30 - 15));
  ExactSum whole;
  ExactSum left;
  ExactSum right;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    whole.add(ys[i]);
    (i % 3 == 0 ? left : right).add(ys[i]);
  }
  left.merge(right);
  EXPECT_EQ(left.value(), whole.value());
  EXPECT_EQ(whole.value(), test::fsum(ys));
}

}  // namespace
}  // namespace aqe
