#ifndef AQE_EXECUTOR_HPP
#define AQE_EXECUTOR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aqe/catalog.hpp"
#include "aqe/estimator.hpp"
#include "aqe/exact_sum.hpp"
#include "aqe/query.hpp"
#include "aqe/sampling.hpp"

namespace aqe {

// A scannable row set: the base table, a uniform sample, or one level of a
// sample family. Every row belongs to a stratum with known population and
// rows-read counts.
struct SampleSource {
  enum class Kind { kTable, kUniform, kFamily };

  Kind kind = Kind::kTable;
  std::string id;  // table name, uniform sample name, or family id
  std::string family_name;
  ColumnSet phi;  // stratification columns of a family
  int level = -1;
  std::int64_t cap = 0;
  const Table* rows = nullptr;
  std::vector<BlockRef> blocks;
  const std::vector<std::int64_t>* row_stratum = nullptr;  // null: single stratum 0
  std::vector<double> population;
  std::vector<std::int64_t> read;
  std::int64_t rows_read = 0;
  std::shared_ptr<const void> owner;  // keeps `rows` alive

  std::string label() const;  // "table", "uniform:<name>", "<family>@L<level>"
};

SampleSource table_source(std::shared_ptr<const TableHandle> table);
SampleSource uniform_source(std::shared_ptr<const UniformSample> sample);
SampleSource family_source(std::shared_ptr<const SampleFamily> family, int level);

// Disjunct D_k of a predicate with the earlier disjuncts negated: a row
// matches when every `include` atom holds and no `exclude` conjunction does.
struct Clause {
  Conjunction include;
  std::vector<Conjunction> exclude;
};

// Rows matching any clause pass. An empty list matches everything.
using Filter = std::vector<Clause>;

Filter filter_from_dnf(const std::vector<Conjunction>& dnf);

// What to compute per (group, stratum).
struct ScanSpec {
  Filter filter;
  std::vector<std::string> group_by;
  std::vector<AggregateSpec> aggregates;
};

// Partial aggregate state of one block; merging partials of disjoint block
// sets in block order is what every execution path does.
struct BlockPartial {
  struct Cell {
    std::int64_t matched = 0;
    std::vector<ExactSum> sums;  // per target
    std::vector<double> sum_sq;  // per target
    std::vector<std::vector<double>> values;  // per target that feeds a quantile
  };

  std::size_t group_width = 0;
  std::vector<std::int64_t> cell_keys;  // (group keys..., stratum) per cell
  std::vector<Cell> cells;
  std::vector<std::int64_t> seen_keys;  // group keys of all rows read
  std::int64_t rows = 0;

  std::uint64_t checksum() const;
};

class CompiledScan {
 public:
  CompiledScan(const ScanSpec& spec, const SampleSource& source);
  ~CompiledScan();
  CompiledScan(CompiledScan&&) noexcept;

  BlockPartial scan_block(const BlockRef& block) const;
  bool matches(std::size_t row) const;
  std::size_t target_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ScanResult {
  std::vector<GroupKey> keys;                    // sorted; groups with matches
  std::vector<std::vector<GroupSample>> samples;  // [group][aggregate]
  std::set<GroupKey> seen;                       // group keys among rows read
  std::int64_t rows_read = 0;
  std::int64_t rows_matched = 0;
};

// Folds block partials (in the order given) into per-group samples.
class ScanAccumulator {
 public:
  ScanAccumulator(const ScanSpec& spec, const SampleSource& source);

  void merge(const BlockPartial& partial);
  ScanResult finish() const;

 private:
  const ScanSpec* spec_;
  const SampleSource* source_;
  std::vector<std::size_t> group_cols_;
  std::vector<int> target_of_;  // per aggregate; -1 for COUNT
  std::vector<bool> target_values_;
  std::size_t targets_ = 0;
  GroupIndexer cells_;
  std::vector<BlockPartial::Cell> states_;
  GroupIndexer seen_;
  std::int64_t rows_ = 0;
};

// Scans every block of `source` from scratch.
ScanResult scan_source(const ScanSpec& spec, const SampleSource& source);

// Aggregate-target layout shared by CompiledScan and ScanAccumulator.
struct TargetLayout {
  std::vector<Expr> targets;
  std::vector<bool> keep_values;
  std::vector<int> target_of;  // per aggregate
};
TargetLayout layout_targets(const std::vector<AggregateSpec>& aggregates);

}  // namespace aqe

#endif  // AQE_EXECUTOR_HPP
