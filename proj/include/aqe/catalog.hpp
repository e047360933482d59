#ifndef AQE_CATALOG_HPP
#define AQE_CATALOG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "aqe/column_set.hpp"
#include "aqe/table.hpp"
#include "aqe/value.hpp"

namespace aqe {

struct SampleFamily;
struct UniformSample;
struct SamplePlan;

inline constexpr std::int64_t kBlockRows = 65536;

/// A contiguous run of rows stored in one block file. `path` is relative to
/// the catalog root and empty until the block has been written.
struct BlockRef {
  std::int64_t block_id = 0;
  std::int64_t row_begin = 0;
  std::int64_t row_end = 0;
  std::string path;
  std::uint64_t checksum = 0;

  std::int64_t rows() const { return row_end - row_begin; }
  friend bool operator==(const BlockRef&, const BlockRef&) = default;
};

/// Splits [begin, end) into consecutive blocks of at most kBlockRows rows.
std::vector<BlockRef> partition_blocks(std::int64_t begin, std::int64_t end,
                                       std::int64_t first_id = 0);

/// File-name-safe form of `name` with a hash suffix that keeps it unique.
std::string safe_path_component(const std::string& name);

struct TableHandle {
  std::string name;
  Schema schema;
  std::int64_t row_count = 0;
  std::vector<BlockRef> blocks;
  Table data;

  friend bool operator==(const TableHandle&, const TableHandle&) = default;
};

/// Exact frequency histogram of one column set.
struct ColumnSetStats {
  ColumnSet columns;
  std::map<GroupKey, std::int64_t> frequency;

  std::int64_t distinct() const { return static_cast<std::int64_t>(frequency.size()); }
  std::int64_t total() const;
  std::int64_t frequency_of(const GroupKey& key) const;

  friend bool operator==(const ColumnSetStats&, const ColumnSetStats&) = default;
};

struct ColumnStats {
  std::string table;
  std::int64_t row_count = 0;
  double average_row_bytes = 0.0;
  std::map<ColumnSet, ColumnSetStats> sets;  // keyed by the requested (ordered) set

  const ColumnSetStats& at(const ColumnSet& columns) const;
  friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

/// Reads a header-first CSV (RFC-4180 quoting) into a table. Errors name the
/// offending line.
Table read_csv(const std::filesystem::path& path, const Schema& schema);

ColumnSetStats compute_column_set_stats(const Table& table, const ColumnSet& columns);
ColumnStats compute_stats(const TableHandle& table, std::span<const ColumnSet> column_sets);

/// Single-writer / multi-reader registry of tables, statistics, samples and
/// plans. Readers get shared_ptr snapshots that stay valid across swaps.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::filesystem::path root);
  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  const std::filesystem::path& root() const { return root_; }
  bool persistent() const { return !root_.empty(); }

  /// Registers a table; writes its blocks when the catalog has a root.
  std::shared_ptr<const TableHandle> add_table(std::string name, Table data);
  std::shared_ptr<const TableHandle> table(std::string_view name) const;
  bool has_table(std::string_view name) const;
  std::vector<std::string> table_names() const;

  /// Cached exact statistics; computed on first request.
  std::shared_ptr<const ColumnSetStats> stats(std::string_view table, const ColumnSet& columns);
  ColumnStats stats_snapshot(std::string_view table) const;
  void put_stats(std::string_view table, ColumnSetStats stats);

  void put_family(std::shared_ptr<const SampleFamily> family);
  std::shared_ptr<const SampleFamily> family(std::string_view name) const;
  std::vector<std::shared_ptr<const SampleFamily>> families_for(std::string_view table) const;
  std::vector<std::string> family_names() const;
  void erase_family(std::string_view name);

  void put_uniform(std::shared_ptr<const UniformSample> sample);
  std::shared_ptr<const UniformSample> uniform_for(std::string_view table) const;

  void put_plan(std::shared_ptr<const SamplePlan> plan);
  std::shared_ptr<const SamplePlan> plan(std::string_view table) const;

  /// Writes every table/sample block that has no file yet. Requires a root.
  void write_pending_blocks();

  bool operator==(const Catalog& other) const;

 private:
  friend void persist_manifest(Catalog& catalog);
  friend void load_manifest_into(Catalog& catalog);

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const TableHandle>, std::less<>> tables_;
  std::map<std::string, std::map<ColumnSet, std::shared_ptr<const ColumnSetStats>>, std::less<>>
      stats_;
  std::map<std::string, std::shared_ptr<const SampleFamily>, std::less<>> families_;
  std::map<std::string, std::shared_ptr<const UniformSample>, std::less<>> uniforms_;
  std::map<std::string, std::shared_ptr<const SamplePlan>, std::less<>> plans_;
};

/// Reads `path` per `schema` and registers it under `name`.
std::shared_ptr<const TableHandle> ingest_csv(Catalog& catalog, const std::filesystem::path& path,
                                              std::string name, const Schema& schema);

}  // namespace aqe

#endif  // AQE_CATALOG_HPP
