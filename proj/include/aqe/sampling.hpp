#ifndef AQE_SAMPLING_HPP
#define AQE_SAMPLING_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aqe/catalog.hpp"
#include "aqe/column_set.hpp"
#include "aqe/group_index.hpp"
#include "aqe/table.hpp"

namespace aqe {

/// Bernoulli sample R(p): every source row kept independently with
/// probability p.
struct UniformSample {
  std::string name;
  std::string table;
  double probability = 1.0;
  std::uint64_t seed = 0;
  std::int64_t population = 0;  // N of the source table
  Table rows;
  std::vector<BlockRef> blocks;

  friend bool operator==(const UniformSample&, const UniformSample&) = default;
};

UniformSample build_uniform(const TableHandle& table, double probability, std::uint64_t seed);

/// Nested stratified samples SFam(phi) with caps K_i = floor(K_0 / c^i).
///
/// Only the level-0 rows are stored. Each kept row carries its group and its
/// rank inside a seeded random permutation of the group; level i is the set
/// of rows with rank < K_i. Rows are laid out band by band starting with the
/// smallest level (band j holds ranks in [K_{j+1}, K_j)), each band sorted by
/// (phi values, rank), so level i is the row prefix [0, level_rows[i]) and a
/// block never spans two bands.
struct SampleFamily {
  std::string name;
  std::string table;
  ColumnSet phi;
  std::int64_t base_cap = 0;
  std::int64_t ratio = 2;
  std::uint64_t seed = 0;
  std::uint64_t generation = 0;

  std::vector<std::int64_t> caps;        // K_0 > K_1 > ... > K_{m-1}
  std::vector<std::int64_t> level_rows;  // stored rows visible at each level
  std::vector<GroupKey> group_keys;      // phi groups in sorted order
  std::vector<std::int64_t> group_freq;  // F(phi, T, x) per group

  Table rows;
  std::vector<std::int64_t> row_group;
  std::vector<std::int64_t> row_rank;
  std::vector<BlockRef> blocks;

  int level_count() const { return static_cast<int>(caps.size()); }
  std::int64_t cap(int level) const { return caps[static_cast<std::size_t>(level)]; }
  /// Effective sampling rate min(1, K_level / F) of the group at `level`.
  double group_rate(std::int64_t group, int level) const;
  double rate(std::size_t row, int level) const { return group_rate(row_group[row], level); }
  /// Blocks whose rows all belong to `level`.
  std::span<const BlockRef> level_blocks(int level) const;
  /// Identity that changes whenever the stored rows change.
  std::string id() const { return name + "#" + std::to_string(generation); }

  friend bool operator==(const SampleFamily&, const SampleFamily&) = default;
};

/// Canonical family name for (table, phi).
std::string family_name(const std::string& table, const ColumnSet& phi);

/// Caps floor(K_0 / c^i) for 0 <= i < floor(log_c K_0).
std::vector<std::int64_t> family_caps(std::int64_t base_cap, std::int64_t ratio);

/// Builds a family in resumable steps; each step groups one source block.
/// The pause flag is checked between steps.
class FamilyBuilder {
 public:
  FamilyBuilder(std::shared_ptr<const TableHandle> table, ColumnSet phi, std::int64_t base_cap,
                std::int64_t ratio, std::uint64_t seed);

  /// Processes the next unit of work; returns false once finished.
  bool step();
  bool done() const { return stage_ == Stage::kDone; }
  SampleFamily take();

 private:
  enum class Stage { kGrouping, kRanking, kDone };

  void rank_and_materialize();

  std::shared_ptr<const TableHandle> table_;
  SampleFamily family_;
  std::vector<std::size_t> phi_cols_;
  Stage stage_ = Stage::kGrouping;
  std::size_t next_block_ = 0;
  std::vector<std::uint32_t> row_local_group_;
  std::vector<std::int64_t> local_freq_;
  std::vector<std::size_t> local_first_row_;
  GroupIndexer indexer_;
};

SampleFamily build_family(std::shared_ptr<const TableHandle> table, const ColumnSet& phi,
                          std::int64_t base_cap, std::int64_t ratio, std::uint64_t seed);

/// Non-owning view of the rows of level `level`.
class LevelView {
 public:
  LevelView(const SampleFamily& family, int level);

  int level() const { return level_; }
  std::int64_t cap() const { return family_->cap(level_); }
  std::size_t size() const { return size_; }
  double rate(std::size_t row) const { return family_->rate(row, level_); }
  std::int64_t group(std::size_t row) const { return family_->row_group[row]; }
  std::int64_t rank(std::size_t row) const { return family_->row_rank[row]; }
  const Table& rows() const { return family_->rows; }
  std::span<const BlockRef> blocks() const { return family_->level_blocks(level_); }

 private:
  const SampleFamily* family_;
  int level_;
  std::size_t size_;
};

LevelView sample_at_level(const SampleFamily& family, int level);

/// Store(phi) in rows: sum over groups of min(K, F(phi, T, x)).
std::int64_t family_store_cost(const ColumnSetStats& stats, std::int64_t cap);

/// Rebuilds `family` with a new seed from its source table and swaps it into
/// the catalog under the writer lock.
std::shared_ptr<const SampleFamily> refresh_family(Catalog& catalog, const SampleFamily& family,
                                                   std::uint64_t new_seed);

/// Cooperative background refresh. Each call to run_quantum() performs one
/// builder step unless paused; the swap happens after the last step.
class RefreshTask {
 public:
  RefreshTask(Catalog& catalog, const SampleFamily& family, std::uint64_t new_seed);

  void pause() { paused_ = true; }
  void resume() { paused_ = false; }
  bool paused() const { return paused_; }
  /// Returns true while work remains.
  bool run_quantum();
  void run_to_completion();
  bool finished() const { return finished_; }

 private:
  Catalog& catalog_;
  std::uint64_t generation_;
  FamilyBuilder builder_;
  std::atomic<bool> paused_{false};
  bool finished_ = false;
};

/// Fraction of a Zipf(s) column (frequency M / x^s for ranks x up to
/// floor(M^(1/s)), lowest frequency 1) retained by a stratified sample with
/// cap K.
double zipf_overhead(double s, double max_frequency, double cap);

}  // namespace aqe

#endif  // AQE_SAMPLING_HPP
