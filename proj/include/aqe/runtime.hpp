#ifndef AQE_RUNTIME_HPP
#define AQE_RUNTIME_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "aqe/catalog.hpp"
#include "aqe/estimator.hpp"
#include "aqe/executor.hpp"
#include "aqe/query.hpp"
#include "aqe/sampling.hpp"

namespace aqe {

using Clock = std::chrono::steady_clock;

struct RuntimeOptions {
  // A probe matching fewer rows steps up one level (0 disables stepping).
  std::int64_t min_pilot_rows = 100;
  // Consecutive probe rates must agree within this fraction.
  double rate_agreement = 0.2;
  int max_rate_runs = 3;
  bool parallel_probes = true;
  EstimatorOptions estimator;
};

// Either a sample family or the uniform sample of a table. A uniform sample
// behaves as a one-level family.
struct SampleChoice {
  std::shared_ptr<const SampleFamily> family;
  std::shared_ptr<const UniformSample> uniform;

  bool is_family() const { return family != nullptr; }
  int level_count() const;
  int smallest_level() const { return level_count() - 1; }
  // Cap of `level`; for a uniform sample, its row count.
  std::int64_t cap(int level) const;
  std::int64_t level_rows(int level) const;
  SampleSource source(int level) const;
  std::string name() const;
  // Whether every column in `columns` is a stratification column.
  bool covers(const std::vector<std::string>& columns) const;
};

// Columns referenced by the filter and GROUP BY of a scan.
std::vector<std::string> scan_columns(const ScanSpec& spec);

// Identity of a scan for the reuse cache: filter, grouping and aggregates,
// never the bound.
std::uint64_t scan_fingerprint(const ScanSpec& spec);

struct ReuseStats {
  std::size_t blocks_reused = 0;
  std::size_t blocks_computed = 0;
  std::int64_t rows_computed = 0;
  double seconds = 0.0;
};

// (scan fingerprint, source id, block id) -> block partial. Entries carry a
// checksum taken on insert; a mismatch on lookup drops the entry, bumps the
// warning counter and forces a full recompute.
class ReuseCache {
 public:
  explicit ReuseCache(std::size_t max_bytes = 0);  // 0: unbounded

  // A corrupt entry is dropped, counted as a warning and reported through
  // `corrupt`.
  std::shared_ptr<const BlockPartial> find(std::uint64_t fingerprint, const std::string& source,
                                           std::int64_t block, bool* corrupt = nullptr);
  void put(std::uint64_t fingerprint, const std::string& source, std::int64_t block,
           std::shared_ptr<const BlockPartial> partial);
  void clear();

  std::size_t size() const;
  std::size_t bytes() const;
  std::size_t warnings() const { return warnings_.load(); }

  // Alters a stored partial without refreshing its checksum.
  bool corrupt_for_testing(std::uint64_t fingerprint, const std::string& source,
                           std::int64_t block);

 private:
  using Key = std::tuple<std::uint64_t, std::string, std::int64_t>;
  struct Entry {
    std::shared_ptr<const BlockPartial> partial;
    std::uint64_t checksum = 0;
    std::size_t bytes = 0;
  };

  void evict_locked();

  std::size_t max_bytes_;
  mutable std::shared_mutex mutex_;
  std::map<Key, Entry> entries_;
  std::deque<Key> order_;
  std::size_t bytes_ = 0;
  std::atomic<std::size_t> warnings_{0};
};

std::size_t partial_bytes(const BlockPartial& partial);

// Scans `source`, reusing cached block partials of the same scan and caching
// the fresh ones. Partials are merged in block order, so the result equals
// scan_source(spec, source) bit for bit. `recompute` bypasses lookups.
ScanResult execute_with_reuse(const ScanSpec& spec, const SampleSource& source, ReuseCache& cache,
                              ReuseStats* stats = nullptr, bool recompute = false);

struct ProbeOutcome {
  SampleChoice choice;
  int level = 0;
  std::int64_t rows_read = 0;
  std::int64_t rows_matched = 0;
  double ratio() const {
    return rows_read > 0 ? static_cast<double>(rows_matched) / static_cast<double>(rows_read) : 0.0;
  }
};

struct FamilySelection {
  SampleChoice choice;
  bool covers = false;  // stratification columns include every query column
  std::vector<ProbeOutcome> probes;  // empty when a covering family exists
};

// Picks the covering family with the fewest columns (then smaller storage,
// then column list); without one, probes the smallest level of every
// candidate and keeps the best matched/read ratio (then name).
FamilySelection select_family(const ScanSpec& spec, const std::string& table,
                              const Catalog& catalog, ReuseCache& cache,
                              const RuntimeOptions& options = {});

// Pairwise-disjoint conjunctive subqueries; subquery k keeps disjunct k and
// excludes every earlier one. Aggregates are sums over subqueries.
struct DisjunctionRewrite {
  std::vector<ScanSpec> subqueries;
  double variance_share = 1.0;  // 1/p of the total variance budget
  double epsilon_scale = 1.0;   // sqrt(variance_share)
};

inline constexpr std::size_t kMaxDisjuncts = 64;

DisjunctionRewrite rewrite_disjunction(const BoundedQuery& query);

struct ProbeRun {
  int level = 0;
  std::int64_t rows = 0;  // rows scanned fresh
  double seconds = 0.0;
  double rate = 0.0;
};

struct ErrorLatencyProfile {
  enum class Mode { kError, kTime };

  Mode mode = Mode::kError;
  std::string family;  // family id or uniform sample name
  int level_count = 1;
  int probe_level = 0;
  std::int64_t probe_cap = 0;  // K_m
  std::int64_t rows_read = 0;
  std::int64_t rows_matched = 0;  // n_{i,m} of the binding group
  double selectivity = 0.0;       // s_q over all rows read
  PilotStats pilot;               // binding group and aggregate
  std::vector<ProbeRun> runs;
  double rate = 0.0;  // rows per second
  double required_rows = 0.0;  // n
  double target_cap = 0.0;     // n * K_m / n_{i,m}
  int chosen_level = 0;
  std::int64_t chosen_cap = 0;
  double projected_rows = 0.0;
  double projected_seconds = 0.0;
  bool exact = false;
  bool bound_not_guaranteed = false;
  bool bound_may_be_exceeded = false;
  bool bound_exceeded = false;

  std::vector<std::string> flags() const;
  // Line-oriented diagnostic text.
  std::string dump() const;
};

// Level rules over caps K_0 > K_1 > ...; both return -1 when no cap
// qualifies. Error bound: smallest cap strictly above `target` among levels
// 0..max_level. Time bound: largest cap strictly below `target`.
int error_bound_level(const std::vector<std::int64_t>& caps, int max_level, double target);
int time_bound_level(const std::vector<std::int64_t>& caps, double target);

struct ProfiledRun {
  ErrorLatencyProfile profile;
  SampleSource source;  // chosen level
  ScanResult result;
};

// Probes the smallest level, sizes the sample with required_rows and runs
// the query at the smallest cap above n * K_m / n_{i,m}.
ProfiledRun build_error_profile(const ScanSpec& spec, const SampleChoice& choice, bool covers,
                                const ConfidenceSpec& bound, ReuseCache& cache,
                                const RuntimeOptions& options = {});

// Fits a processing rate from probe runs and runs the query at the largest
// cap below n * K_m / r_m, where n = rate * remaining time.
ProfiledRun build_latency_profile(const ScanSpec& spec, const SampleChoice& choice, bool covers,
                                  double seconds, Clock::time_point start, ReuseCache& cache,
                                  const RuntimeOptions& options = {});

struct LemmaCheck {
  std::int64_t chosen_cap = 0;  // K'
  double factor = 0.0;          // K'/K_opt, or sqrt(K_opt/K')
  double bound = 0.0;           // c + 1/K_opt, or 1/sqrt(1/c - 1/K_opt)
  bool holds = false;
};

enum class LemmaMode { kError, kTime };

// Error mode: K' is the smallest cap >= K_opt and rows read grow by K'/K_opt.
// Time mode: K' is the largest cap <= K_opt and the standard error grows by
// sqrt(K_opt/K').
LemmaCheck lemma_bound_check(const std::vector<std::int64_t>& caps, std::int64_t ratio,
                             std::int64_t k_opt, LemmaMode mode);

}  // namespace aqe

#endif  // AQE_RUNTIME_HPP
