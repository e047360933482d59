#ifndef AQE_OPTIMIZER_HPP
#define AQE_OPTIMIZER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/column_set.hpp"
#include "aqe/query.hpp"

namespace aqe {

class Catalog;

// Columns of a query's WHERE and GROUP BY clauses, kept in sorted order.
struct QueryTemplate {
  ColumnSet columns;
  double weight = 0.0;

  friend bool operator==(const QueryTemplate&, const QueryTemplate&) = default;
};

struct WorkloadProfile {
  std::string table;
  std::vector<QueryTemplate> templates;

  friend bool operator==(const WorkloadProfile&, const WorkloadProfile&) = default;
};

// One template per distinct column set, weighted by relative frequency.
// Queries with neither WHERE nor GROUP BY carry no template and are skipped.
WorkloadProfile extract_templates(std::span<const BoundedQuery> log);

// Workload file: optional "table <name>" line, then "<col,col,...> <weight>"
// per template. '#' starts a comment. Weights are normalized on read.
std::string format_workload(const WorkloadProfile& profile);
WorkloadProfile parse_workload(std::string_view text);
WorkloadProfile read_workload(const std::filesystem::path& path);
void write_workload(const WorkloadProfile& profile, const std::filesystem::path& path);

struct Candidate {
  ColumnSet phi;
  std::int64_t delta = 0;     // values of phi with frequency below K_0
  std::int64_t distinct = 0;  // |D(phi)|
  std::int64_t store = 0;     // rows of SFam(phi) at K_0
  bool exists = false;        // a family on phi is already built

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct TemplateInfo {
  ColumnSet columns;
  double weight = 0.0;
  std::int64_t distinct = 0;
  std::int64_t delta = 0;

  friend bool operator==(const TemplateInfo&, const TemplateInfo&) = default;
};

struct CandidateSet {
  std::string table;
  std::int64_t table_rows = 0;
  double average_row_bytes = 0.0;
  std::int64_t base_cap = 0;
  std::int64_t ratio = 2;
  std::vector<TemplateInfo> templates;
  std::vector<Candidate> candidates;
};

// Every non-empty subset (up to max_cols columns) of some template, ordered
// by size and then by name. Statistics come from the catalog.
CandidateSet generate_candidates(const WorkloadProfile& profile, Catalog& catalog,
                                 std::int64_t base_cap, std::int64_t ratio, int max_cols = 3);

double coverage_of(const TemplateInfo& tmpl, std::span<const Candidate> candidates,
                   const std::vector<bool>& chosen);
double plan_objective(const CandidateSet& set, const std::vector<bool>& chosen);

enum class SolverMode { kAuto, kExact, kHeuristic };
enum class SolverKind { kExact, kHeuristic };

std::string_view to_string(SolverKind kind);

struct SolveOptions {
  double budget_fraction = 0.5;  // of table rows
  double drift = 1.0;            // r
  SolverMode mode = SolverMode::kAuto;
};

inline constexpr std::size_t kMaxExactCandidates = 20;

struct SamplePlan {
  std::string table;
  std::int64_t table_rows = 0;
  double average_row_bytes = 0.0;
  std::int64_t base_cap = 0;
  std::int64_t ratio = 2;
  double budget_fraction = 0.0;
  std::int64_t budget_rows = 0;
  std::int64_t budget_used = 0;
  double drift = 1.0;
  bool first_run = false;
  std::int64_t drift_rows = 0;   // sum of Store over changed candidates
  std::int64_t drift_limit = 0;  // r * sum of Store over existing candidates
  SolverKind solver = SolverKind::kExact;
  std::vector<Candidate> candidates;
  std::vector<bool> chosen;
  std::vector<TemplateInfo> templates;
  std::vector<double> coverage;
  double objective = 0.0;

  std::vector<ColumnSet> chosen_sets() const;
  friend bool operator==(const SamplePlan&, const SamplePlan&) = default;
};

// Throws kInfeasible when no assignment meets both the budget and the drift
// limit.
SamplePlan solve_plan(const CandidateSet& set, const SolveOptions& options);

// Storage and drift checks with integer arithmetic.
bool plan_within_budget(const SamplePlan& plan);
bool plan_within_drift(const SamplePlan& plan);

std::string format_plan(const SamplePlan& plan);
SamplePlan parse_plan(std::string_view text);
SamplePlan read_plan(const std::filesystem::path& path);
void write_plan(const SamplePlan& plan, const std::filesystem::path& path);

}  // namespace aqe

#endif  // AQE_OPTIMIZER_HPP
