#ifndef AQE_ENGINE_HPP
#define AQE_ENGINE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/catalog.hpp"
#include "aqe/estimator.hpp"
#include "aqe/query.hpp"
#include "aqe/runtime.hpp"

namespace aqe {

struct EngineOptions {
  RuntimeOptions runtime;
  double default_confidence = 0.95;
  std::size_t cache_bytes = 0;  // reuse cache limit; 0: unbounded
};

struct ResultRow {
  GroupKey key;
  std::vector<GroupEstimate> values;   // per aggregate in select order
  std::vector<double> relative_errors;  // per RELATIVE ERROR item
  std::int64_t rows = 0;               // matching sample rows
  std::string sample;
  std::vector<std::string> flags;
  bool missing = false;
};

struct QueryResult {
  BoundedQuery query;
  std::vector<std::string> group_columns;
  std::vector<std::string> value_columns;     // aggregate headers
  std::vector<std::string> relative_columns;  // RELATIVE ERROR headers
  double confidence = 0.95;
  std::vector<ResultRow> rows;
  std::vector<ErrorLatencyProfile> profiles;
  std::vector<std::string> warnings;

  const ResultRow* find(const GroupKey& key) const;
  // Fixed-width table with columns: keys, estimate and +/- per aggregate,
  // relative errors, confidence, n, sample, flags.
  std::string format_table() const;
  std::string format_tsv() const;
  std::string format_profiles() const;
};

class Engine {
 public:
  explicit Engine(Catalog& catalog, EngineOptions options = {});

  QueryResult run(std::string_view sql);
  QueryResult run(const BoundedQuery& query);
  // Runs the query on one given sample level, bypassing family selection.
  QueryResult run_on(const BoundedQuery& query, const SampleSource& source);

  ReuseCache& cache() { return cache_; }
  const EngineOptions& options() const { return options_; }

 private:
  QueryResult run_impl(const BoundedQuery& query);

  Catalog& catalog_;
  EngineOptions options_;
  ReuseCache cache_;
};

}  // namespace aqe

#endif  // AQE_ENGINE_HPP
