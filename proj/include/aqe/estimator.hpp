#ifndef AQE_ESTIMATOR_HPP
#define AQE_ESTIMATOR_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "aqe/exact_sum.hpp"
#include "aqe/query.hpp"
#include "aqe/value.hpp"

namespace aqe {

struct EstimatorOptions {
  // Use N^2 * S_n^2 / n * c(1-c) for SUM instead of the expansion-estimator
  // variance N^2 * s^2(zero-filled) / n.
  bool literal_sum_variance = false;
};

// Matched rows of one stratum (population N_h, n_h rows read) for one
// output group and one aggregate target.
struct StratumData {
  double population = 0.0;
  std::int64_t read = 0;
  std::int64_t matched = 0;
  ExactSum sum;
  double sum_sq = 0.0;
  std::vector<double> values;  // filled for quantiles only

  bool complete() const { return static_cast<double>(read) >= population; }
  double weight() const { return population / static_cast<double>(read); }
};

struct GroupSample {
  std::vector<StratumData> strata;  // strata with at least one match
  std::int64_t rows_read = 0;

  std::int64_t matched() const;
};

struct GroupEstimate {
  GroupKey key;
  double estimate = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.95;
  std::int64_t rows_matched = 0;
  std::int64_t rows_read = 0;
  bool exact = false;

  double half_width() const { return (ci_high - ci_low) / 2.0; }
};

struct ConfidenceSpec {
  double confidence = 0.95;
  double epsilon = 0.0;  // fraction for relative bounds (0.1 = 10%)
  ErrorMeasure measure = ErrorMeasure::kRelative;
};

// Standard normal inverse CDF (Acklam's rational approximation followed by
// one Halley step on erfc; absolute error below 1e-9).
double normal_quantile(double p);
// Two-sided critical value: z with P(|Z| <= z) = confidence.
double z_value(double confidence);

std::pair<double, double> confidence_interval(double estimate, double variance, double confidence);

// Throws kMissingGroup when the sample holds no matching row.
GroupEstimate estimate(const AggregateSpec& spec, const GroupSample& sample, double confidence,
                       const EstimatorOptions& options = {});

// Single-stratum convenience: `matched` values out of `read` rows drawn from
// a population of `population` rows.
GroupSample uniform_group(std::span<const double> matched, std::int64_t read, double population,
                          bool keep_values);
// Rows tagged with their effective sampling rate; rows of equal rate form
// one stratum whose population is read / rate.
GroupSample rate_tagged_group(std::span<const double> matched, std::span<const double> rates,
                              bool keep_values);

// Histogram density at x with ceil(sqrt(n)) equal-width bins over the data
// range; an empty bin widens to the nearest non-empty one. Weights are
// optional. Returns 0 for a zero-width range.
double estimate_density(std::span<const double> sorted, double x,
                        std::span<const double> weights = {});

// Linear-interpolated quantile with 1-based h = p * n clamped to [1, n].
double sample_quantile(std::span<const double> sorted, double p);

// Pilot statistics for required_rows.
struct PilotStats {
  double estimate = 0.0;
  double sample_variance = 0.0;  // S_n^2 of matched values
  double selectivity = 0.0;      // c
  double density = 0.0;          // f(x_p)
  double population = 0.0;       // N
};

// Unit variance U with variance(n) = U / n for the aggregate.
double unit_variance(const AggregateSpec& spec, const PilotStats& pilot,
                     const EstimatorOptions& options = {});
// Smallest n with z * sqrt(unit_variance / n) <= epsilon_abs.
std::int64_t required_rows(double unit_variance, double epsilon_abs, double confidence);
std::int64_t required_rows(const AggregateSpec& spec, const ConfidenceSpec& bound,
                           const PilotStats& pilot, const EstimatorOptions& options = {});
double absolute_epsilon(const ConfidenceSpec& bound, double pilot_estimate);

}  // namespace aqe

#endif  // AQE_ESTIMATOR_HPP
