#include "aqe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "aqe/error.hpp"

namespace aqe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sample variance from moments; infinite below two observations.
double variance_from_moments(double n, double sum, double sum_sq) {
  if (n < 2) return kInf;
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
}

}  // namespace

std::int64_t GroupSample::matched() const {
  std::int64_t m = 0;
  for (const auto& s : strata) m += s.matched;
  return m;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::kInvalidArgument, "probability must be in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  double x = 0.0;
  if (p < kLow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - kLow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // Halley refinement.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

double z_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "confidence must be in (0, 1)");
  }
  return normal_quantile(1.0 - (1.0 - confidence) / 2.0);
}

std::pair<double, double> confidence_interval(double estimate, double variance, double confidence) {
  const double z = z_value(confidence);
  if (!(variance >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "variance must be non-negative");
  if (variance == 0.0) return {estimate, estimate};
  const double half = z * std::sqrt(variance);
  return {estimate - half, estimate + half};
}

double sample_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::kInvalidArgument, "quantile of an empty sample");
  const double n = static_cast<double>(sorted.size());
  const double h = std::clamp(p * n, 1.0, n);
  const double lo = std::floor(h);
  const double hi = std::ceil(h);
  const double x_lo = sorted[static_cast<std::size_t>(lo) - 1];
  const double x_hi = sorted[static_cast<std::size_t>(hi) - 1];
  return x_lo + (h - lo) * (x_hi - x_lo);
}

double estimate_density(std::span<const double> sorted, double x, std::span<const double> weights) {
  const std::size_t n = sorted.size();
  if (n < 2) return 0.0;
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) return 0.0;
  const auto bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> mass(bins, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto b = static_cast<std::size_t>(std::max(0.0, std::floor((sorted[i] - lo) / width)));
    b = std::min(b, bins - 1);
    const double w = weights.empty() ? 1.0 : weights[i];
    mass[b] += w;
    total += w;
  }
  auto target = static_cast<std::int64_t>(std::floor((x - lo) / width));
  target = std::clamp<std::int64_t>(target, 0, static_cast<std::int64_t>(bins) - 1);
  for (std::int64_t r = 0;; ++r) {
    const std::int64_t first = std::max<std::int64_t>(0, target - r);
    const std::int64_t last = std::min<std::int64_t>(static_cast<std::int64_t>(bins) - 1, target + r);
    double m = 0.0;
    for (std::int64_t b = first; b <= last; ++b) m += mass[static_cast<std::size_t>(b)];
    if (m > 0.0) return m / (total * width * static_cast<double>(last - first + 1));
  }
}

GroupEstimate estimate(const AggregateSpec& spec, const GroupSample& sample, double confidence,
                       const EstimatorOptions& options) {
  GroupEstimate out;
  out.confidence = confidence;
  out.rows_read = sample.rows_read;
  out.rows_matched = sample.matched();
  if (out.rows_matched == 0) {
    throw Error(ErrorKind::kMissingGroup, "no sampled row matches the group");
  }
  std::vector<const StratumData*> partial;
  std::int64_t complete_count = 0;
  ExactSum complete_sum;
  for (const auto& s : sample.strata) {
    if (s.matched == 0) continue;
    if (s.complete()) {
      complete_count += s.matched;
      complete_sum.merge(s.sum);
    } else {
      partial.push_back(&s);
    }
  }
  out.exact = partial.empty();

  switch (spec.op) {
    case AggregateOp::kCount: {
      double est = static_cast<double>(complete_count);
      double var = 0.0;
      for (const auto* s : partial) {
        const double n = static_cast<double>(s->read);
        const double c = static_cast<double>(s->matched) / n;
        est += s->weight() * static_cast<double>(s->matched);
        var += s->population * s->population / n * c * (1 - c);
      }
      out.estimate = est;
      out.variance = var;
      break;
    }
    case AggregateOp::kSum: {
      double est = complete_sum.value();
      double var = 0.0;
      for (const auto* s : partial) {
        const double n = static_cast<double>(s->read);
        const double sum = s->sum.value();
        est += s->weight() * sum;
        const double nn = s->population * s->population;
        if (options.literal_sum_variance) {
          const double c = static_cast<double>(s->matched) / n;
          var += nn * variance_from_moments(static_cast<double>(s->matched), sum, s->sum_sq) / n *
                 c * (1 - c);
        } else {
          var += nn * variance_from_moments(n, sum, s->sum_sq) / n;
        }
      }
      out.estimate = est;
      out.variance = var;
      break;
    }
    case AggregateOp::kAvg: {
      if (out.exact) {
        out.estimate = complete_sum.value() / static_cast<double>(complete_count);
        out.variance = 0.0;
      } else if (complete_count == 0 && partial.size() == 1) {
        const StratumData& s = *partial.front();
        const double m = static_cast<double>(s.matched);
        const double sum = s.sum.value();
        out.estimate = sum / m;
        out.variance = variance_from_moments(m, sum, s.sum_sq) / m;
      } else {
        // Ratio of the SUM and COUNT expansion estimators, delta method on
        // d = y - R * 1{match}.
        double y = complete_sum.value();
        double x = static_cast<double>(complete_count);
        for (const auto* s : partial) {
          y += s->weight() * s->sum.value();
          x += s->weight() * static_cast<double>(s->matched);
        }
        const double r = y / x;
        double var = 0.0;
        for (const auto* s : partial) {
          const double n = static_cast<double>(s->read);
          const double m = static_cast<double>(s->matched);
          const double sum = s->sum.value();
          const double d_sum = sum - r * m;
          const double d_sq = s->sum_sq - 2 * r * sum + r * r * m;
          var += s->population * s->population / n * variance_from_moments(n, d_sum, d_sq);
        }
        out.estimate = r;
        out.variance = var / (x * x);
      }
      break;
    }
    case AggregateOp::kQuantile: {
      std::vector<std::pair<double, double>> vw;  // (value, weight)
      for (const auto& s : sample.strata) {
        const double w = s.complete() ? 1.0 : s.weight();
        for (double v : s.values) vw.emplace_back(v, w);
      }
      if (vw.size() != static_cast<std::size_t>(out.rows_matched)) {
        throw Error(ErrorKind::kInvalidArgument, "quantile estimate needs the matched values");
      }
      std::sort(vw.begin(), vw.end());
      std::vector<double> values(vw.size());
      std::vector<double> weights(vw.size());
      for (std::size_t i = 0; i < vw.size(); ++i) {
        values[i] = vw[i].first;
        weights[i] = vw[i].second;
      }
      const bool equal_weights =
          std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights.front(); });
      if (equal_weights) {
        out.estimate = sample_quantile(values, spec.p);
      } else {
        double total = 0.0;
        std::vector<double> cum(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) cum[i] = total += weights[i];
        const double t = std::clamp(spec.p * total, cum.front(), total);
        auto it = std::lower_bound(cum.begin(), cum.end(), t);
        const auto i = static_cast<std::size_t>(it - cum.begin());
        if (i == 0 || cum[i] == t) {
          out.estimate = values[i];
        } else {
          const double frac = (t - cum[i - 1]) / (cum[i] - cum[i - 1]);
          out.estimate = values[i - 1] + frac * (values[i] - values[i - 1]);
        }
      }
      if (out.exact || values.front() == values.back()) {
        out.exact = true;
        out.variance = 0.0;
        break;
      }
      double n_eff = static_cast<double>(values.size());
      if (!equal_weights) {
        double sw = 0.0;
        double sw2 = 0.0;
        for (double w : weights) {
          sw += w;
          sw2 += w * w;
        }
        n_eff = sw * sw / sw2;
      }
      const double f = equal_weights ? estimate_density(values, out.estimate)
                                     : estimate_density(values, out.estimate, weights);
      if (!(f > 0.0)) throw Error(ErrorKind::kInvalidArgument, "estimated density is zero");
      out.variance = spec.p * (1 - spec.p) / (n_eff * f * f);
      break;
    }
  }
  if (out.exact) out.variance = 0.0;
  out.std_error = std::sqrt(out.variance);
  if (std::isinf(out.variance)) {
    out.ci_low = -kInf;
    out.ci_high = kInf;
  } else {
    std::tie(out.ci_low, out.ci_high) = confidence_interval(out.estimate, out.variance, confidence);
  }
  return out;
}

GroupSample uniform_group(std::span<const double> matched, std::int64_t read, double population,
                          bool keep_values) {
  GroupSample g;
  g.rows_read = read;
  StratumData s;
  s.population = population;
  s.read = read;
  s.matched = static_cast<std::int64_t>(matched.size());
  for (double v : matched) {
    s.sum.add(v);
    s.sum_sq += v * v;
  }
  if (keep_values) s.values.assign(matched.begin(), matched.end());
  g.strata.push_back(std::move(s));
  return g;
}

GroupSample rate_tagged_group(std::span<const double> matched, std::span<const double> rates,
                              bool keep_values) {
  if (matched.size() != rates.size()) {
    throw Error(ErrorKind::kInvalidArgument, "values and rates differ in length");
  }
  std::map<double, StratumData> by_rate;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    if (!(rates[i] > 0.0 && rates[i] <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "sampling rate must be in (0, 1]");
    }
    StratumData& s = by_rate[rates[i]];
    ++s.matched;
    s.sum.add(matched[i]);
    s.sum_sq += matched[i] * matched[i];
    if (keep_values) s.values.push_back(matched[i]);
  }
  GroupSample g;
  for (auto& [rate, s] : by_rate) {
    s.read = s.matched;
    s.population = rate == 1.0 ? static_cast<double>(s.read) : static_cast<double>(s.read) / rate;
    g.rows_read += s.read;
    g.strata.push_back(std::move(s));
  }
  return g;
}

double unit_variance(const AggregateSpec& spec, const PilotStats& pilot,
                     const EstimatorOptions& options) {
  const double n2 = pilot.population * pilot.population;
  const double c = pilot.selectivity;
  switch (spec.op) {
    case AggregateOp::kCount:
      return n2 * c * (1 - c);
    case AggregateOp::kAvg:
      return pilot.sample_variance;
    case AggregateOp::kSum: {
      if (options.literal_sum_variance) return n2 * pilot.sample_variance * c * (1 - c);
      const double mean = c > 0 ? pilot.estimate / (pilot.population * c) : 0.0;
      return n2 * (c * pilot.sample_variance + c * (1 - c) * mean * mean);
    }
    case AggregateOp::kQuantile:
      if (!(pilot.density > 0.0)) {
        throw Error(ErrorKind::kInvalidArgument, "estimated density is zero");
      }
      return spec.p * (1 - spec.p) / (pilot.density * pilot.density);
  }
  return 0.0;
}

std::int64_t required_rows(double unit_var, double epsilon_abs, double confidence) {
  const double z = z_value(confidence);
  if (std::isinf(epsilon_abs)) return 1;
  if (!(epsilon_abs > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "error bound of zero needs unbounded rows");
  }
  if (!(unit_var > 0.0)) return 1;
  const double n = std::ceil(z * z * unit_var / (epsilon_abs * epsilon_abs));
  if (!(n < 9.2e18)) return std::numeric_limits<std::int64_t>::max();
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
}

double absolute_epsilon(const ConfidenceSpec& bound, double pilot_estimate) {
  if (bound.measure == ErrorMeasure::kAbsolute) return bound.epsilon;
  if (pilot_estimate == 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "relative error bound with a pilot estimate of zero");
  }
  return bound.epsilon * std::abs(pilot_estimate);
}

std::int64_t required_rows(const AggregateSpec& spec, const ConfidenceSpec& bound,
                           const PilotStats& pilot, const EstimatorOptions& options) {
  return required_rows(unit_variance(spec, pilot, options), absolute_epsilon(bound, pilot.estimate),
                       bound.confidence);
}

}  // namespace aqe
