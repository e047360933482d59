#include <cmath>

#include "aqe/error.hpp"
#include "aqe/sampling.hpp"

namespace aqe {

namespace {

// Largest integer x >= 0 with x^s <= v.
std::int64_t floor_root(long double v, double s) {
  auto x = static_cast<std::int64_t>(std::floor(std::pow(v, 1.0L / s)));
  while (x > 0 && std::pow(static_cast<long double>(x), static_cast<long double>(s)) > v) --x;
  while (std::pow(static_cast<long double>(x + 1), static_cast<long double>(s)) <= v) ++x;
  return x;
}

// sum_{x=a}^{b} x^{-s}: direct for the head, Euler-Maclaurin for the tail.
long double power_sum(std::int64_t a, std::int64_t b, double s) {
  if (b < a) return 0.0L;
  constexpr std::int64_t kDirect = 100000;
  const long double ls = s;
  long double sum = 0.0L;
  const std::int64_t head_end = std::min(b, a + kDirect - 1);
  for (std::int64_t x = head_end; x >= a; --x) sum += std::pow(static_cast<long double>(x), -ls);
  if (head_end == b) return sum;

  const long double lo = static_cast<long double>(head_end + 1);
  const long double hi = static_cast<long double>(b);
  auto f = [&](long double x) { return std::pow(x, -ls); };
  auto f1 = [&](long double x) { return -ls * std::pow(x, -ls - 1); };
  auto f3 = [&](long double x) { return -ls * (ls + 1) * (ls + 2) * std::pow(x, -ls - 3); };
  const long double integral =
      s == 1.0 ? std::log(hi / lo) : (std::pow(lo, 1 - ls) - std::pow(hi, 1 - ls)) / (ls - 1);
  sum += integral + (f(lo) + f(hi)) / 2 + (f1(hi) - f1(lo)) / 12 - (f3(hi) - f3(lo)) / 720;
  return sum;
}

}  // namespace

double zipf_overhead(double s, double max_frequency, double cap) {
  if (!(s >= 1.0) || !std::isfinite(s)) {
    throw Error(ErrorKind::kInvalidArgument, "zipf exponent must be >= 1");
  }
  if (!(cap >= 1.0) || !(max_frequency >= cap) || !std::isfinite(max_frequency)) {
    throw Error(ErrorKind::kInvalidArgument, "zipf parameters need M >= K >= 1");
  }
  const long double m_freq = max_frequency;
  const long double k = cap;
  const std::int64_t distinct = floor_root(m_freq, s);
  const std::int64_t capped = std::min(distinct, floor_root(m_freq / k, s));  // ranks with M/x^s >= K
  const long double total = m_freq * power_sum(1, distinct, s);
  const long double kept = k * static_cast<long double>(capped) +
                           m_freq * power_sum(capped + 1, distinct, s);
  return static_cast<double>(kept / total);
}

}  // namespace aqe
