#ifndef AQE_TESTS_TEST_SUPPORT_HPP
#define AQE_TESTS_TEST_SUPPORT_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "aqe/catalog.hpp"
#include "aqe/optimizer.hpp"
#include "aqe/table.hpp"
#include "aqe/value.hpp"

namespace aqe::test {

inline Schema sessions_schema() {
  return parse_schema("URL:string,City:string,Browser:string,SessionTime:int");
}

// The five-row Sessions table used throughout the examples.
inline const char* sessions_csv() {
  return "URL,City,Browser,SessionTime\n"
         "cnn.com,New York,Firefox,15\n"
         "yahoo.com,New York,Firefox,20\n"
         "google.com,Berkeley,Firefox,85\n"
         "google.com,New York,Safari,82\n"
         "bing.com,Cambridge,IE,22\n";
}

inline Table sessions_table() {
  Table t(sessions_schema());
  const std::vector<std::vector<Value>> rows = {
      {std::string("cnn.com"), std::string("New York"), std::string("Firefox"), std::int64_t{15}},
      {std::string("yahoo.com"), std::string("New York"), std::string("Firefox"), std::int64_t{20}},
      {std::string("google.com"), std::string("Berkeley"), std::string("Firefox"), std::int64_t{85}},
      {std::string("google.com"), std::string("New York"), std::string("Safari"), std::int64_t{82}},
      {std::string("bing.com"), std::string("Cambridge"), std::string("IE"), std::int64_t{22}},
  };
  for (const auto& r : rows) t.append_row(r);
  return t;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("aqe-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Synthetic table: g (int group, Zipf-like skew over `groups` values),
// h (int, uniform 0..9), v (float, lognormal). Deterministic in `seed`.
inline Table skewed_table(std::int64_t rows, std::int64_t groups, std::uint64_t seed,
                          double skew = 1.1) {
  Table t(parse_schema("g:int,h:int,v:float"));
  t.reserve(static_cast<std::size_t>(rows));
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (std::int64_t i = 1; i <= groups; ++i) weights.push_back(1.0 / std::pow(double(i), skew));
  std::discrete_distribution<std::int64_t> pick(weights.begin(), weights.end());
  std::uniform_int_distribution<std::int64_t> ten(0, 9);
  std::lognormal_distribution<double> val(1.0, 0.75);
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t g = pick(rng);
    t.column(0).push_int(g);
    t.column(1).push_int(ten(rng));
    t.column(2).push_float(val(rng) + static_cast<double>(g % 7));
  }
  return t;
}

// Correctly rounded sum of doubles (Shewchuk partials, as in Python's
// math.fsum), used as an oracle independent of the engine's accumulator.
inline double fsum(std::vector<double> xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  double hi = 0.0;
  if (!partials.empty()) {
    std::size_t n = partials.size();
    hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
  }
  return hi;
}


// Random optimizer instance over columns c0..c{cols-1}: templates are random
// column sets, candidates every subset of some template (at most `max_cand`),
// with random distinct counts consistent with subset monotonicity.
inline CandidateSet random_candidate_set(std::mt19937_64& rng, std::size_t max_cand) {
  std::uniform_int_distribution<int> cols_d(3, 5);
  const int cols = cols_d(rng);
  std::vector<std::string> names;
  for (int i = 0; i < cols; ++i) names.push_back("c" + std::to_string(i));
  auto subset_of = [&](std::uint32_t mask) {
    std::vector<std::string> out;
    for (int i = 0; i < cols; ++i) {
      if (mask >> i & 1u) out.push_back(names[static_cast<std::size_t>(i)]);
    }
    return ColumnSet(out);
  };
  std::uniform_int_distribution<std::uint32_t> mask_d(1, (1u << cols) - 1);
  std::uniform_int_distribution<int> tmpl_d(2, 5);
  std::vector<std::uint32_t> tmasks;
  const int ntmpl = tmpl_d(rng);
  while (static_cast<int>(tmasks.size()) < ntmpl) {
    const std::uint32_t m = mask_d(rng);
    if (std::popcount(m) > 3) continue;
    if (std::find(tmasks.begin(), tmasks.end(), m) == tmasks.end()) tmasks.push_back(m);
  }
  std::vector<std::uint32_t> cmasks;
  for (std::uint32_t m = 1; m < (1u << cols); ++m) {
    for (auto t : tmasks) {
      if ((m & ~t) == 0) {
        cmasks.push_back(m);
        break;
      }
    }
  }
  std::shuffle(cmasks.begin(), cmasks.end(), rng);
  if (cmasks.size() > max_cand) cmasks.resize(max_cand);
  // Distinct counts: product of per-column cardinalities, capped by N.
  CandidateSet set;
  set.table = "t";
  set.table_rows = 100000;
  set.base_cap = 1000;
  std::uniform_int_distribution<std::int64_t> card_d(2, 40);
  std::vector<std::int64_t> card;
  for (int i = 0; i < cols; ++i) card.push_back(card_d(rng));
  auto distinct = [&](std::uint32_t m) {
    std::int64_t d = 1;
    for (int i = 0; i < cols; ++i) {
      if (m >> i & 1u) d = std::min<std::int64_t>(d * card[static_cast<std::size_t>(i)], set.table_rows);
    }
    return d;
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> store_d(2000, 40000);
  for (auto m : cmasks) {
    Candidate c;
    c.phi = subset_of(m);
    c.distinct = distinct(m);
    c.delta = static_cast<std::int64_t>(unit(rng) * static_cast<double>(c.distinct));
    c.store = store_d(rng);
    c.exists = unit(rng) < 0.3;
    set.candidates.push_back(c);
  }
  double wsum = 0.0;
  std::vector<double> w;
  for (std::size_t i = 0; i < tmasks.size(); ++i) {
    w.push_back(unit(rng) + 0.05);
    wsum += w.back();
  }
  for (std::size_t i = 0; i < tmasks.size(); ++i) {
    TemplateInfo t;
    t.columns = subset_of(tmasks[i]);
    t.weight = w[i] / wsum;
    t.distinct = distinct(tmasks[i]);
    t.delta = static_cast<std::int64_t>(unit(rng) * static_cast<double>(t.distinct)) + 1;
    set.templates.push_back(t);
  }
  return set;
}

// Brute-force optimum of the sample-selection program, recomputing each
// template's coverage from scratch. Returns -1 when nothing is feasible.
inline double brute_force_objective(const CandidateSet& set, double budget_fraction, double drift) {
  const std::size_t n = set.candidates.size();
  const auto budget = static_cast<std::int64_t>(
      std::floor(static_cast<long double>(budget_fraction) * set.table_rows));
  std::int64_t existing = 0;
  bool any = false;
  for (const auto& c : set.candidates) {
    existing += c.exists ? c.store : 0;
    any = any || c.exists;
  }
  const double r = any ? drift : 1.0;
  double best = -1.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::int64_t used = 0;
    std::int64_t changed = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool z = mask >> j & 1u;
      used += z ? set.candidates[j].store : 0;
      changed += z != set.candidates[j].exists ? set.candidates[j].store : 0;
    }
    if (used > budget) continue;
    if (any && static_cast<long double>(changed) > static_cast<long double>(r) * existing) continue;
    double g = 0.0;
    for (const auto& t : set.templates) {
      double y = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(mask >> j & 1u)) continue;
        const auto& cc = set.candidates[j].phi.columns();
        bool sub = true;
        for (const auto& col : cc) {
          sub = sub && std::find(t.columns.columns().begin(), t.columns.columns().end(), col) !=
                           t.columns.columns().end();
        }
        if (sub) y = std::max(y, std::min(1.0, double(set.candidates[j].distinct) / double(t.distinct)));
      }
      g += t.weight * y * static_cast<double>(t.delta);
    }
    best = std::max(best, g);
  }
  return best;
}

}  // namespace aqe::test

#endif  // AQE_TESTS_TEST_SUPPORT_HPP
