#include "aqe/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "aqe/catalog.hpp"
#include "aqe/error.hpp"
#include "aqe/sampling.hpp"
#include "aqe/text_format.hpp"

namespace aqe {

namespace {

std::string encode_columns(const ColumnSet& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    std::string enc = percent_encode(cols.columns()[i]);
    std::string safe;
    for (char c : enc) safe += c == ',' ? std::string("%2C") : std::string(1, c);
    out += safe;
  }
  return out;
}

ColumnSet decode_columns(std::string_view text) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    cols.push_back(percent_decode(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return ColumnSet(std::move(cols));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool column_less(const ColumnSet& a, const ColumnSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.columns() < b.columns();
}

}  // namespace

WorkloadProfile extract_templates(std::span<const BoundedQuery> log) {
  WorkloadProfile profile;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  for (const auto& q : log) {
    if (profile.table.empty()) {
      profile.table = q.table;
    } else if (q.table != profile.table) {
      throw Error(ErrorKind::kInvalidArgument,
                  "query log mixes tables '" + profile.table + "' and '" + q.table + "'");
    }
    const auto cols = q.filter_columns();
    if (cols.empty()) continue;
    const ColumnSet set = ColumnSet(cols).canonical();
    auto it = std::find_if(profile.templates.begin(), profile.templates.end(),
                           [&](const QueryTemplate& t) { return t.columns == set; });
    if (it == profile.templates.end()) {
      profile.templates.push_back({set, 0.0});
      counts.push_back(0);
      it = profile.templates.end() - 1;
    }
    ++counts[static_cast<std::size_t>(it - profile.templates.begin())];
    ++total;
  }
  if (total == 0) {
    throw Error(ErrorKind::kInvalidArgument, "query log has no queries with WHERE or GROUP BY columns");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    profile.templates[i].weight = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return profile;
}

std::string format_workload(const WorkloadProfile& profile) {
  std::string out;
  if (!profile.table.empty()) out += "table " + percent_encode(profile.table) + "\n";
  for (const auto& t : profile.templates) {
    out += encode_columns(t.columns) + " " + format_double(t.weight) + "\n";
  }
  return out;
}

WorkloadProfile parse_workload(std::string_view text) {
  WorkloadProfile profile;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  double total = 0.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) {
      throw Error(ErrorKind::kParse, "workload line " + std::to_string(lineno) +
                                         ": expected '<columns> <weight>'");
    }
    if (tok[0] == "table") {
      profile.table = percent_decode(tok[1]);
      continue;
    }
    QueryTemplate t{decode_columns(tok[0]).canonical(), parse_double(tok[1])};
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
      throw Error(ErrorKind::kParse,
                  "workload line " + std::to_string(lineno) + ": weight must be positive");
    }
    for (auto& existing : profile.templates) {
      if (existing.columns == t.columns) {
        throw Error(ErrorKind::kParse, "workload line " + std::to_string(lineno) +
                                           ": duplicate template {" + t.columns.to_string() + "}");
      }
    }
    total += t.weight;
    profile.templates.push_back(std::move(t));
  }
  if (std::abs(total - 1.0) > 1e-12) {
    for (auto& t : profile.templates) t.weight /= total;
  }
  return profile;
}

WorkloadProfile read_workload(const std::filesystem::path& path) { return parse_workload(slurp(path)); }

void write_workload(const WorkloadProfile& profile, const std::filesystem::path& path) {
  write_atomically(path, format_workload(profile));
}

CandidateSet generate_candidates(const WorkloadProfile& profile, Catalog& catalog,
                                 std::int64_t base_cap, std::int64_t ratio, int max_cols) {
  if (max_cols < 1) throw Error(ErrorKind::kInvalidArgument, "max_cols must be at least 1");
  if (base_cap < 1) throw Error(ErrorKind::kInvalidArgument, "base cap must be at least 1");
  auto table = catalog.table(profile.table);
  CandidateSet set;
  set.table = table->name;
  set.table_rows = table->row_count;
  set.average_row_bytes = table->data.average_row_bytes();
  set.base_cap = base_cap;
  set.ratio = ratio;

  auto delta_of = [&](const ColumnSetStats& s) {
    std::int64_t d = 0;
    for (const auto& [key, f] : s.frequency) d += f < base_cap ? 1 : 0;
    return d;
  };

  std::set<ColumnSet, decltype(&column_less)> subsets(&column_less);
  for (const auto& t : profile.templates) {
    const auto stats = catalog.stats(profile.table, t.columns);
    set.templates.push_back({t.columns, t.weight, stats->distinct(), delta_of(*stats)});
    const auto& cols = t.columns.columns();
    const std::size_t n = cols.size();
    if (n > 30) throw Error(ErrorKind::kInvalidArgument, "template has too many columns");
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
      if (std::popcount(mask) > max_cols) continue;
      std::vector<std::string> sub;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1) sub.push_back(cols[i]);
      }
      subsets.insert(ColumnSet(std::move(sub)));
    }
  }

  const auto families = catalog.families_for(profile.table);
  for (const auto& phi : subsets) {
    const auto stats = catalog.stats(profile.table, phi);
    Candidate c;
    c.phi = phi;
    c.delta = delta_of(*stats);
    c.distinct = stats->distinct();
    c.store = family_store_cost(*stats, base_cap);
    c.exists = std::any_of(families.begin(), families.end(),
                           [&](const auto& f) { return f->phi.same_set(phi); });
    set.candidates.push_back(std::move(c));
  }
  return set;
}

double coverage_of(const TemplateInfo& tmpl, std::span<const Candidate> candidates,
                   const std::vector<bool>& chosen) {
  double best = 0.0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (!chosen[j] || !candidates[j].phi.subset_of(tmpl.columns)) continue;
    const double ratio = tmpl.distinct == 0
                             ? 1.0
                             : static_cast<double>(candidates[j].distinct) /
                                   static_cast<double>(tmpl.distinct);
    best = std::max(best, std::min(1.0, ratio));
  }
  return best;
}

double plan_objective(const CandidateSet& set, const std::vector<bool>& chosen) {
  double g = 0.0;
  for (const auto& t : set.templates) {
    g += t.weight * coverage_of(t, set.candidates, chosen) * static_cast<double>(t.delta);
  }
  return g;
}

std::string_view to_string(SolverKind kind) {
  return kind == SolverKind::kExact ? "exact" : "heuristic";
}

std::vector<ColumnSet> SamplePlan::chosen_sets() const {
  std::vector<ColumnSet> out;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (chosen[j]) out.push_back(candidates[j].phi);
  }
  return out;
}

namespace {

class Solver {
 public:
  Solver(const CandidateSet& set, const SolveOptions& opt) : set_(set) {
    const std::size_t n = set.candidates.size();
    if (!(opt.budget_fraction >= 0.0) || !std::isfinite(opt.budget_fraction)) {
      throw Error(ErrorKind::kInvalidArgument, "storage budget must be non-negative");
    }
    if (!(opt.drift >= 0.0 && opt.drift <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "drift fraction must be in [0, 1]");
    }
    budget_ = static_cast<std::int64_t>(
        std::floor(static_cast<long double>(opt.budget_fraction) * set.table_rows));
    std::int64_t existing = 0;
    for (const auto& c : set.candidates) existing += c.exists ? c.store : 0;
    first_run_ = std::none_of(set.candidates.begin(), set.candidates.end(),
                              [](const Candidate& c) { return c.exists; });
    drift_ = first_run_ ? 1.0 : opt.drift;
    drift_limit_ = static_cast<std::int64_t>(std::floor(static_cast<long double>(drift_) * existing));
    // For each template: candidates nested in it with their distinct-count ratio.
    for (const auto& t : set.templates) {
      std::vector<std::pair<std::size_t, double>> cover;
      for (std::size_t j = 0; j < n; ++j) {
        if (!set.candidates[j].phi.subset_of(t.columns)) continue;
        const double r = t.distinct == 0 ? 1.0
                                         : static_cast<double>(set.candidates[j].distinct) /
                                               static_cast<double>(t.distinct);
        cover.emplace_back(j, std::min(1.0, r));
      }
      covers_.push_back(std::move(cover));
    }
  }

  bool feasible(const std::vector<bool>& z) const {
    std::int64_t store = 0;
    std::int64_t drift = 0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z[j]) store += set_.candidates[j].store;
      if (z[j] != set_.candidates[j].exists) drift += set_.candidates[j].store;
    }
    return store <= budget_ && (first_run_ || drift <= drift_limit_);
  }

  double objective(const std::vector<bool>& z) const {
    double g = 0.0;
    for (std::size_t i = 0; i < covers_.size(); ++i) {
      double y = 0.0;
      for (const auto& [j, r] : covers_[i]) {
        if (z[j]) y = std::max(y, r);
      }
      g += set_.templates[i].weight * y * static_cast<double>(set_.templates[i].delta);
    }
    return g;
  }

  std::vector<bool> exact() const {
    const std::size_t n = set_.candidates.size();
    if (n > kMaxExactCandidates) {
      throw Error(ErrorKind::kInvalidArgument,
                  "exact mode supports at most " + std::to_string(kMaxExactCandidates) +
                      " candidates, got " + std::to_string(n));
    }
    std::vector<std::int64_t> store(n);
    std::uint64_t existing_mask = 0;
    for (std::size_t j = 0; j < n; ++j) {
      store[j] = set_.candidates[j].store;
      if (set_.candidates[j].exists) existing_mask |= std::uint64_t{1} << j;
    }
    std::vector<std::vector<std::pair<std::uint64_t, double>>> covers;
    for (const auto& c : covers_) {
      std::vector<std::pair<std::uint64_t, double>> v;
      for (const auto& [j, r] : c) v.emplace_back(std::uint64_t{1} << j, r);
      covers.push_back(std::move(v));
    }
    bool found = false;
    std::uint64_t best_mask = 0;
    double best_g = -1.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      std::int64_t used = 0;
      std::int64_t drift = 0;
      const std::uint64_t changed = mask ^ existing_mask;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1) used += store[j];
        if (changed >> j & 1) drift += store[j];
      }
      if (used > budget_ || (!first_run_ && drift > drift_limit_)) continue;
      double g = 0.0;
      for (std::size_t i = 0; i < covers.size(); ++i) {
        double y = 0.0;
        for (const auto& [bit, r] : covers[i]) {
          if (mask & bit) y = std::max(y, r);
        }
        g += set_.templates[i].weight * y * static_cast<double>(set_.templates[i].delta);
      }
      if (!found || g > best_g || (g == best_g && lex_less(mask, best_mask))) {
        found = true;
        best_g = g;
        best_mask = mask;
      }
    }
    if (!found) infeasible();
    std::vector<bool> z(n);
    for (std::size_t j = 0; j < n; ++j) z[j] = (best_mask >> j & 1) != 0;
    return z;
  }

  std::vector<bool> heuristic() const {
    const std::size_t n = set_.candidates.size();
    std::vector<bool> z(n, false);
    if (!first_run_) {
      for (std::size_t j = 0; j < n; ++j) z[j] = set_.candidates[j].exists;
    }
    // Shed storage while over budget, cheapest objective loss per row first.
    const std::vector<bool> start = z;
    bool shed = true;
    while (used(z) > budget_) {
      std::optional<std::size_t> pick;
      double pick_score = 0.0;
      const double g = objective(z);
      for (std::size_t j = 0; j < n; ++j) {
        if (!z[j]) continue;
        auto trial = z;
        trial[j] = false;
        if (!first_run_ && drift(trial) > drift_limit_) continue;
        const double loss = g - objective(trial);
        const double score = set_.candidates[j].store > 0
                                 ? loss / static_cast<double>(set_.candidates[j].store)
                                 : std::numeric_limits<double>::infinity();
        if (!pick || score < pick_score) {
          pick = j;
          pick_score = score;
        }
      }
      if (!pick) {
        shed = false;
        break;
      }
      z[*pick] = false;
    }
    // Greedy shedding can overshoot the drift limit when a feasible removal
    // set exists; search removal subsets directly before giving up.
    if (!shed || !feasible(z)) {
      z = start;
      if (!repair(z)) infeasible();
    }
    greedy(z);
    for (int round = 0; round < 1000; ++round) {
      const double g = objective(z);
      double best_gain = 1e-12 * std::max(1.0, std::abs(g));
      std::optional<std::pair<std::size_t, std::size_t>> move;
      for (std::size_t i = 0; i < n; ++i) {
        if (!z[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (z[j]) continue;
          auto trial = z;
          trial[i] = false;
          trial[j] = true;
          if (!feasible(trial)) continue;
          const double gain = objective(trial) - g;
          if (gain > best_gain) {
            best_gain = gain;
            move = {i, j};
          }
        }
      }
      if (!move) break;
      z[move->first] = false;
      z[move->second] = true;
      greedy(z);
    }
    return z;
  }

  std::int64_t used(const std::vector<bool>& z) const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < z.size(); ++j) s += z[j] ? set_.candidates[j].store : 0;
    return s;
  }
  std::int64_t drift(const std::vector<bool>& z) const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      s += z[j] != set_.candidates[j].exists ? set_.candidates[j].store : 0;
    }
    return s;
  }

  std::int64_t budget() const { return budget_; }
  bool first_run() const { return first_run_; }
  double drift_fraction() const { return drift_; }
  std::int64_t drift_limit() const { return drift_limit_; }

 private:
  // Lexicographic order of the sorted chosen-index lists.
  static bool lex_less(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t diff = a ^ b;
    if (diff == 0) return false;
    const int d = std::countr_zero(diff);
    const std::uint64_t above = ~((std::uint64_t{2} << d) - 1);
    if (a >> d & 1) return (b & above) != 0;
    return (a & above) == 0;
  }

  // Depth-first search (largest samples first, bounded node count) for a set
  // of chosen samples whose removal brings storage within budget without
  // exceeding the drift limit. Each removal adds its rows to both sides.
  bool repair(std::vector<bool>& z) const {
    std::vector<std::size_t> items;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z[j]) items.push_back(j);
    }
    std::sort(items.begin(), items.end(), [&](std::size_t a, std::size_t b) {
      return set_.candidates[a].store > set_.candidates[b].store ||
             (set_.candidates[a].store == set_.candidates[b].store && a < b);
    });
    const std::int64_t excess = used(z) - budget_;
    const std::int64_t slack = first_run_ ? std::numeric_limits<std::int64_t>::max()
                                          : drift_limit_ - drift(z);
    std::vector<std::int64_t> suffix(items.size() + 1, 0);
    for (std::size_t i = items.size(); i-- > 0;) {
      suffix[i] = suffix[i + 1] + set_.candidates[items[i]].store;
    }
    std::vector<bool> take(items.size(), false);
    std::int64_t nodes = 0;
    std::function<bool(std::size_t, std::int64_t)> dfs = [&](std::size_t i, std::int64_t removed) {
      if (removed >= excess) return true;
      if (i == items.size() || ++nodes > 2000000) return false;
      if (removed + suffix[i] < excess) return false;
      const std::int64_t s = set_.candidates[items[i]].store;
      if (removed + s <= slack) {
        take[i] = true;
        if (dfs(i + 1, removed + s)) return true;
        take[i] = false;
      }
      return dfs(i + 1, removed);
    };
    if (excess > slack || !dfs(0, 0)) return false;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (take[i]) z[items[i]] = false;
    }
    return feasible(z);
  }

  void greedy(std::vector<bool>& z) const {
    for (;;) {
      const double g = objective(z);
      std::optional<std::size_t> pick;
      double pick_score = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (z[j]) continue;
        auto trial = z;
        trial[j] = true;
        if (!feasible(trial)) continue;
        const double gain = objective(trial) - g;
        if (!(gain > 0.0)) continue;
        const double score = set_.candidates[j].store > 0
                                 ? gain / static_cast<double>(set_.candidates[j].store)
                                 : std::numeric_limits<double>::infinity();
        if (!pick || score > pick_score) {
          pick = j;
          pick_score = score;
        }
      }
      if (!pick) return;
      z[*pick] = true;
    }
  }

  [[noreturn]] void infeasible() const {
    throw Error(ErrorKind::kInfeasible,
                "no sample plan fits the storage budget of " + std::to_string(budget_) +
                    " rows while changing at most " + std::to_string(drift_limit_) +
                    " rows of existing samples (drift " + format_double(drift_) + ")");
  }

  const CandidateSet& set_;
  std::vector<std::vector<std::pair<std::size_t, double>>> covers_;
  std::int64_t budget_ = 0;
  bool first_run_ = false;
  double drift_ = 1.0;
  std::int64_t drift_limit_ = 0;
};

}  // namespace

SamplePlan solve_plan(const CandidateSet& set, const SolveOptions& options) {
  Solver solver(set, options);
  SamplePlan plan;
  plan.table = set.table;
  plan.table_rows = set.table_rows;
  plan.average_row_bytes = set.average_row_bytes;
  plan.base_cap = set.base_cap;
  plan.ratio = set.ratio;
  plan.budget_fraction = options.budget_fraction;
  plan.budget_rows = solver.budget();
  plan.drift = solver.drift_fraction();
  plan.first_run = solver.first_run();
  plan.drift_limit = solver.drift_limit();
  const bool exact = options.mode == SolverMode::kExact ||
                     (options.mode == SolverMode::kAuto && set.candidates.size() <= kMaxExactCandidates);
  plan.solver = exact ? SolverKind::kExact : SolverKind::kHeuristic;
  plan.chosen = exact ? solver.exact() : solver.heuristic();
  plan.candidates = set.candidates;
  plan.templates = set.templates;
  for (const auto& t : set.templates) plan.coverage.push_back(coverage_of(t, set.candidates, plan.chosen));
  plan.objective = plan_objective(set, plan.chosen);
  plan.budget_used = solver.used(plan.chosen);
  plan.drift_rows = solver.drift(plan.chosen);
  return plan;
}

bool plan_within_budget(const SamplePlan& plan) {
  std::int64_t used = 0;
  for (std::size_t j = 0; j < plan.candidates.size(); ++j) {
    used += plan.chosen[j] ? plan.candidates[j].store : 0;
  }
  return used <= plan.budget_rows;
}

bool plan_within_drift(const SamplePlan& plan) {
  if (plan.first_run) return true;
  std::int64_t existing = 0;
  std::int64_t changed = 0;
  for (std::size_t j = 0; j < plan.candidates.size(); ++j) {
    const auto& c = plan.candidates[j];
    existing += c.exists ? c.store : 0;
    changed += plan.chosen[j] != c.exists ? c.store : 0;
  }
  // changed <= r * existing, compared without rounding: both sides scaled
  // exactly in long double for row counts below 2^63.
  return static_cast<long double>(changed) <= static_cast<long double>(plan.drift) * existing;
}

std::string format_plan(const SamplePlan& p) {
  std::ostringstream out;
  out << "aqe-plan v1\n";
  out << "table " << percent_encode(p.table) << "\n";
  out << "table_rows " << p.table_rows << "\n";
  out << "average_row_bytes " << format_double(p.average_row_bytes) << "\n";
  out << "base_cap " << p.base_cap << "\n";
  out << "ratio " << p.ratio << "\n";
  out << "budget_fraction " << format_double(p.budget_fraction) << "\n";
  out << "budget_rows " << p.budget_rows << "\n";
  out << "budget_used " << p.budget_used << "\n";
  out << "budget_bytes " << format_double(static_cast<double>(p.budget_used) * p.average_row_bytes)
      << "\n";
  out << "drift " << format_double(p.drift) << "\n";
  out << "first_run " << (p.first_run ? 1 : 0) << "\n";
  out << "drift_rows " << p.drift_rows << "\n";
  out << "drift_limit " << p.drift_limit << "\n";
  out << "solver " << to_string(p.solver) << "\n";
  out << "objective " << format_double(p.objective) << "\n";
  for (std::size_t j = 0; j < p.candidates.size(); ++j) {
    const auto& c = p.candidates[j];
    out << "candidate " << encode_columns(c.phi) << " delta " << c.delta << " distinct "
        << c.distinct << " store " << c.store << " exists " << (c.exists ? 1 : 0) << " chosen "
        << (p.chosen[j] ? 1 : 0) << "\n";
  }
  for (std::size_t i = 0; i < p.templates.size(); ++i) {
    const auto& t = p.templates[i];
    out << "template " << encode_columns(t.columns) << " weight " << format_double(t.weight)
        << " distinct " << t.distinct << " delta " << t.delta << " coverage "
        << format_double(p.coverage[i]) << "\n";
  }
  out << "end\n";
  return out.str();
}

SamplePlan parse_plan(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "aqe-plan v1") {
    throw Error(ErrorKind::kVersionMismatch, "not an aqe-plan v1 file");
  }
  SamplePlan p;
  bool ended = false;
  while (std::getline(in, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    auto need = [&](std::size_t n) {
      if (tok.size() != n) throw Error(ErrorKind::kParse, "malformed plan line: " + line);
    };
    auto field = [&](std::size_t i, std::string_view name) -> const std::string& {
      if (tok[i] != name) throw Error(ErrorKind::kParse, "malformed plan line: " + line);
      return tok[i + 1];
    };
    if (key == "end") {
      ended = true;
      break;
    } else if (key == "candidate") {
      need(12);
      Candidate c;
      c.phi = decode_columns(tok[1]);
      c.delta = parse_int(field(2, "delta"));
      c.distinct = parse_int(field(4, "distinct"));
      c.store = parse_int(field(6, "store"));
      c.exists = parse_int(field(8, "exists")) != 0;
      p.chosen.push_back(parse_int(field(10, "chosen")) != 0);
      p.candidates.push_back(std::move(c));
    } else if (key == "template") {
      need(10);
      TemplateInfo t;
      t.columns = decode_columns(tok[1]);
      t.weight = parse_double(field(2, "weight"));
      t.distinct = parse_int(field(4, "distinct"));
      t.delta = parse_int(field(6, "delta"));
      p.coverage.push_back(parse_double(field(8, "coverage")));
      p.templates.push_back(std::move(t));
    } else {
      need(2);
      const std::string& v = tok[1];
      if (key == "table") p.table = percent_decode(v);
      else if (key == "table_rows") p.table_rows = parse_int(v);
      else if (key == "average_row_bytes") p.average_row_bytes = parse_double(v);
      else if (key == "base_cap") p.base_cap = parse_int(v);
      else if (key == "ratio") p.ratio = parse_int(v);
      else if (key == "budget_fraction") p.budget_fraction = parse_double(v);
      else if (key == "budget_rows") p.budget_rows = parse_int(v);
      else if (key == "budget_used") p.budget_used = parse_int(v);
      else if (key == "budget_bytes") {
      } else if (key == "drift") p.drift = parse_double(v);
      else if (key == "first_run") p.first_run = parse_int(v) != 0;
      else if (key == "drift_rows") p.drift_rows = parse_int(v);
      else if (key == "drift_limit") p.drift_limit = parse_int(v);
      else if (key == "solver") {
        if (v == "exact") p.solver = SolverKind::kExact;
        else if (v == "heuristic") p.solver = SolverKind::kHeuristic;
        else throw Error(ErrorKind::kParse, "unknown solver '" + v + "'");
      } else if (key == "objective") p.objective = parse_double(v);
      else throw Error(ErrorKind::kParse, "unknown plan key '" + key + "'");
    }
  }
  if (!ended) throw Error(ErrorKind::kParse, "plan file is truncated (no 'end')");
  return p;
}

SamplePlan read_plan(const std::filesystem::path& path) { return parse_plan(slurp(path)); }

void write_plan(const SamplePlan& plan, const std::filesystem::path& path) {
  write_atomically(path, format_plan(plan));
}

}  // namespace aqe
