#include "aqe/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "aqe/error.hpp"
#include "aqe/text_format.hpp"

namespace aqe {

namespace {

struct SubRun {
  ScanResult result;
  bool covers = false;
  std::string sample;
  bool has_profile = false;
  ErrorLatencyProfile profile;
};

std::string aggregate_header(const AggregateSpec& a) {
  std::string s = a.spelling.empty() ? "AGG" : a.spelling;
  s += "(";
  s += a.target ? unparse_expr(*a.target) : "*";
  if (a.op == AggregateOp::kQuantile && s.rfind("MEDIAN", 0) != 0) s += ", " + format_double(a.p);
  return s + ")";
}

bool literal_holds(const Value& v, CompareOp op, const Value& lit) {
  int cmp = 0;
  const bool vs = std::holds_alternative<std::string>(v);
  const bool ls = std::holds_alternative<std::string>(lit);
  if (vs != ls) return false;
  if (vs) {
    const auto& a = std::get<std::string>(v);
    const auto& b = std::get<std::string>(lit);
    cmp = a < b ? -1 : (a == b ? 0 : 1);
  } else if (std::holds_alternative<std::int64_t>(v) && std::holds_alternative<std::int64_t>(lit)) {
    const auto a = std::get<std::int64_t>(v);
    const auto b = std::get<std::int64_t>(lit);
    cmp = a < b ? -1 : (a == b ? 0 : 1);
  } else {
    const double a = as_double(v);
    const double b = as_double(lit);
    cmp = a < b ? -1 : (a == b ? 0 : 1);
  }
  switch (op) {
    case CompareOp::kEq: return cmp == 0;
    case CompareOp::kNe: return cmp != 0;
    case CompareOp::kLt: return cmp < 0;
    case CompareOp::kLe: return cmp <= 0;
    case CompareOp::kGt: return cmp > 0;
    case CompareOp::kGe: return cmp >= 0;
  }
  return false;
}

// Whether some row of group `key` could satisfy the predicate, judging only
// the atoms over grouping columns.
bool group_may_match(const BoundedQuery& q, const GroupKey& key) {
  if (q.where.empty()) return true;
  for (const auto& conj : q.where) {
    bool ok = true;
    for (const auto& atom : conj) {
      auto it = std::find(q.group_by.begin(), q.group_by.end(), atom.column);
      if (it == q.group_by.end()) continue;
      if (!literal_holds(key[static_cast<std::size_t>(it - q.group_by.begin())], atom.op,
                         atom.literal)) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string display_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == std::floor(v) && std::fabs(v) < 1e15) return format_double(v);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Aggregate index each RELATIVE ERROR item reports on: the nearest
// aggregate before it, else the first one.
std::vector<std::size_t> relative_targets(const BoundedQuery& q) {
  std::vector<std::size_t> out;
  std::size_t aggregates = 0;
  for (const auto& item : q.select) {
    if (item.kind == SelectItem::Kind::kAggregate) ++aggregates;
    if (item.kind == SelectItem::Kind::kRelativeError) out.push_back(aggregates ? aggregates - 1 : 0);
  }
  return out;
}

QueryResult assemble(const BoundedQuery& q, std::vector<SubRun>& subs, double confidence,
                     Catalog& catalog, const EngineOptions& options, bool full_table) {
  QueryResult out;
  out.query = q;
  out.confidence = confidence;
  out.group_columns = q.group_by;
  out.warnings = q.warnings;
  const auto aggregates = q.aggregates();
  for (const auto& a : aggregates) out.value_columns.push_back(aggregate_header(a));
  const auto rel_targets = relative_targets(q);
  for (const auto& item : q.select) {
    if (item.kind == SelectItem::Kind::kRelativeError) {
      out.relative_columns.push_back("rel_err@" + format_double(item.confidence));
    }
  }

  struct Combined {
    std::vector<GroupSample> samples;
    std::set<std::string> sources;
  };
  std::map<GroupKey, Combined> groups;
  std::set<GroupKey> seen;
  bool covers = true;
  std::vector<std::string> run_flags;
  std::vector<std::string> labels;
  for (auto& sub : subs) {
    covers = covers && sub.covers;
    labels.push_back(sub.sample);
    if (sub.has_profile) {
      for (const auto& f : sub.profile.flags()) {
        if (f != "exact" && std::find(run_flags.begin(), run_flags.end(), f) == run_flags.end()) {
          run_flags.push_back(f);
        }
      }
      out.profiles.push_back(sub.profile);
    }
    seen.insert(sub.result.seen.begin(), sub.result.seen.end());
    for (std::size_t g = 0; g < sub.result.keys.size(); ++g) {
      Combined& c = groups[sub.result.keys[g]];
      if (c.samples.empty()) c.samples.resize(aggregates.size());
      c.sources.insert(sub.sample);
      for (std::size_t a = 0; a < aggregates.size(); ++a) {
        auto& src = sub.result.samples[g][a];
        auto& dst = c.samples[a];
        dst.rows_read += src.rows_read;
        for (auto& s : src.strata) dst.strata.push_back(std::move(s));
      }
    }
  }

  for (auto& [key, c] : groups) {
    ResultRow row;
    row.key = key;
    row.sample = join({c.sources.begin(), c.sources.end()}, "+");
    row.rows = c.samples.empty() ? 0 : c.samples.front().matched();
    bool exact = true;
    for (std::size_t a = 0; a < aggregates.size(); ++a) {
      GroupEstimate e = estimate(aggregates[a], c.samples[a], confidence, options.runtime.estimator);
      e.key = key;
      if (!covers && !full_table) e.exact = false;
      exact = exact && e.exact;
      row.values.push_back(std::move(e));
    }
    for (std::size_t r = 0; r < rel_targets.size(); ++r) {
      const GroupEstimate& e = row.values.at(rel_targets[r]);
      double conf = 0.95;
      std::size_t seen_rel = 0;
      for (const auto& item : q.select) {
        if (item.kind != SelectItem::Kind::kRelativeError) continue;
        if (seen_rel++ == r) conf = item.confidence;
      }
      const double half = e.exact ? 0.0 : z_value(conf) * std::sqrt(e.variance);
      row.relative_errors.push_back(half == 0.0 ? 0.0 : half / std::fabs(e.estimate));
    }
    if (exact) row.flags.push_back("exact");
    row.flags.insert(row.flags.end(), run_flags.begin(), run_flags.end());
    out.rows.push_back(std::move(row));
  }

  // Groups that exist in the table but never surfaced in any row read.
  if (!full_table) {
    const std::string all_labels = join(labels, "+");
    if (!q.group_by.empty()) {
      const auto hist = catalog.stats(q.table, ColumnSet(q.group_by));
      for (const auto& [key, freq] : hist->frequency) {
        if (groups.count(key) || seen.count(key) || !group_may_match(q, key)) continue;
        ResultRow row;
        row.key = key;
        row.missing = true;
        row.sample = all_labels;
        row.flags.push_back("missing");
        out.rows.push_back(std::move(row));
      }
    }
  }
  if (q.group_by.empty() && groups.empty()) {
    ResultRow row;
    row.missing = true;
    row.sample = join(labels, "+");
    row.flags.push_back("missing");
    out.rows.push_back(std::move(row));
  }
  std::sort(out.rows.begin(), out.rows.end(),
            [](const ResultRow& a, const ResultRow& b) { return a.key < b.key; });
  return out;
}

bool source_covers(const SampleSource& s, const BoundedQuery& q) {
  if (s.kind == SampleSource::Kind::kTable) return true;
  if (s.kind == SampleSource::Kind::kUniform) return false;
  for (const auto& c : q.filter_columns()) {
    if (!s.phi.contains(c)) return false;
  }
  return true;
}

}  // namespace

const ResultRow* QueryResult::find(const GroupKey& key) const {
  for (const auto& r : rows) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

namespace {

std::vector<std::vector<std::string>> result_cells(const QueryResult& r, bool tsv) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = r.group_columns;
  for (const auto& v : r.value_columns) {
    header.push_back(v);
    header.push_back("+/-");
  }
  header.insert(header.end(), r.relative_columns.begin(), r.relative_columns.end());
  for (const char* h : {"confidence", "n", "sample", "flags"}) header.emplace_back(h);
  cells.push_back(std::move(header));
  auto num = [&](double v) { return tsv ? format_double(v) : display_number(v); };
  for (const auto& row : r.rows) {
    std::vector<std::string> line;
    for (std::size_t k = 0; k < r.group_columns.size(); ++k) {
      line.push_back(k < row.key.size() ? format_value(row.key[k]) : "");
    }
    for (std::size_t a = 0; a < r.value_columns.size(); ++a) {
      if (row.missing) {
        line.emplace_back("-");
        line.emplace_back("-");
      } else {
        line.push_back(num(row.values[a].estimate));
        line.push_back(num(row.values[a].half_width()));
      }
    }
    for (std::size_t i = 0; i < r.relative_columns.size(); ++i) {
      line.push_back(row.missing ? "-" : num(row.relative_errors[i]));
    }
    line.push_back(format_double(r.confidence));
    line.push_back(std::to_string(row.rows));
    line.push_back(row.sample);
    line.push_back(row.flags.empty() ? "-" : join(row.flags, ","));
    cells.push_back(std::move(line));
  }
  return cells;
}

}  // namespace

std::string QueryResult::format_table() const {
  const auto cells = result_cells(*this, false);
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  const std::size_t keys = group_columns.size();
  const std::size_t tail = width.size() - 2;  // sample and flags stay left-aligned
  std::ostringstream os;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    std::string text;
    for (std::size_t i = 0; i < cells[l].size(); ++i) {
      const std::string& c = cells[l][i];
      const std::string pad(width[i] - c.size(), ' ');
      if (i) text += "  ";
      text += (i < keys || i >= tail) ? c + pad : pad + c;
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    os << text << "\n";
    if (l == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      os << std::string(total + 2 * (width.size() - 1), '-') << "\n";
    }
  }
  for (const auto& w : warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string QueryResult::format_tsv() const {
  std::ostringstream os;
  for (const auto& line : result_cells(*this, true)) os << join(line, "\t") << "\n";
  return os.str();
}

std::string QueryResult::format_profiles() const {
  std::string out;
  for (const auto& p : profiles) out += p.dump();
  return out;
}

Engine::Engine(Catalog& catalog, EngineOptions options)
    : catalog_(catalog), options_(options), cache_(options.cache_bytes) {}

QueryResult Engine::run(std::string_view sql) {
  return run(parse(sql, options_.default_confidence));
}

QueryResult Engine::run(const BoundedQuery& query) {
  try {
    return run_impl(query);
  } catch (const Error& e) {
    throw Error(e.kind(), "query on table '" + query.table + "': " + e.what());
  }
}

QueryResult Engine::run_impl(const BoundedQuery& q) {
  const auto start = Clock::now();
  const auto table = catalog_.table(q.table);
  std::vector<SubRun> subs;

  if (q.bound.kind == Bound::Kind::kNone) {
    ScanSpec spec{filter_from_dnf(q.where), q.group_by, q.aggregates()};
    const SampleSource source = table_source(table);
    SubRun sub;
    sub.result = scan_source(spec, source);
    sub.covers = true;
    sub.sample = source.label();
    subs.push_back(std::move(sub));
    return assemble(q, subs, options_.default_confidence, catalog_, options_, true);
  }

  const DisjunctionRewrite rewrite = rewrite_disjunction(q);
  const bool split = rewrite.subqueries.size() > 1;
  auto run_sub = [&](const ScanSpec& spec) {
    const FamilySelection sel = select_family(spec, q.table, catalog_, cache_, options_.runtime);
    SubRun sub;
    sub.covers = sel.covers;
    ProfiledRun run;
    if (q.bound.kind == Bound::Kind::kError) {
      ConfidenceSpec cs;
      cs.confidence = q.bound.confidence;
      cs.measure = q.bound.measure;
      cs.epsilon = (q.bound.measure == ErrorMeasure::kRelative ? q.bound.relative_fraction()
                                                               : q.bound.epsilon) *
                   rewrite.epsilon_scale;
      try {
        run = build_error_profile(spec, sel.choice, sel.covers, cs, cache_, options_.runtime);
      } catch (const Error& e) {
        // An empty disjunct contributes nothing to the union.
        if (!split || e.kind() != ErrorKind::kMissingGroup) throw;
        run.source = sel.choice.source(sel.choice.smallest_level());
        run.result = execute_with_reuse(spec, run.source, cache_);
        run.profile.family = sel.choice.name();
      }
    } else {
      run = build_latency_profile(spec, sel.choice, sel.covers, q.bound.seconds, start, cache_,
                                  options_.runtime);
    }
    sub.result = std::move(run.result);
    sub.sample = run.source.label();
    sub.has_profile = true;
    sub.profile = std::move(run.profile);
    return sub;
  };
  if (split && options_.runtime.parallel_probes) {
    std::vector<std::future<SubRun>> futures;
    for (const auto& spec : rewrite.subqueries) {
      futures.push_back(std::async(std::launch::async, run_sub, std::cref(spec)));
    }
    for (auto& f : futures) subs.push_back(f.get());
  } else {
    for (const auto& spec : rewrite.subqueries) subs.push_back(run_sub(spec));
  }
  return assemble(q, subs, q.bound.confidence, catalog_, options_, false);
}

QueryResult Engine::run_on(const BoundedQuery& query, const SampleSource& source) {
  try {
    ScanSpec spec{filter_from_dnf(query.where), query.group_by, query.aggregates()};
    SubRun sub;
    sub.result = execute_with_reuse(spec, source, cache_);
    sub.covers = source_covers(source, query);
    sub.sample = source.label();
    std::vector<SubRun> subs;
    subs.push_back(std::move(sub));
    const double conf =
        query.bound.kind == Bound::Kind::kNone ? options_.default_confidence : query.bound.confidence;
    return assemble(query, subs, conf, catalog_, options_,
                    source.kind == SampleSource::Kind::kTable);
  } catch (const Error& e) {
    throw Error(e.kind(), "query on table '" + query.table + "': " + e.what());
  }
}

}  // namespace aqe
