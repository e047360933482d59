#include "aqe/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "aqe/error.hpp"
#include "aqe/hash.hpp"
#include "aqe/text_format.hpp"

namespace aqe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void add_unique(std::vector<std::string>& out, const std::string& s) {
  if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// SampleChoice

int SampleChoice::level_count() const { return family ? family->level_count() : 1; }

std::int64_t SampleChoice::cap(int level) const {
  if (family) return family->cap(level);
  return static_cast<std::int64_t>(uniform->rows.row_count());
}

std::int64_t SampleChoice::level_rows(int level) const {
  if (family) return family->level_rows.at(static_cast<std::size_t>(level));
  return static_cast<std::int64_t>(uniform->rows.row_count());
}

SampleSource SampleChoice::source(int level) const {
  if (family) return family_source(family, level);
  return uniform_source(uniform);
}

std::string SampleChoice::name() const { return family ? family->name : uniform->name; }

bool SampleChoice::covers(const std::vector<std::string>& columns) const {
  if (!family) return false;
  return std::all_of(columns.begin(), columns.end(),
                     [&](const std::string& c) { return family->phi.contains(c); });
}

std::vector<std::string> scan_columns(const ScanSpec& spec) {
  std::vector<std::string> out;
  for (const auto& clause : spec.filter) {
    for (const auto& a : clause.include) add_unique(out, a.column);
    for (const auto& conj : clause.exclude) {
      for (const auto& a : conj) add_unique(out, a.column);
    }
  }
  for (const auto& g : spec.group_by) add_unique(out, g);
  return out;
}

std::uint64_t scan_fingerprint(const ScanSpec& spec) {
  std::string text = "filter";
  for (const auto& clause : spec.filter) {
    text += " [" + unparse_predicate({clause.include});
    for (const auto& conj : clause.exclude) text += " except " + unparse_predicate({conj});
    text += "]";
  }
  text += " group";
  for (const auto& g : spec.group_by) text += " " + g;
  text += " aggregate";
  for (const auto& a : spec.aggregates) {
    text += " " + std::to_string(static_cast<int>(a.op)) + "(";
    if (a.target) text += unparse_expr(*a.target);
    text += "," + format_double(a.p) + ")";
  }
  return fnv1a(text);
}

// ---------------------------------------------------------------------------
// ReuseCache

std::size_t partial_bytes(const BlockPartial& p) {
  std::size_t bytes = sizeof(BlockPartial) + 8 * (p.cell_keys.size() + p.seen_keys.size());
  for (const auto& c : p.cells) {
    bytes += sizeof(c) + c.sums.size() * 64 + c.sum_sq.size() * 8;
    for (const auto& v : c.values) bytes += 8 * v.size() + sizeof(v);
  }
  return bytes;
}

ReuseCache::ReuseCache(std::size_t max_bytes) : max_bytes_(max_bytes) {}

std::shared_ptr<const BlockPartial> ReuseCache::find(std::uint64_t fingerprint,
                                                     const std::string& source,
                                                     std::int64_t block, bool* corrupt) {
  if (corrupt) *corrupt = false;
  const Key key{fingerprint, source, block};
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    if (it->second.partial->checksum() == it->second.checksum) return it->second.partial;
  }
  std::unique_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    bytes_ -= it->second.bytes;
    entries_.erase(it);
    order_.erase(std::remove(order_.begin(), order_.end(), key), order_.end());
  }
  ++warnings_;
  if (corrupt) *corrupt = true;
  return nullptr;
}

void ReuseCache::put(std::uint64_t fingerprint, const std::string& source, std::int64_t block,
                     std::shared_ptr<const BlockPartial> partial) {
  Entry e;
  e.checksum = partial->checksum();
  e.bytes = partial_bytes(*partial);
  e.partial = std::move(partial);
  const Key key{fingerprint, source, block};
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.try_emplace(key);
  if (!inserted) bytes_ -= it->second.bytes;
  it->second = std::move(e);
  bytes_ += it->second.bytes;
  if (inserted) order_.push_back(key);
  evict_locked();
}

void ReuseCache::evict_locked() {
  if (max_bytes_ == 0) return;
  while (bytes_ > max_bytes_ && !order_.empty()) {
    auto it = entries_.find(order_.front());
    order_.pop_front();
    if (it == entries_.end()) continue;
    bytes_ -= it->second.bytes;
    entries_.erase(it);
  }
}

void ReuseCache::clear() {
  std::unique_lock lock(mutex_);
  entries_.clear();
  order_.clear();
  bytes_ = 0;
}

std::size_t ReuseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t ReuseCache::bytes() const {
  std::shared_lock lock(mutex_);
  return bytes_;
}

bool ReuseCache::corrupt_for_testing(std::uint64_t fingerprint, const std::string& source,
                                     std::int64_t block) {
  std::unique_lock lock(mutex_);
  auto it = entries_.find(Key{fingerprint, source, block});
  if (it == entries_.end()) return false;
  auto damaged = std::make_shared<BlockPartial>(*it->second.partial);
  if (damaged->cells.empty()) {
    damaged->rows += 1;
  } else {
    damaged->cells.front().matched += 1;
  }
  it->second.partial = std::move(damaged);
  return true;
}

ScanResult execute_with_reuse(const ScanSpec& spec, const SampleSource& source, ReuseCache& cache,
                              ReuseStats* stats, bool recompute) {
  const std::uint64_t fp = scan_fingerprint(spec);
  const CompiledScan scan(spec, source);
  std::vector<std::shared_ptr<const BlockPartial>> parts(source.blocks.size());
  if (!recompute) {
    bool any_corrupt = false;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      bool corrupt = false;
      parts[i] = cache.find(fp, source.id, source.blocks[i].block_id, &corrupt);
      any_corrupt = any_corrupt || corrupt;
    }
    // A damaged entry invalidates the whole execution.
    if (any_corrupt) std::fill(parts.begin(), parts.end(), nullptr);
  }
  ReuseStats local;
  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i]) {
      ++local.blocks_reused;
      continue;
    }
    auto fresh = std::make_shared<const BlockPartial>(scan.scan_block(source.blocks[i]));
    cache.put(fp, source.id, source.blocks[i].block_id, fresh);
    parts[i] = std::move(fresh);
    ++local.blocks_computed;
    local.rows_computed += source.blocks[i].rows();
  }
  local.seconds = seconds_since(t0);
  ScanAccumulator acc(spec, source);
  for (const auto& p : parts) acc.merge(*p);
  if (stats) *stats = local;
  return acc.finish();
}

// ---------------------------------------------------------------------------
// Family selection and rewriting

FamilySelection select_family(const ScanSpec& spec, const std::string& table,
                              const Catalog& catalog, ReuseCache& cache,
                              const RuntimeOptions& options) {
  std::vector<SampleChoice> candidates;
  for (auto& f : catalog.families_for(table)) candidates.push_back({f, nullptr});
  if (auto u = catalog.uniform_for(table)) candidates.push_back({nullptr, u});
  if (candidates.empty()) {
    throw Error(ErrorKind::kNotFound, "no samples for table '" + table + "'");
  }
  const auto columns = scan_columns(spec);

  FamilySelection out;
  const SampleChoice* best = nullptr;
  for (const auto& c : candidates) {
    if (!c.covers(columns)) continue;
    auto rank = [](const SampleChoice& s) {
      return std::make_tuple(s.family->phi.size(), s.family->rows.row_count(),
                             s.family->phi.to_string());
    };
    if (!best || rank(c) < rank(*best)) best = &c;
  }
  if (best) {
    out.choice = *best;
    out.covers = true;
    return out;
  }

  auto probe = [&](const SampleChoice& c) {
    const int level = c.smallest_level();
    const ScanResult r = execute_with_reuse(spec, c.source(level), cache);
    return ProbeOutcome{c, level, r.rows_read, r.rows_matched};
  };
  if (options.parallel_probes && candidates.size() > 1) {
    std::vector<std::future<ProbeOutcome>> futures;
    for (const auto& c : candidates) futures.push_back(std::async(std::launch::async, probe, c));
    for (auto& f : futures) out.probes.push_back(f.get());
  } else {
    for (const auto& c : candidates) out.probes.push_back(probe(c));
  }
  const ProbeOutcome* winner = nullptr;
  for (const auto& p : out.probes) {
    if (!winner || p.ratio() > winner->ratio() ||
        (p.ratio() == winner->ratio() && p.choice.name() < winner->choice.name())) {
      winner = &p;
    }
  }
  out.choice = winner->choice;
  return out;
}

DisjunctionRewrite rewrite_disjunction(const BoundedQuery& query) {
  if (query.where.size() > kMaxDisjuncts) {
    throw Error(ErrorKind::kInvalidArgument,
                "predicate has " + std::to_string(query.where.size()) +
                    " disjuncts; at most " + std::to_string(kMaxDisjuncts) + " are supported");
  }
  DisjunctionRewrite out;
  ScanSpec base;
  base.group_by = query.group_by;
  base.aggregates = query.aggregates();
  if (query.where.empty()) {
    out.subqueries.push_back(base);
    return out;
  }
  for (std::size_t k = 0; k < query.where.size(); ++k) {
    ScanSpec sub = base;
    Clause clause;
    clause.include = query.where[k];
    clause.exclude.assign(query.where.begin(), query.where.begin() + static_cast<std::ptrdiff_t>(k));
    sub.filter.push_back(std::move(clause));
    out.subqueries.push_back(std::move(sub));
  }
  out.variance_share = 1.0 / static_cast<double>(query.where.size());
  out.epsilon_scale = std::sqrt(out.variance_share);
  return out;
}

// ---------------------------------------------------------------------------
// Error-latency profiles

std::vector<std::string> ErrorLatencyProfile::flags() const {
  std::vector<std::string> out;
  if (exact) out.push_back("exact");
  if (bound_not_guaranteed) out.push_back("bound-not-guaranteed");
  if (bound_may_be_exceeded) out.push_back("bound-may-be-exceeded");
  if (bound_exceeded) out.push_back("bound-exceeded");
  return out;
}

std::string ErrorLatencyProfile::dump() const {
  std::ostringstream os;
  os << "profile mode=" << (mode == Mode::kError ? "error" : "time") << " family=" << family
     << " levels=" << level_count << "\n";
  os << "probe level=" << probe_level << " cap=" << probe_cap << " rows_read=" << rows_read
     << " rows_matched=" << rows_matched << " selectivity=" << format_double(selectivity) << "\n";
  os << "pilot estimate=" << format_double(pilot.estimate)
     << " variance=" << format_double(pilot.sample_variance)
     << " selectivity=" << format_double(pilot.selectivity)
     << " density=" << format_double(pilot.density)
     << " population=" << format_double(pilot.population) << "\n";
  for (const auto& r : runs) {
    os << "run level=" << r.level << " rows=" << r.rows << " seconds=" << format_double(r.seconds)
       << " rate=" << format_double(r.rate) << "\n";
  }
  os << "rate " << format_double(rate) << "\n";
  os << "required_rows " << format_double(required_rows) << " target_cap "
     << format_double(target_cap) << "\n";
  os << "chosen level=" << chosen_level << " cap=" << chosen_cap
     << " projected_rows=" << format_double(projected_rows)
     << " projected_seconds=" << format_double(projected_seconds) << "\n";
  const auto f = flags();
  os << "flags";
  if (f.empty()) os << " none";
  for (const auto& s : f) os << " " << s;
  os << "\n";
  return os.str();
}

namespace {

ErrorLatencyProfile start_profile(ErrorLatencyProfile::Mode mode, const SampleChoice& choice) {
  ErrorLatencyProfile p;
  p.mode = mode;
  p.family = choice.is_family() ? choice.family->id() : choice.uniform->name;
  p.level_count = choice.level_count();
  return p;
}

bool all_complete(const ScanResult& r) {
  for (const auto& group : r.samples) {
    for (const auto& agg : group) {
      for (const auto& s : agg.strata) {
        if (!s.complete()) return false;
      }
    }
  }
  return true;
}

// Sample variance of the matched target values of a group.
double matched_variance(const GroupSample& g) {
  double n = 0.0, sum = 0.0, sum_sq = 0.0;
  for (const auto& s : g.strata) {
    n += static_cast<double>(s.matched);
    sum += s.sum.value();
    sum_sq += s.sum_sq;
  }
  if (n < 2.0) return 0.0;
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

std::vector<std::int64_t> choice_caps(const SampleChoice& choice) {
  std::vector<std::int64_t> caps;
  for (int l = 0; l < choice.level_count(); ++l) caps.push_back(choice.cap(l));
  return caps;
}

void finish_run(ProfiledRun& run, const SampleChoice& choice, int level, ReuseCache& cache,
                const ScanSpec& spec) {
  run.profile.chosen_level = level;
  run.profile.chosen_cap = choice.cap(level);
  run.profile.projected_rows = static_cast<double>(choice.level_rows(level));
  run.source = choice.source(level);
  run.result = execute_with_reuse(spec, run.source, cache);
}

}  // namespace

int error_bound_level(const std::vector<std::int64_t>& caps, int max_level, double target) {
  for (int l = std::min(max_level, static_cast<int>(caps.size()) - 1); l >= 0; --l) {
    if (static_cast<double>(caps[static_cast<std::size_t>(l)]) > target) return l;
  }
  return -1;
}

int time_bound_level(const std::vector<std::int64_t>& caps, double target) {
  for (std::size_t l = 0; l < caps.size(); ++l) {
    if (static_cast<double>(caps[l]) < target) return static_cast<int>(l);
  }
  return -1;
}

ProfiledRun build_error_profile(const ScanSpec& spec, const SampleChoice& choice, bool covers,
                                const ConfidenceSpec& bound, ReuseCache& cache,
                                const RuntimeOptions& options) {
  ProfiledRun run;
  ErrorLatencyProfile& prof = run.profile;
  prof = start_profile(ErrorLatencyProfile::Mode::kError, choice);

  int level = choice.smallest_level();
  ScanResult probe = execute_with_reuse(spec, choice.source(level), cache);
  while (options.min_pilot_rows > 0 && probe.rows_matched < options.min_pilot_rows && level > 0) {
    --level;
    probe = execute_with_reuse(spec, choice.source(level), cache);
  }
  prof.probe_level = level;
  prof.probe_cap = choice.cap(level);
  prof.rows_read = probe.rows_read;
  prof.rows_matched = probe.rows_matched;
  prof.selectivity = probe.rows_read > 0 ? static_cast<double>(probe.rows_matched) /
                                               static_cast<double>(probe.rows_read)
                                         : 0.0;
  if (probe.rows_matched == 0) {
    throw Error(ErrorKind::kMissingGroup,
                "probe of '" + prof.family + "' at level " + std::to_string(level) +
                    " matched no rows");
  }

  if (covers && all_complete(probe)) {
    prof.exact = true;
    finish_run(run, choice, level, cache, spec);
    return run;
  }

  // Largest n * K_m / n_{i,m} over groups and aggregates.
  const double k_m = static_cast<double>(prof.probe_cap);
  double target = 0.0;
  for (std::size_t g = 0; g < probe.keys.size(); ++g) {
    for (std::size_t a = 0; a < spec.aggregates.size(); ++a) {
      const GroupSample& sample = probe.samples[g][a];
      const GroupEstimate est =
          estimate(spec.aggregates[a], sample, bound.confidence, options.estimator);
      if (est.exact || est.variance == 0.0) continue;
      const double matched = static_cast<double>(sample.matched());
      double eps = bound.epsilon;
      if (bound.measure == ErrorMeasure::kRelative) eps *= std::fabs(est.estimate);
      const double unit = est.variance * matched;
      double n = kInf;
      if (eps > 0.0 && std::isfinite(unit)) {
        n = static_cast<double>(required_rows(unit, eps, bound.confidence));
      }
      const double t = n * k_m / matched;
      if (!(t <= target)) {
        target = t;
        prof.required_rows = n;
        prof.rows_matched = sample.matched();
        double population = 0.0;
        for (const auto& s : sample.strata) population += s.population;
        prof.pilot = PilotStats{est.estimate, matched_variance(sample),
                                matched / static_cast<double>(probe.rows_read), 0.0, population};
      }
    }
  }
  prof.target_cap = target;

  // Smallest cap not below K_m that is strictly larger than the target.
  int chosen = error_bound_level(choice_caps(choice), level, target);
  if (chosen < 0) {
    chosen = 0;
    prof.bound_not_guaranteed = true;
  }
  finish_run(run, choice, chosen, cache, spec);
  return run;
}

ProfiledRun build_latency_profile(const ScanSpec& spec, const SampleChoice& choice, bool covers,
                                  double seconds, Clock::time_point start, ReuseCache& cache,
                                  const RuntimeOptions& options) {
  if (!(seconds > 0.0)) throw Error(ErrorKind::kInvalidArgument, "time bound must be positive");
  ProfiledRun run;
  ErrorLatencyProfile& prof = run.profile;
  prof = start_profile(ErrorLatencyProfile::Mode::kTime, choice);

  const int smallest = choice.smallest_level();
  auto timed = [&](int level, bool recompute) {
    ReuseStats st;
    ScanResult r = execute_with_reuse(spec, choice.source(level), cache, &st, recompute);
    ProbeRun pr;
    pr.level = level;
    pr.rows = st.rows_computed;
    pr.seconds = std::max(st.seconds, 1e-9);
    pr.rate = static_cast<double>(pr.rows) / pr.seconds;
    prof.runs.push_back(pr);
    return r;
  };

  ScanResult probe = timed(smallest, true);
  prof.probe_level = smallest;
  prof.probe_cap = choice.cap(smallest);
  prof.rows_read = probe.rows_read;
  prof.rows_matched = probe.rows_matched;
  prof.selectivity = probe.rows_read > 0 ? static_cast<double>(probe.rows_matched) /
                                               static_cast<double>(probe.rows_read)
                                         : 0.0;
  int largest_probed = smallest;
  if (covers && all_complete(probe) && probe.rows_matched > 0) {
    prof.exact = true;
    prof.rate = prof.runs.back().rate;
    run.profile.projected_seconds = seconds_since(start);
    finish_run(run, choice, smallest, cache, spec);
    return run;
  }

  // Further runs step up one level at a time (re-running the only level of a
  // one-level sample) until consecutive rates agree.
  auto rates_agree = [&] {
    const std::size_t k = prof.runs.size();
    if (k < 2) return false;
    const double a = prof.runs[k - 2].rate;
    const double b = prof.runs[k - 1].rate;
    return std::fabs(a - b) <= options.rate_agreement * std::max(a, b);
  };
  while (static_cast<int>(prof.runs.size()) < std::max(2, options.max_rate_runs) &&
         !rates_agree()) {
    const double rate = prof.runs.back().rate;
    const int next = largest_probed > 0 ? largest_probed - 1 : largest_probed;
    const double fresh =
        next == largest_probed
            ? static_cast<double>(choice.level_rows(next))
            : static_cast<double>(choice.level_rows(next) - choice.level_rows(largest_probed));
    // Calibration must not overrun the budget: past two runs stop, before
    // that repeat the cheapest level.
    if (rate > 0.0 && seconds_since(start) + fresh / rate > seconds) {
      if (prof.runs.size() >= 2) break;
      timed(smallest, true);
      continue;
    }
    timed(next, next == largest_probed);
    largest_probed = next;
    if (prof.runs.back().rows == 0) {
      prof.runs.pop_back();
      timed(next, true);
    }
  }
  const std::size_t k = prof.runs.size();
  prof.rate = k >= 2 ? std::min(prof.runs[k - 2].rate, prof.runs[k - 1].rate) : prof.runs[0].rate;

  const double remaining = seconds - seconds_since(start);
  const double probe_rows = static_cast<double>(choice.level_rows(smallest));
  int rule_level = smallest;
  if (remaining <= 0.0) {
    prof.bound_exceeded = true;
    prof.required_rows = 0.0;
    prof.target_cap = 0.0;
  } else {
    prof.required_rows = std::isinf(seconds) ? kInf : prof.rate * remaining;
    prof.target_cap = probe_rows > 0.0 ? prof.required_rows * static_cast<double>(prof.probe_cap) /
                                             probe_rows
                                       : kInf;
    const int found = time_bound_level(choice_caps(choice), prof.target_cap);
    if (found < 0) {
      prof.bound_may_be_exceeded = true;
    } else {
      rule_level = found;
    }
  }
  // Levels already read are free; never answer from fewer rows than those.
  const int chosen = std::min(rule_level, largest_probed);
  const double cached = static_cast<double>(choice.level_rows(largest_probed));
  prof.projected_seconds =
      seconds_since(start) +
      std::max(0.0, static_cast<double>(choice.level_rows(chosen)) - cached) / prof.rate;
  if (!choice.is_family() && prof.projected_seconds > seconds) prof.bound_may_be_exceeded = true;
  finish_run(run, choice, chosen, cache, spec);
  return run;
}

// ---------------------------------------------------------------------------
// Appendix lemmas

LemmaCheck lemma_bound_check(const std::vector<std::int64_t>& caps, std::int64_t ratio,
                             std::int64_t k_opt, LemmaMode mode) {
  if (caps.empty()) throw Error(ErrorKind::kInvalidArgument, "family has no caps");
  const auto [lo, hi] = std::minmax_element(caps.begin(), caps.end());
  if (k_opt < *lo || k_opt > *hi) {
    throw Error(ErrorKind::kInvalidArgument,
                "K_opt " + std::to_string(k_opt) + " outside family range [" +
                    std::to_string(*lo) + ", " + std::to_string(*hi) + "]");
  }
  const double c = static_cast<double>(ratio);
  const double k = static_cast<double>(k_opt);
  LemmaCheck out;
  if (mode == LemmaMode::kError) {
    out.chosen_cap = *hi;
    for (std::int64_t cap : caps) {
      if (cap >= k_opt) out.chosen_cap = std::min(out.chosen_cap, cap);
    }
    out.factor = static_cast<double>(out.chosen_cap) / k;
    out.bound = c + 1.0 / k;
  } else {
    out.chosen_cap = *lo;
    for (std::int64_t cap : caps) {
      if (cap <= k_opt) out.chosen_cap = std::max(out.chosen_cap, cap);
    }
    out.factor = std::sqrt(k / static_cast<double>(out.chosen_cap));
    const double inner = 1.0 / c - 1.0 / k;
    out.bound = inner > 0.0 ? 1.0 / std::sqrt(inner) : kInf;
  }
  out.holds = out.factor <= out.bound;
  return out;
}

}  // namespace aqe
