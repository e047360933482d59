#include "aqe/executor.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "aqe/error.hpp"
#include "aqe/hash.hpp"
#include "aqe/text_format.hpp"

namespace aqe {

std::string SampleSource::label() const {
  switch (kind) {
    case Kind::kTable: return "table:" + id;
    case Kind::kUniform: return "uniform:" + id;
    case Kind::kFamily: return id + "@L" + std::to_string(level);
  }
  return id;
}

SampleSource table_source(std::shared_ptr<const TableHandle> table) {
  SampleSource s;
  s.kind = SampleSource::Kind::kTable;
  s.id = table->name;
  s.rows = &table->data;
  s.blocks = table->blocks;
  s.population = {static_cast<double>(table->row_count)};
  s.read = {table->row_count};
  s.rows_read = table->row_count;
  s.owner = std::move(table);
  return s;
}

SampleSource uniform_source(std::shared_ptr<const UniformSample> sample) {
  SampleSource s;
  s.kind = SampleSource::Kind::kUniform;
  s.id = sample->name + "#" + std::to_string(sample->seed);
  s.rows = &sample->rows;
  s.blocks = sample->blocks;
  s.population = {static_cast<double>(sample->population)};
  s.read = {static_cast<std::int64_t>(sample->rows.row_count())};
  s.rows_read = s.read.front();
  s.owner = std::move(sample);
  return s;
}

SampleSource family_source(std::shared_ptr<const SampleFamily> family, int level) {
  const LevelView view(*family, level);  // validates the level
  SampleSource s;
  s.kind = SampleSource::Kind::kFamily;
  s.id = family->id();
  s.family_name = family->name;
  s.phi = family->phi;
  s.level = level;
  s.cap = family->cap(level);
  s.rows = &family->rows;
  const auto blocks = family->level_blocks(level);
  s.blocks.assign(blocks.begin(), blocks.end());
  s.row_stratum = &family->row_group;
  s.population.reserve(family->group_freq.size());
  s.read.reserve(family->group_freq.size());
  for (std::int64_t f : family->group_freq) {
    s.population.push_back(static_cast<double>(f));
    s.read.push_back(std::min(f, s.cap));
  }
  s.rows_read = static_cast<std::int64_t>(view.size());
  s.owner = std::move(family);
  return s;
}

Filter filter_from_dnf(const std::vector<Conjunction>& dnf) {
  Filter f;
  for (const auto& c : dnf) f.push_back({c, {}});
  return f;
}

TargetLayout layout_targets(const std::vector<AggregateSpec>& aggregates) {
  TargetLayout out;
  for (const auto& a : aggregates) {
    if (a.op == AggregateOp::kCount) {
      out.target_of.push_back(-1);
      continue;
    }
    if (!a.target) throw Error(ErrorKind::kInvalidArgument, "aggregate needs a target expression");
    auto it = std::find(out.targets.begin(), out.targets.end(), *a.target);
    if (it == out.targets.end()) {
      out.targets.push_back(*a.target);
      out.keep_values.push_back(false);
      it = out.targets.end() - 1;
    }
    const auto t = static_cast<std::size_t>(it - out.targets.begin());
    if (a.op == AggregateOp::kQuantile) out.keep_values[t] = true;
    out.target_of.push_back(static_cast<int>(t));
  }
  return out;
}

std::uint64_t BlockPartial::checksum() const {
  std::uint64_t h = fnv1a_u64(group_width);
  h = fnv1a_u64(static_cast<std::uint64_t>(rows), h);
  for (std::int64_t k : cell_keys) h = fnv1a_u64(static_cast<std::uint64_t>(k), h);
  for (std::int64_t k : seen_keys) h = fnv1a_u64(static_cast<std::uint64_t>(k), h);
  for (const auto& c : cells) {
    h = fnv1a_u64(static_cast<std::uint64_t>(c.matched), h);
    for (const auto& s : c.sums) h = fnv1a_u64(s.hash(), h);
    for (double d : c.sum_sq) h = fnv1a_u64(std::bit_cast<std::uint64_t>(d), h);
    for (const auto& vs : c.values) {
      h = fnv1a_u64(vs.size(), h);
      for (double d : vs) h = fnv1a_u64(std::bit_cast<std::uint64_t>(d), h);
    }
  }
  return h;
}

namespace {

struct CompiledAtom {
  std::size_t col = 0;
  ColumnType type = ColumnType::kInteger;
  CompareOp op = CompareOp::kEq;
  bool int_literal = false;
  std::int64_t ival = 0;
  double dval = 0.0;
  std::string sval;
  std::optional<std::uint32_t> code;

  template <typename T>
  static bool compare(CompareOp op, const T& a, const T& b) {
    switch (op) {
      case CompareOp::kEq: return a == b;
      case CompareOp::kNe: return a != b;
      case CompareOp::kLt: return a < b;
      case CompareOp::kLe: return a <= b;
      case CompareOp::kGt: return a > b;
      case CompareOp::kGe: return a >= b;
    }
    return false;
  }

  bool eval(const Table& t, std::size_t row) const {
    const Column& c = t.column(col);
    switch (type) {
      case ColumnType::kInteger:
        if (int_literal) return compare(op, c.int_at(row), ival);
        return compare(op, static_cast<double>(c.int_at(row)), dval);
      case ColumnType::kFloat:
        return compare(op, c.float_at(row), dval);
      case ColumnType::kString:
        if (op == CompareOp::kEq) return code && c.code_at(row) == *code;
        if (op == CompareOp::kNe) return !code || c.code_at(row) != *code;
        return compare(op, std::string_view(c.string_at(row)), std::string_view(sval));
    }
    return false;
  }
};

CompiledAtom compile_atom(const Atom& atom, const Table& t) {
  CompiledAtom out;
  out.col = t.column_index(atom.column);
  out.type = t.schema()[out.col].type;
  out.op = atom.op;
  const bool is_string = std::holds_alternative<std::string>(atom.literal);
  if ((out.type == ColumnType::kString) != is_string) {
    throw Error(ErrorKind::kInvalidArgument,
                "cannot compare " + std::string(to_string(out.type)) + " column '" + atom.column +
                    "' with literal " + format_value(atom.literal));
  }
  if (is_string) {
    out.sval = std::get<std::string>(atom.literal);
    out.code = t.column(out.col).dictionary()->find(out.sval);
  } else if (const auto* i = std::get_if<std::int64_t>(&atom.literal)) {
    out.int_literal = true;
    out.ival = *i;
    out.dval = static_cast<double>(*i);
  } else {
    out.dval = std::get<double>(atom.literal);
  }
  return out;
}

struct CompiledExpr {
  Expr::Kind kind = Expr::Kind::kNumber;
  std::size_t col = 0;
  double number = 0.0;
  char op = 0;
  std::vector<CompiledExpr> args;

  double eval(const Table& t, std::size_t row) const {
    switch (kind) {
      case Expr::Kind::kColumn: return t.column(col).numeric_at(row);
      case Expr::Kind::kNumber: return number;
      case Expr::Kind::kNegate: return -args[0].eval(t, row);
      case Expr::Kind::kBinary: {
        const double a = args[0].eval(t, row);
        const double b = args[1].eval(t, row);
        switch (op) {
          case '+': return a + b;
          case '-': return a - b;
          case '*': return a * b;
          case '/': return a / b;
        }
      }
    }
    return 0.0;
  }
};

CompiledExpr compile_expr(const Expr& e, const Table& t) {
  CompiledExpr out;
  out.kind = e.kind;
  out.number = e.number;
  out.op = e.op;
  if (e.kind == Expr::Kind::kColumn) {
    out.col = t.column_index(e.column);
    if (t.schema()[out.col].type == ColumnType::kString) {
      throw Error(ErrorKind::kInvalidArgument,
                  "aggregate over string column '" + e.column + "' is not numeric");
    }
  }
  for (const auto& a : e.args) out.args.push_back(compile_expr(a, t));
  return out;
}

}  // namespace

struct CompiledScan::Impl {
  const SampleSource* source = nullptr;
  struct CompiledClause {
    std::vector<CompiledAtom> include;
    std::vector<std::vector<CompiledAtom>> exclude;
  };
  std::vector<CompiledClause> clauses;
  std::vector<std::size_t> group_cols;
  std::vector<CompiledExpr> targets;
  std::vector<bool> keep_values;

  static bool all_hold(const std::vector<CompiledAtom>& atoms, const Table& t, std::size_t row) {
    for (const auto& a : atoms) {
      if (!a.eval(t, row)) return false;
    }
    return true;
  }

  bool matches(std::size_t row) const {
    if (clauses.empty()) return true;
    const Table& t = *source->rows;
    for (const auto& c : clauses) {
      if (!all_hold(c.include, t, row)) continue;
      bool excluded = false;
      for (const auto& ex : c.exclude) {
        if (all_hold(ex, t, row)) {
          excluded = true;
          break;
        }
      }
      if (!excluded) return true;
    }
    return false;
  }
};

CompiledScan::CompiledScan(const ScanSpec& spec, const SampleSource& source)
    : impl_(std::make_unique<Impl>()) {
  const Table& t = *source.rows;
  impl_->source = &source;
  for (const auto& clause : spec.filter) {
    Impl::CompiledClause cc;
    for (const auto& a : clause.include) cc.include.push_back(compile_atom(a, t));
    for (const auto& conj : clause.exclude) {
      std::vector<CompiledAtom> ex;
      for (const auto& a : conj) ex.push_back(compile_atom(a, t));
      cc.exclude.push_back(std::move(ex));
    }
    impl_->clauses.push_back(std::move(cc));
  }
  for (const auto& g : spec.group_by) impl_->group_cols.push_back(t.column_index(g));
  const TargetLayout layout = layout_targets(spec.aggregates);
  for (const auto& e : layout.targets) impl_->targets.push_back(compile_expr(e, t));
  impl_->keep_values = layout.keep_values;
}

CompiledScan::~CompiledScan() = default;
CompiledScan::CompiledScan(CompiledScan&&) noexcept = default;

bool CompiledScan::matches(std::size_t row) const { return impl_->matches(row); }

std::size_t CompiledScan::target_count() const { return impl_->targets.size(); }

BlockPartial CompiledScan::scan_block(const BlockRef& block) const {
  const Impl& im = *impl_;
  const Table& t = *im.source->rows;
  const std::size_t gw = im.group_cols.size();
  const std::size_t nt = im.targets.size();
  BlockPartial out;
  out.group_width = gw;
  GroupIndexer cells(gw + 1);
  GroupIndexer seen(gw);
  std::vector<std::int64_t> key(gw + 1);
  const auto* strata = im.source->row_stratum;
  for (auto r = static_cast<std::size_t>(block.row_begin); r < static_cast<std::size_t>(block.row_end);
       ++r) {
    for (std::size_t k = 0; k < gw; ++k) key[k] = t.column(im.group_cols[k]).key_at(r);
    seen.insert(std::span<const std::int64_t>(key.data(), gw));
    if (!im.matches(r)) continue;
    key[gw] = strata ? (*strata)[r] : 0;
    const auto id = cells.insert(key);
    if (id == out.cells.size()) {
      BlockPartial::Cell c;
      c.sums.resize(nt);
      c.sum_sq.assign(nt, 0.0);
      c.values.resize(nt);
      out.cells.push_back(std::move(c));
    }
    BlockPartial::Cell& c = out.cells[id];
    ++c.matched;
    for (std::size_t i = 0; i < nt; ++i) {
      const double v = im.targets[i].eval(t, r);
      c.sums[i].add(v);
      c.sum_sq[i] += v * v;
      if (im.keep_values[i]) c.values[i].push_back(v);
    }
  }
  out.rows = block.rows();
  for (std::uint32_t id = 0; id < cells.size(); ++id) {
    const auto k = cells.key(id);
    out.cell_keys.insert(out.cell_keys.end(), k.begin(), k.end());
  }
  for (std::uint32_t id = 0; id < seen.size(); ++id) {
    const auto k = seen.key(id);
    out.seen_keys.insert(out.seen_keys.end(), k.begin(), k.end());
  }
  return out;
}

ScanAccumulator::ScanAccumulator(const ScanSpec& spec, const SampleSource& source)
    : spec_(&spec), source_(&source), cells_(spec.group_by.size() + 1), seen_(spec.group_by.size()) {
  for (const auto& g : spec.group_by) group_cols_.push_back(source.rows->column_index(g));
  const TargetLayout layout = layout_targets(spec.aggregates);
  target_of_ = layout.target_of;
  target_values_ = layout.keep_values;
  targets_ = layout.targets.size();
}

void ScanAccumulator::merge(const BlockPartial& p) {
  const std::size_t gw = group_cols_.size();
  if (p.group_width != gw) throw Error(ErrorKind::kCorrupt, "block partial has the wrong shape");
  rows_ += p.rows;
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    const std::span<const std::int64_t> key(p.cell_keys.data() + i * (gw + 1), gw + 1);
    const auto id = cells_.insert(key);
    if (id == states_.size()) {
      BlockPartial::Cell c;
      c.sums.resize(targets_);
      c.sum_sq.assign(targets_, 0.0);
      c.values.resize(targets_);
      states_.push_back(std::move(c));
    }
    BlockPartial::Cell& s = states_[id];
    const BlockPartial::Cell& src = p.cells[i];
    s.matched += src.matched;
    for (std::size_t t = 0; t < targets_; ++t) {
      s.sums[t].merge(src.sums[t]);
      s.sum_sq[t] += src.sum_sq[t];
      s.values[t].insert(s.values[t].end(), src.values[t].begin(), src.values[t].end());
    }
  }
  if (gw == 0) {
    if (p.rows > 0) seen_.insert({});
    return;
  }
  for (std::size_t i = 0; i * gw < p.seen_keys.size(); ++i) {
    seen_.insert(std::span<const std::int64_t>(p.seen_keys.data() + i * gw, gw));
  }
}

ScanResult ScanAccumulator::finish() const {
  const std::size_t gw = group_cols_.size();
  const Table& t = *source_->rows;
  auto decode = [&](std::span<const std::int64_t> k) {
    GroupKey key;
    for (std::size_t i = 0; i < gw; ++i) key.push_back(t.column(group_cols_[i]).value_from_key(k[i]));
    return key;
  };
  ScanResult out;
  out.rows_read = rows_;
  for (std::uint32_t id = 0; id < seen_.size(); ++id) out.seen.insert(decode(seen_.key(id)));

  // Cells ordered by (group key, stratum) so results do not depend on the
  // order in which cells were first seen.
  std::vector<std::pair<GroupKey, std::int64_t>> cell_ids;
  for (std::uint32_t id = 0; id < cells_.size(); ++id) {
    const auto k = cells_.key(id);
    cell_ids.emplace_back(decode(k.first(gw)), k[gw]);
  }
  std::vector<std::uint32_t> order(cell_ids.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return cell_ids[a] < cell_ids[b]; });

  const std::size_t na = spec_->aggregates.size();
  for (std::uint32_t id : order) {
    const auto& [key, stratum] = cell_ids[id];
    if (out.keys.empty() || out.keys.back() != key) {
      out.keys.push_back(key);
      out.samples.emplace_back(na);
      for (auto& g : out.samples.back()) g.rows_read = rows_;
    }
    const BlockPartial::Cell& c = states_[id];
    out.rows_matched += c.matched;
    const auto h = static_cast<std::size_t>(stratum);
    for (std::size_t a = 0; a < na; ++a) {
      StratumData s;
      s.population = source_->population.at(h);
      s.read = source_->read.at(h);
      s.matched = c.matched;
      const int target = target_of_[a];
      if (target >= 0) {
        const auto ti = static_cast<std::size_t>(target);
        s.sum = c.sums[ti];
        s.sum_sq = c.sum_sq[ti];
        if (spec_->aggregates[a].op == AggregateOp::kQuantile) s.values = c.values[ti];
      }
      out.samples.back()[a].strata.push_back(std::move(s));
    }
  }
  return out;
}

ScanResult scan_source(const ScanSpec& spec, const SampleSource& source) {
  CompiledScan scan(spec, source);
  ScanAccumulator acc(spec, source);
  for (const auto& b : source.blocks) acc.merge(scan.scan_block(b));
  return acc.finish();
}

}  // namespace aqe
