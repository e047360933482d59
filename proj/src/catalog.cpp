#include "aqe/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <set>

#include "aqe/block_io.hpp"
#include "aqe/error.hpp"
#include "aqe/group_index.hpp"
#include "aqe/hash.hpp"
#include "aqe/optimizer.hpp"
#include "aqe/sampling.hpp"

namespace aqe {

ColumnSet::ColumnSet(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw Error(ErrorKind::kInvalidArgument, "column set must not be empty");
  std::set<std::string_view> seen;
  for (const auto& c : columns_) {
    if (c.empty()) throw Error(ErrorKind::kInvalidArgument, "empty column name in column set");
    if (!seen.insert(c).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate column '" + c + "' in column set");
    }
  }
}

ColumnSet ColumnSet::parse(std::string_view text) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    cols.emplace_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return ColumnSet(std::move(cols));
}

bool ColumnSet::contains(std::string_view column) const {
  return std::find(columns_.begin(), columns_.end(), column) != columns_.end();
}

bool ColumnSet::subset_of(const ColumnSet& other) const {
  return std::all_of(columns_.begin(), columns_.end(),
                     [&](const std::string& c) { return other.contains(c); });
}

bool ColumnSet::same_set(const ColumnSet& other) const {
  return size() == other.size() && subset_of(other);
}

ColumnSet ColumnSet::canonical() const {
  ColumnSet out = *this;
  std::sort(out.columns_.begin(), out.columns_.end());
  return out;
}

std::string ColumnSet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  return out;
}

std::vector<BlockRef> partition_blocks(std::int64_t begin, std::int64_t end,
                                       std::int64_t first_id) {
  std::vector<BlockRef> blocks;
  for (std::int64_t b = begin; b < end; b += kBlockRows) {
    BlockRef ref;
    ref.block_id = first_id + static_cast<std::int64_t>(blocks.size());
    ref.row_begin = b;
    ref.row_end = std::min(end, b + kBlockRows);
    blocks.push_back(std::move(ref));
  }
  return blocks;
}

std::int64_t ColumnSetStats::total() const {
  std::int64_t n = 0;
  for (const auto& [key, f] : frequency) n += f;
  return n;
}

std::int64_t ColumnSetStats::frequency_of(const GroupKey& key) const {
  auto it = frequency.find(key);
  return it == frequency.end() ? 0 : it->second;
}

const ColumnSetStats& ColumnStats::at(const ColumnSet& columns) const {
  auto it = sets.find(columns);
  if (it == sets.end()) {
    throw Error(ErrorKind::kNotFound, "no statistics for {" + columns.to_string() + "}");
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

class CsvReader {
 public:
  explicit CsvReader(std::string text) : text_(std::move(text)) {}

  bool next(CsvRecord& rec) {
    if (pos_ >= text_.size()) return false;
    rec.fields.clear();
    rec.line = line_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    while (pos_ < text_.size()) {
      const char ch = text_[pos_++];
      if (quoted) {
        if (ch == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            field += '"';
            ++pos_;
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field += ch;
        }
        continue;
      }
      if (ch == '"') {
        if (!field.empty() || was_quoted) {
          throw Error(ErrorKind::kParse,
                      "line " + std::to_string(rec.line) + ": stray quote inside field");
        }
        quoted = was_quoted = true;
      } else if (ch == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (ch == '\n' || ch == '\r') {
        if (ch == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        ++line_;
        rec.fields.push_back(std::move(field));
        return true;
      } else {
        if (was_quoted) {
          throw Error(ErrorKind::kParse,
                      "line " + std::to_string(rec.line) + ": text after closing quote");
        }
        field += ch;
      }
    }
    if (quoted) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(rec.line) + ": unterminated quote");
    }
    rec.fields.push_back(std::move(field));
    return true;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

Value coerce(const std::string& text, ColumnType type, std::size_t line, const std::string& column) {
  auto fail = [&]() -> Value {
    throw Error(ErrorKind::kParse, "line " + std::to_string(line) + ": cannot convert '" + text +
                                       "' to " + std::string(to_string(type)) + " for column '" +
                                       column + "'");
  };
  switch (type) {
    case ColumnType::kInteger: {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return fail();
      return v;
    }
    case ColumnType::kFloat: {
      double v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return fail();
      return v;
    }
    case ColumnType::kString:
      return text;
  }
  return fail();
}

std::string block_path(std::string_view kind, const std::string& name, std::int64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "b%06lld.blk", static_cast<long long>(id));
  return std::string(kind) + "/" + safe_path_component(name) + "/" + buf;
}

}  // namespace

std::string safe_path_component(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx",
                static_cast<unsigned long long>(fnv1a(name) & 0xffffffffull));
  return out + "-" + buf;
}

Table read_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  CsvReader reader(std::string(std::istreambuf_iterator<char>(in), {}));
  CsvRecord rec;
  if (!reader.next(rec)) throw Error(ErrorKind::kParse, path.string() + ": missing header row");
  if (rec.fields.size() != schema.size()) {
    throw Error(ErrorKind::kParse, "line 1: header has " + std::to_string(rec.fields.size()) +
                                       " fields, schema has " + std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (rec.fields[i] != schema[i].name) {
      throw Error(ErrorKind::kParse, "line 1: header column '" + rec.fields[i] +
                                         "' does not match schema column '" + schema[i].name + "'");
    }
  }
  Table table(schema);
  std::vector<Value> row(schema.size());
  while (reader.next(rec)) {
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    if (rec.fields.size() != schema.size()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(rec.line) + ": expected " +
                                         std::to_string(schema.size()) + " fields, found " +
                                         std::to_string(rec.fields.size()));
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      row[i] = coerce(rec.fields[i], schema[i].type, rec.line, schema[i].name);
    }
    table.append_row(row);
  }
  return table;
}

ColumnSetStats compute_column_set_stats(const Table& table, const ColumnSet& columns) {
  std::vector<std::size_t> idx;
  for (const auto& c : columns.columns()) idx.push_back(table.column_index(c));
  GroupIndexer indexer(idx.size());
  std::vector<std::int64_t> counts;
  std::vector<std::size_t> first_row;
  std::vector<std::int64_t> key(idx.size());
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t k = 0; k < idx.size(); ++k) key[k] = table.column(idx[k]).key_at(r);
    const auto id = indexer.insert(key);
    if (id == counts.size()) {
      counts.push_back(0);
      first_row.push_back(r);
    }
    ++counts[id];
  }
  ColumnSetStats stats;
  stats.columns = columns;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    GroupKey k;
    for (std::size_t c : idx) k.push_back(table.value(first_row[g], c));
    stats.frequency.emplace(std::move(k), counts[g]);
  }
  return stats;
}

ColumnStats compute_stats(const TableHandle& table, std::span<const ColumnSet> column_sets) {
  ColumnStats stats;
  stats.table = table.name;
  stats.row_count = table.row_count;
  stats.average_row_bytes = table.data.average_row_bytes();
  for (const auto& cs : column_sets) {
    stats.sets.emplace(cs, compute_column_set_stats(table.data, cs));
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Catalog

Catalog::Catalog(std::filesystem::path root) : root_(std::move(root)) {}

std::shared_ptr<const TableHandle> Catalog::add_table(std::string name, Table data) {
  if (name.empty()) throw Error(ErrorKind::kInvalidArgument, "table name must not be empty");
  auto handle = std::make_shared<TableHandle>();
  handle->name = name;
  handle->schema = data.schema();
  handle->row_count = static_cast<std::int64_t>(data.row_count());
  handle->blocks = partition_blocks(0, handle->row_count);
  handle->data = std::move(data);
  {
    std::unique_lock lock(mutex_);
    if (tables_.count(name)) {
      throw Error(ErrorKind::kAlreadyExists, "table '" + name + "' already exists");
    }
    tables_.emplace(name, handle);
  }
  if (persistent()) write_pending_blocks();
  return handle;
}

std::shared_ptr<const TableHandle> Catalog::table(std::string_view name) const {
  std::shared_lock lock(mutex_);
  auto it = tables_.find(name);
  if (it == tables_.end()) throw Error(ErrorKind::kNotFound, "no such table '" + std::string(name) + "'");
  return it->second;
}

bool Catalog::has_table(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return tables_.find(name) != tables_.end();
}

std::vector<std::string> Catalog::table_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, t] : tables_) out.push_back(name);
  return out;
}

std::shared_ptr<const ColumnSetStats> Catalog::stats(std::string_view table_name,
                                                     const ColumnSet& columns) {
  {
    std::shared_lock lock(mutex_);
    auto t = stats_.find(table_name);
    if (t != stats_.end()) {
      auto s = t->second.find(columns);
      if (s != t->second.end()) return s->second;
    }
  }
  auto handle = table(table_name);
  auto computed =
      std::make_shared<const ColumnSetStats>(compute_column_set_stats(handle->data, columns));
  std::unique_lock lock(mutex_);
  auto& slot = stats_[std::string(table_name)][columns];
  if (!slot) slot = computed;
  return slot;
}

ColumnStats Catalog::stats_snapshot(std::string_view table_name) const {
  auto handle = table(table_name);
  ColumnStats out;
  out.table = handle->name;
  out.row_count = handle->row_count;
  out.average_row_bytes = handle->data.average_row_bytes();
  std::shared_lock lock(mutex_);
  auto t = stats_.find(table_name);
  if (t != stats_.end()) {
    for (const auto& [cols, s] : t->second) out.sets.emplace(cols, *s);
  }
  return out;
}

void Catalog::put_stats(std::string_view table_name, ColumnSetStats s) {
  std::unique_lock lock(mutex_);
  auto cols = s.columns;
  stats_[std::string(table_name)][cols] = std::make_shared<const ColumnSetStats>(std::move(s));
}

void Catalog::put_family(std::shared_ptr<const SampleFamily> family) {
  {
    std::unique_lock lock(mutex_);
    families_[family->name] = std::move(family);
  }
  if (persistent()) write_pending_blocks();
}

std::shared_ptr<const SampleFamily> Catalog::family(std::string_view name) const {
  std::shared_lock lock(mutex_);
  auto it = families_.find(name);
  if (it == families_.end()) {
    throw Error(ErrorKind::kNotFound, "no such sample family '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::shared_ptr<const SampleFamily>> Catalog::families_for(
    std::string_view table_name) const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<const SampleFamily>> out;
  for (const auto& [name, f] : families_) {
    if (f->table == table_name) out.push_back(f);
  }
  return out;
}

std::vector<std::string> Catalog::family_names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, f] : families_) out.push_back(name);
  return out;
}

void Catalog::erase_family(std::string_view name) {
  std::unique_lock lock(mutex_);
  auto it = families_.find(name);
  if (it != families_.end()) families_.erase(it);
}

void Catalog::put_uniform(std::shared_ptr<const UniformSample> sample) {
  {
    std::unique_lock lock(mutex_);
    uniforms_[sample->table] = std::move(sample);
  }
  if (persistent()) write_pending_blocks();
}

std::shared_ptr<const UniformSample> Catalog::uniform_for(std::string_view table_name) const {
  std::shared_lock lock(mutex_);
  auto it = uniforms_.find(table_name);
  return it == uniforms_.end() ? nullptr : it->second;
}

void Catalog::put_plan(std::shared_ptr<const SamplePlan> plan) {
  std::unique_lock lock(mutex_);
  plans_[plan->table] = std::move(plan);
}

std::shared_ptr<const SamplePlan> Catalog::plan(std::string_view table_name) const {
  std::shared_lock lock(mutex_);
  auto it = plans_.find(table_name);
  return it == plans_.end() ? nullptr : it->second;
}

void Catalog::write_pending_blocks() {
  if (!persistent()) {
    throw Error(ErrorKind::kInvalidArgument, "catalog has no root directory");
  }
  std::unique_lock lock(mutex_);
  // Objects are created non-const and only block metadata is touched here,
  // under the writer lock.
  for (auto& [name, handle] : tables_) {
    auto h = std::const_pointer_cast<TableHandle>(handle);
    for (auto& b : h->blocks) {
      if (!b.path.empty()) continue;
      b.path = block_path("tables", name, b.block_id);
      b.checksum = write_block(root_ / b.path, h->data, static_cast<std::size_t>(b.row_begin),
                               static_cast<std::size_t>(b.row_end));
    }
  }
  for (auto& [name, family] : families_) {
    auto f = std::const_pointer_cast<SampleFamily>(family);
    for (auto& b : f->blocks) {
      if (!b.path.empty()) continue;
      b.path = block_path("families", f->id(), b.block_id);
      b.checksum = write_block(root_ / b.path, f->rows, static_cast<std::size_t>(b.row_begin),
                               static_cast<std::size_t>(b.row_end), {&f->row_group, &f->row_rank});
    }
  }
  for (auto& [name, sample] : uniforms_) {
    auto u = std::const_pointer_cast<UniformSample>(sample);
    for (auto& b : u->blocks) {
      if (!b.path.empty()) continue;
      b.path = block_path("uniform", u->name + "#" + std::to_string(u->seed), b.block_id);
      b.checksum = write_block(root_ / b.path, u->rows, static_cast<std::size_t>(b.row_begin),
                               static_cast<std::size_t>(b.row_end));
    }
  }
}

namespace {

template <typename Map, typename Eq>
bool maps_equal(const Map& a, const Map& b, Eq eq) {
  if (a.size() != b.size()) return false;
  auto ib = b.begin();
  for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !eq(ia->second, ib->second)) return false;
  }
  return true;
}

template <typename T>
bool deref_equal(const std::shared_ptr<const T>& a, const std::shared_ptr<const T>& b) {
  return (a == nullptr) == (b == nullptr) && (a == nullptr || *a == *b);
}

}  // namespace

bool Catalog::operator==(const Catalog& other) const {
  if (this == &other) return true;
  std::shared_lock lock_a(mutex_);
  std::shared_lock lock_b(other.mutex_);
  auto stats_eq = [](const auto& a, const auto& b) {
    return maps_equal(a, b, [](const auto& x, const auto& y) { return deref_equal(x, y); });
  };
  return maps_equal(tables_, other.tables_,
                    [](const auto& x, const auto& y) { return deref_equal(x, y); }) &&
         maps_equal(stats_, other.stats_, stats_eq) &&
         maps_equal(families_, other.families_,
                    [](const auto& x, const auto& y) { return deref_equal(x, y); }) &&
         maps_equal(uniforms_, other.uniforms_,
                    [](const auto& x, const auto& y) { return deref_equal(x, y); }) &&
         maps_equal(plans_, other.plans_,
                    [](const auto& x, const auto& y) { return deref_equal(x, y); });
}

std::shared_ptr<const TableHandle> ingest_csv(Catalog& catalog, const std::filesystem::path& path,
                                              std::string name, const Schema& schema) {
  if (catalog.has_table(name)) {
    throw Error(ErrorKind::kAlreadyExists, "table '" + name + "' already exists");
  }
  return catalog.add_table(std::move(name), read_csv(path, schema));
}

}  // namespace aqe
