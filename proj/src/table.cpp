#include "aqe/table.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

#include "aqe/error.hpp"
#include "aqe/hash.hpp"

namespace aqe {

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::kInteger:
      return "int";
    case ColumnType::kFloat:
      return "float";
    case ColumnType::kString:
      return "string";
  }
  return "?";
}

ColumnType parse_column_type(std::string_view text) {
  if (text == "int" || text == "integer" || text == "bigint") return ColumnType::kInteger;
  if (text == "float" || text == "double" || text == "real") return ColumnType::kFloat;
  if (text == "string" || text == "str" || text == "text") return ColumnType::kString;
  throw Error(ErrorKind::kInvalidArgument, "unknown column type '" + std::string(text) + "'");
}

Schema parse_schema(std::string_view text) {
  Schema schema;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    if (item.empty() || colon == std::string_view::npos || colon == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "bad schema item '" + std::string(item) + "' (expected name:type)");
    }
    ColumnDef def{std::string(item.substr(0, colon)), parse_column_type(item.substr(colon + 1))};
    for (const auto& existing : schema) {
      if (existing.name == def.name) {
        throw Error(ErrorKind::kInvalidArgument, "duplicate column '" + def.name + "'");
      }
    }
    schema.push_back(std::move(def));
    pos = comma + 1;
  }
  return schema;
}

std::string format_schema(const Schema& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i) out += ',';
    out += schema[i].name;
    out += ':';
    out += to_string(schema[i].type);
  }
  return out;
}

std::string format_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, res.ptr);
  }
  return std::get<std::string>(v);
}

std::string format_key(const GroupKey& key, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out += sep;
    out += format_value(key[i]);
  }
  return out;
}

std::uint64_t hash_key(const GroupKey& key) {
  std::uint64_t h = kFnvOffset;
  for (const auto& v : key) {
    h = fnv1a_u64(v.index(), h);
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
      h = fnv1a_u64(static_cast<std::uint64_t>(*i), h);
    } else if (const auto* d = std::get_if<double>(&v)) {
      h = fnv1a_u64(std::bit_cast<std::uint64_t>(*d), h);
    } else {
      const auto& s = std::get<std::string>(v);
      h = fnv1a_u64(s.size(), h);
      h = fnv1a(s, h);
    }
  }
  return h;
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::numeric_limits<double>::quiet_NaN();
}

std::uint32_t Dictionary::intern(std::string_view s) {
  auto it = index_.find(std::string(s));
  if (it != index_.end()) return it->second;
  const auto code = static_cast<std::uint32_t>(values_.size());
  values_.emplace_back(s);
  index_.emplace(values_.back(), code);
  return code;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view s) const {
  auto it = index_.find(std::string(s));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Column::Column(ColumnType type)
    : type_(type),
      dict_(type == ColumnType::kString ? std::make_shared<Dictionary>() : nullptr) {}

Column::Column(ColumnType type, std::shared_ptr<Dictionary> dict)
    : type_(type), dict_(std::move(dict)) {}

std::size_t Column::size() const {
  switch (type_) {
    case ColumnType::kInteger:
      return ints_.size();
    case ColumnType::kFloat:
      return floats_.size();
    case ColumnType::kString:
      return codes_.size();
  }
  return 0;
}

void Column::reserve(std::size_t n) {
  switch (type_) {
    case ColumnType::kInteger:
      ints_.reserve(n);
      break;
    case ColumnType::kFloat:
      floats_.reserve(n);
      break;
    case ColumnType::kString:
      codes_.reserve(n);
      break;
  }
}

void Column::push(const Value& v) {
  switch (type_) {
    case ColumnType::kInteger:
      if (const auto* i = std::get_if<std::int64_t>(&v)) {
        ints_.push_back(*i);
        return;
      }
      break;
    case ColumnType::kFloat:
      if (const auto* d = std::get_if<double>(&v)) {
        floats_.push_back(*d);
        return;
      }
      if (const auto* i = std::get_if<std::int64_t>(&v)) {
        floats_.push_back(static_cast<double>(*i));
        return;
      }
      break;
    case ColumnType::kString:
      if (const auto* s = std::get_if<std::string>(&v)) {
        push_string(*s);
        return;
      }
      break;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "value '" + format_value(v) + "' does not fit column type " +
                  std::string(to_string(type_)));
}

void Column::push_from(const Column& src, std::size_t row) {
  switch (type_) {
    case ColumnType::kInteger:
      ints_.push_back(src.ints_[row]);
      break;
    case ColumnType::kFloat:
      floats_.push_back(src.floats_[row]);
      break;
    case ColumnType::kString:
      if (src.dict_ == dict_) {
        codes_.push_back(src.codes_[row]);
      } else {
        push_string(src.string_at(row));
      }
      break;
  }
}

Value Column::value_from_key(std::int64_t key) const {
  switch (type_) {
    case ColumnType::kInteger:
      return key;
    case ColumnType::kFloat:
      return std::bit_cast<double>(key);
    case ColumnType::kString:
      return dict_->at(static_cast<std::uint32_t>(key));
  }
  return key;
}

std::int64_t Column::key_at(std::size_t i) const {
  switch (type_) {
    case ColumnType::kInteger:
      return ints_[i];
    case ColumnType::kFloat: {
      const double d = floats_[i] == 0.0 ? 0.0 : floats_[i];  // fold -0.0
      return std::bit_cast<std::int64_t>(d);
    }
    case ColumnType::kString:
      return codes_[i];
  }
  return 0;
}

Value Column::value_at(std::size_t i) const {
  switch (type_) {
    case ColumnType::kInteger:
      return ints_[i];
    case ColumnType::kFloat:
      return floats_[i];
    case ColumnType::kString:
      return string_at(i);
  }
  return std::int64_t{0};
}

Table::Table(Schema schema) : schema_(std::move(schema)) {
  columns_.reserve(schema_.size());
  for (const auto& def : schema_) columns_.emplace_back(def.type);
}

Table Table::sharing_dictionaries(const Table& src) {
  Table t;
  t.schema_ = src.schema_;
  for (const auto& col : src.columns_) t.columns_.emplace_back(col.type(), col.dictionary());
  return t;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::column_index(std::string_view name) const {
  if (auto idx = find_column(name)) return *idx;
  throw Error(ErrorKind::kNotFound, "unknown column '" + std::string(name) + "'");
}

void Table::reserve(std::size_t rows) {
  for (auto& c : columns_) c.reserve(rows);
}

void Table::append_row(std::span<const Value> row) {
  if (row.size() != columns_.size()) {
    throw Error(ErrorKind::kInvalidArgument, "row arity " + std::to_string(row.size()) +
                                                 " does not match schema arity " +
                                                 std::to_string(columns_.size()));
  }
  for (std::size_t i = 0; i < row.size(); ++i) columns_[i].push(row[i]);
}

void Table::append_row_from(const Table& src, std::size_t row) {
  for (std::size_t i = 0; i < columns_.size(); ++i) columns_[i].push_from(src.columns_[i], row);
}

std::vector<Value> Table::row(std::size_t r) const {
  std::vector<Value> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.value_at(r));
  return out;
}

double Table::average_row_bytes() const {
  const std::size_t n = row_count();
  if (n == 0) return 0.0;
  double bytes = 0.0;
  for (const auto& c : columns_) {
    if (c.type() != ColumnType::kString) {
      bytes += 8.0 * static_cast<double>(n);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) bytes += static_cast<double>(c.string_at(i).size());
  }
  return bytes / static_cast<double>(n);
}

bool Table::operator==(const Table& other) const {
  if (schema_ != other.schema_ || row_count() != other.row_count()) return false;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Column& a = columns_[c];
    const Column& b = other.columns_[c];
    switch (a.type()) {
      case ColumnType::kInteger:
        if (!std::equal(a.ints().begin(), a.ints().end(), b.ints().begin())) return false;
        break;
      case ColumnType::kFloat:
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (std::bit_cast<std::uint64_t>(a.float_at(i)) !=
              std::bit_cast<std::uint64_t>(b.float_at(i))) {
            return false;
          }
        }
        break;
      case ColumnType::kString:
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (a.string_at(i) != b.string_at(i)) return false;
        }
        break;
    }
  }
  return true;
}

}  // namespace aqe
