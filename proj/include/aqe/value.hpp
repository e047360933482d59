#ifndef AQE_VALUE_HPP
#define AQE_VALUE_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aqe {

enum class ColumnType { kInteger, kFloat, kString };

std::string_view to_string(ColumnType type);
ColumnType parse_column_type(std::string_view text);

struct ColumnDef {
  std::string name;
  ColumnType type = ColumnType::kString;

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

using Schema = std::vector<ColumnDef>;

/// Parses "name:type,name:type". Types: int|integer, float|double, string.
Schema parse_schema(std::string_view text);
std::string format_schema(const Schema& schema);

using Value = std::variant<std::int64_t, double, std::string>;

/// Tuple of column values identifying a group of a column set.
using GroupKey = std::vector<Value>;

std::string format_value(const Value& v);
std::string format_key(const GroupKey& key, std::string_view sep = "|");
std::uint64_t hash_key(const GroupKey& key);

/// Numeric view of a value; strings are not numeric and yield NaN.
double as_double(const Value& v);

}  // namespace aqe

#endif  // AQE_VALUE_HPP
