#ifndef AQE_COLUMN_SET_HPP
#define AQE_COLUMN_SET_HPP

#include <string>
#include <string_view>
#include <vector>

namespace aqe {

/// Ordered, duplicate-free, non-empty list of column names. The order is the
/// sort order of a stored sample; set semantics (subset, equality as a set)
/// ignore it.
class ColumnSet {
 public:
  ColumnSet() = default;
  explicit ColumnSet(std::vector<std::string> columns);
  /// Parses "a,b,c".
  static ColumnSet parse(std::string_view text);

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  bool contains(std::string_view column) const;
  bool subset_of(const ColumnSet& other) const;
  bool same_set(const ColumnSet& other) const;
  /// Sorted copy; the canonical identity of the set.
  ColumnSet canonical() const;
  std::string to_string() const;

  friend bool operator==(const ColumnSet&, const ColumnSet&) = default;
  friend auto operator<=>(const ColumnSet&, const ColumnSet&) = default;

 private:
  std::vector<std::string> columns_;
};

}  // namespace aqe

#endif  // AQE_COLUMN_SET_HPP
