#ifndef AQE_TABLE_HPP
#define AQE_TABLE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "aqe/value.hpp"

namespace aqe {

/// Append-only string interning table. Codes are dense and assigned in
/// first-seen order; they carry no ordering meaning.
class Dictionary {
 public:
  std::uint32_t intern(std::string_view s);
  std::optional<std::uint32_t> find(std::string_view s) const;
  const std::string& at(std::uint32_t code) const { return values_[code]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// One typed column. String columns hold dictionary codes.
class Column {
 public:
  explicit Column(ColumnType type);
  Column(ColumnType type, std::shared_ptr<Dictionary> dict);

  ColumnType type() const { return type_; }
  std::size_t size() const;
  void reserve(std::size_t n);

  void push_int(std::int64_t v) { ints_.push_back(v); }
  void push_float(double v) { floats_.push_back(v); }
  void push_string(std::string_view v) { codes_.push_back(dict_->intern(v)); }
  void push(const Value& v);
  /// Appends row `row` of `src`, which must have the same type.
  void push_from(const Column& src, std::size_t row);

  std::int64_t int_at(std::size_t i) const { return ints_[i]; }
  double float_at(std::size_t i) const { return floats_[i]; }
  std::uint32_t code_at(std::size_t i) const { return codes_[i]; }
  const std::string& string_at(std::size_t i) const { return dict_->at(codes_[i]); }
  double numeric_at(std::size_t i) const {
    return type_ == ColumnType::kInteger ? static_cast<double>(ints_[i]) : floats_[i];
  }
  /// Integer identity of the cell, usable as a hash key within this column.
  std::int64_t key_at(std::size_t i) const;
  Value value_at(std::size_t i) const;
  // Inverse of key_at for this column.
  Value value_from_key(std::int64_t key) const;

  std::span<const std::int64_t> ints() const { return ints_; }
  std::span<const double> floats() const { return floats_; }
  std::span<const std::uint32_t> codes() const { return codes_; }
  const std::shared_ptr<Dictionary>& dictionary() const { return dict_; }

 private:
  ColumnType type_;
  std::vector<std::int64_t> ints_;
  std::vector<double> floats_;
  std::vector<std::uint32_t> codes_;
  std::shared_ptr<Dictionary> dict_;
};

/// Column-major in-memory table.
class Table {
 public:
  Table() = default;
  explicit Table(Schema schema);

  /// Empty table with the same schema whose string columns share `src`'s
  /// dictionaries, so codes copied from `src` stay valid.
  static Table sharing_dictionaries(const Table& src);

  const Schema& schema() const { return schema_; }
  std::size_t row_count() const { return columns_.empty() ? 0 : columns_.front().size(); }
  std::size_t column_count() const { return columns_.size(); }
  const Column& column(std::size_t i) const { return columns_[i]; }
  Column& column(std::size_t i) { return columns_[i]; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  /// Throws Error(kNotFound) naming the column.
  std::size_t column_index(std::string_view name) const;

  void reserve(std::size_t rows);
  void append_row(std::span<const Value> row);
  void append_row_from(const Table& src, std::size_t row);

  Value value(std::size_t row, std::size_t col) const { return columns_[col].value_at(row); }
  std::vector<Value> row(std::size_t r) const;
  double average_row_bytes() const;

  /// Logical equality: schema and every cell value (not dictionary codes).
  bool operator==(const Table& other) const;

 private:
  Schema schema_;
  std::vector<Column> columns_;
};

}  // namespace aqe

#endif  // AQE_TABLE_HPP
