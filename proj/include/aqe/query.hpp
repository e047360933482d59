#ifndef AQE_QUERY_HPP
#define AQE_QUERY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqe/value.hpp"

namespace aqe {

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

std::string_view to_string(CompareOp op);
// not (a op b) == (a negate(op) b)
CompareOp negate(CompareOp op);
// (a op b) == (b mirror(op) a)
CompareOp mirror(CompareOp op);

struct Atom {
  std::string column;
  CompareOp op = CompareOp::kEq;
  Value literal;

  friend bool operator==(const Atom&, const Atom&) = default;
};

using Conjunction = std::vector<Atom>;

// Arithmetic over columns and numeric literals.
struct Expr {
  enum class Kind { kColumn, kNumber, kBinary, kNegate };

  Kind kind = Kind::kNumber;
  std::string column;
  double number = 0.0;
  char op = 0;  // + - * / for kBinary
  std::vector<Expr> args;

  static Expr col(std::string name);
  static Expr num(double v);
  static Expr binary(char op, Expr lhs, Expr rhs);

  void collect_columns(std::vector<std::string>& out) const;
  friend bool operator==(const Expr&, const Expr&) = default;
};

enum class AggregateOp { kCount, kSum, kAvg, kQuantile };

struct AggregateSpec {
  AggregateOp op = AggregateOp::kCount;
  std::optional<Expr> target;  // absent for COUNT(*)
  double p = 0.5;              // QUANTILE only
  std::string spelling;        // keyword as written: COUNT, SUM, AVG, MEAN, QUANTILE, MEDIAN

  friend bool operator==(const AggregateSpec&, const AggregateSpec&) = default;
};

struct SelectItem {
  enum class Kind { kColumn, kAggregate, kRelativeError };

  Kind kind = Kind::kAggregate;
  std::string column;         // kColumn
  AggregateSpec aggregate;    // kAggregate
  double confidence = 0.95;   // kRelativeError

  friend bool operator==(const SelectItem&, const SelectItem&) = default;
};

enum class ErrorMeasure { kRelative, kAbsolute };

struct Bound {
  enum class Kind { kNone, kError, kTime };

  Kind kind = Kind::kNone;
  // kError: relative bounds hold the percentage as written (10 for 10%).
  double epsilon = 0.0;
  ErrorMeasure measure = ErrorMeasure::kRelative;
  double seconds = 0.0;
  double confidence = 0.95;

  double relative_fraction() const { return epsilon / 100.0; }
  friend bool operator==(const Bound&, const Bound&) = default;
};

struct BoundedQuery {
  std::vector<SelectItem> select;
  std::string table;
  std::vector<Conjunction> where;  // DNF; empty means no predicate
  std::vector<std::string> group_by;
  Bound bound;
  std::vector<std::string> warnings;  // not part of the query's identity

  bool has_predicate() const { return !where.empty(); }
  // Columns referenced by WHERE and GROUP BY, first-seen order.
  std::vector<std::string> filter_columns() const;
  std::vector<AggregateSpec> aggregates() const;

  friend bool operator==(const BoundedQuery& a, const BoundedQuery& b) {
    return a.select == b.select && a.table == b.table && a.where == b.where &&
           a.group_by == b.group_by && a.bound == b.bound;
  }
};

BoundedQuery parse(std::string_view text, double default_confidence = 0.95);
std::string unparse(const BoundedQuery& query);
std::string unparse_expr(const Expr& expr);
std::string unparse_predicate(const std::vector<Conjunction>& dnf);

// Hash of the canonical text without the bound clause or report-only items.
std::uint64_t fingerprint(const BoundedQuery& query);

}  // namespace aqe

#endif  // AQE_QUERY_HPP
