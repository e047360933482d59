#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "aqe/error.hpp"
#include "aqe/hash.hpp"
#include "aqe/query.hpp"
#include "aqe/text_format.hpp"

namespace aqe {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "<>";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "?";
}

CompareOp negate(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return CompareOp::kNe;
    case CompareOp::kNe: return CompareOp::kEq;
    case CompareOp::kLt: return CompareOp::kGe;
    case CompareOp::kLe: return CompareOp::kGt;
    case CompareOp::kGt: return CompareOp::kLe;
    case CompareOp::kGe: return CompareOp::kLt;
  }
  return op;
}

CompareOp mirror(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return CompareOp::kGt;
    case CompareOp::kLe: return CompareOp::kGe;
    case CompareOp::kGt: return CompareOp::kLt;
    case CompareOp::kGe: return CompareOp::kLe;
    default: return op;
  }
}

Expr Expr::col(std::string name) {
  Expr e;
  e.kind = Kind::kColumn;
  e.column = std::move(name);
  return e;
}

Expr Expr::num(double v) {
  Expr e;
  e.kind = Kind::kNumber;
  e.number = v;
  return e;
}

Expr Expr::binary(char op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::kBinary;
  e.op = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

void Expr::collect_columns(std::vector<std::string>& out) const {
  if (kind == Kind::kColumn && std::find(out.begin(), out.end(), column) == out.end()) {
    out.push_back(column);
  }
  for (const auto& a : args) a.collect_columns(out);
}

std::vector<std::string> BoundedQuery::filter_columns() const {
  std::vector<std::string> out;
  auto add = [&](const std::string& c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  for (const auto& conj : where) {
    for (const auto& atom : conj) add(atom.column);
  }
  for (const auto& g : group_by) add(g);
  return out;
}

std::vector<AggregateSpec> BoundedQuery::aggregates() const {
  std::vector<AggregateSpec> out;
  for (const auto& item : select) {
    if (item.kind == SelectItem::Kind::kAggregate) out.push_back(item.aggregate);
  }
  return out;
}

namespace {

constexpr std::size_t kMaxDisjuncts = 4096;

enum class Tok { kIdent, kQuotedIdent, kNumber, kString, kSymbol, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  std::size_t pos = 0;  // 1-based character offset
};

const char* const kReserved[] = {"SELECT", "FROM",   "WHERE",      "GROUP",    "BY",
                                 "AND",    "OR",     "NOT",        "ERROR",    "WITHIN",
                                 "AT",     "CONFIDENCE", "SECONDS", "SECOND",   "RELATIVE",
                                 "ABSOLUTE"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_reserved(std::string_view word) {
  const std::string u = upper(word);
  return std::any_of(std::begin(kReserved), std::end(kReserved),
                     [&](const char* k) { return u == k; });
}

[[noreturn]] void syntax_error(std::size_t pos, const std::string& what) {
  throw Error(ErrorKind::kParse, "syntax error at position " + std::to_string(pos) + ": " + what);
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i + 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::kIdent;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      t.kind = Tok::kNumber;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (c == '\'' || c == '`') {
      // A backtick opens a string too; it closes with either quote character.
      std::size_t j = i + 1;
      std::string text;
      for (;;) {
        if (j >= s.size()) syntax_error(t.pos, "unterminated string literal");
        if (s[j] == '\'' && j + 1 < s.size() && s[j + 1] == '\'') {
          text += '\'';
          j += 2;
        } else if (s[j] == '\'' || (c == '`' && s[j] == '`')) {
          ++j;
          break;
        } else {
          text += s[j++];
        }
      }
      t.kind = Tok::kString;
      t.text = std::move(text);
      i = j;
    } else if (c == '"') {
      std::size_t j = i + 1;
      std::string text;
      for (;;) {
        if (j >= s.size()) syntax_error(t.pos, "unterminated quoted identifier");
        if (s[j] == '"' && j + 1 < s.size() && s[j + 1] == '"') {
          text += '"';
          j += 2;
        } else if (s[j] == '"') {
          ++j;
          break;
        } else {
          text += s[j++];
        }
      }
      if (text.empty()) syntax_error(t.pos, "empty quoted identifier");
      t.kind = Tok::kQuotedIdent;
      t.text = std::move(text);
      i = j;
    } else {
      static constexpr std::string_view kTwo[] = {"<=", ">=", "<>", "!=", "=="};
      t.kind = Tok::kSymbol;
      const std::string_view rest = s.substr(i);
      auto two = std::find_if(std::begin(kTwo), std::end(kTwo),
                              [&](std::string_view op) { return rest.substr(0, 2) == op; });
      if (two != std::end(kTwo)) {
        t.text = *two;
        i += 2;
      } else if (std::string_view("(),*%;=<>+-/").find(c) != std::string_view::npos) {
        t.text = std::string(1, c);
        ++i;
      } else {
        syntax_error(t.pos, std::string("unexpected character '") + c + "'");
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::kEnd;
  end.pos = s.size() + 1;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, double default_confidence)
      : tokens_(lex(text)), default_confidence_(default_confidence) {}

  BoundedQuery parse_query() {
    BoundedQuery q;
    q.bound.confidence = default_confidence_;
    expect_keyword("SELECT");
    do {
      q.select.push_back(parse_item());
    } while (accept_symbol(","));
    expect_keyword("FROM");
    q.table = expect_identifier("table name");
    if (accept_keyword("WHERE")) q.where = parse_or(false);
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        const std::size_t pos = peek().pos;
        std::string col = expect_identifier("column name");
        if (std::find(q.group_by.begin(), q.group_by.end(), col) != q.group_by.end()) {
          syntax_error(pos, "duplicate GROUP BY column '" + col + "'");
        }
        q.group_by.push_back(std::move(col));
      } while (accept_symbol(","));
    }
    while (peek_keyword("ERROR") || peek_keyword("WITHIN")) {
      const std::size_t pos = peek().pos;
      if (q.bound.kind != Bound::Kind::kNone) {
        syntax_error(pos, "a query may carry only one bound (ERROR WITHIN or WITHIN ... SECONDS)");
      }
      parse_bound(q);
    }
    accept_symbol(";");
    if (peek().kind != Tok::kEnd) syntax_error(peek().pos, "unexpected '" + peek().text + "'");
    if (std::none_of(q.select.begin(), q.select.end(), [](const SelectItem& s) {
          return s.kind == SelectItem::Kind::kAggregate;
        })) {
      syntax_error(1, "select list has no aggregate");
    }
    for (const auto& item : q.select) {
      if (item.kind == SelectItem::Kind::kColumn &&
          std::find(q.group_by.begin(), q.group_by.end(), item.column) == q.group_by.end()) {
        throw Error(ErrorKind::kParse,
                    "column '" + item.column + "' in select list must appear in GROUP BY");
      }
    }
    q.warnings = std::move(warnings_);
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::kIdent && upper(peek(ahead).text) == kw;
  }
  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    advance();
    return true;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) syntax_error(peek().pos, "expected " + std::string(kw) + describe());
  }
  bool peek_symbol(std::string_view sym) const {
    return peek().kind == Tok::kSymbol && peek().text == sym;
  }
  bool accept_symbol(std::string_view sym) {
    if (!peek_symbol(sym)) return false;
    advance();
    return true;
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) syntax_error(peek().pos, "expected '" + std::string(sym) + "'" + describe());
  }
  std::string describe() const {
    return peek().kind == Tok::kEnd ? " at end of input" : ", found '" + peek().text + "'";
  }

  std::string expect_identifier(const char* what) {
    const Token& t = peek();
    if (t.kind == Tok::kQuotedIdent || (t.kind == Tok::kIdent && !is_reserved(t.text))) {
      return advance().text;
    }
    syntax_error(t.pos, std::string("expected ") + what + describe());
  }

  double expect_number(const char* what) {
    const Token& t = peek();
    if (t.kind != Tok::kNumber) syntax_error(t.pos, std::string("expected ") + what + describe());
    advance();
    return parse_double(t.text);
  }

  // "95", "95%" and "0.95" all mean 0.95.
  double parse_confidence() {
    const std::size_t pos = peek().pos;
    double v = expect_number("confidence level");
    if (accept_symbol("%") || v > 1.0) v /= 100.0;
    if (!(v > 0.0 && v < 1.0)) syntax_error(pos, "confidence must be in (0, 1) or (0%, 100%)");
    return v;
  }

  SelectItem parse_item() {
    SelectItem item;
    const Token& t = peek();
    if (peek_keyword("RELATIVE")) {
      advance();
      expect_keyword("ERROR");
      expect_keyword("AT");
      item.kind = SelectItem::Kind::kRelativeError;
      item.confidence = parse_confidence();
      return item;
    }
    if (t.kind == Tok::kIdent && peek(1).kind == Tok::kSymbol && peek(1).text == "(") {
      item.kind = SelectItem::Kind::kAggregate;
      item.aggregate = parse_aggregate();
      return item;
    }
    item.kind = SelectItem::Kind::kColumn;
    item.column = expect_identifier("select item");
    return item;
  }

  AggregateSpec parse_aggregate() {
    const Token name = advance();
    const std::string fn = upper(name.text);
    AggregateSpec a;
    a.spelling = fn;
    expect_symbol("(");
    if (fn == "COUNT") {
      a.op = AggregateOp::kCount;
      if (!accept_symbol("*")) a.target = parse_expr();
    } else if (fn == "SUM") {
      a.op = AggregateOp::kSum;
      a.target = parse_expr();
    } else if (fn == "AVG" || fn == "MEAN") {
      a.op = AggregateOp::kAvg;
      a.target = parse_expr();
    } else if (fn == "MEDIAN") {
      a.op = AggregateOp::kQuantile;
      a.target = parse_expr();
      a.p = 0.5;
    } else if (fn == "QUANTILE") {
      a.op = AggregateOp::kQuantile;
      a.target = parse_expr();
      expect_symbol(",");
      const std::size_t pos = peek().pos;
      a.p = expect_number("quantile probability");
      if (!(a.p > 0.0 && a.p < 1.0)) syntax_error(pos, "quantile probability must be in (0, 1)");
    } else {
      syntax_error(name.pos, "unknown aggregate '" + name.text + "'");
    }
    expect_symbol(")");
    return a;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (peek_symbol("+") || peek_symbol("-")) {
      const char op = advance().text[0];
      lhs = Expr::binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    while (peek_symbol("*") || peek_symbol("/")) {
      const char op = advance().text[0];
      lhs = Expr::binary(op, std::move(lhs), parse_factor());
    }
    return lhs;
  }

  Expr parse_factor() {
    if (accept_symbol("-")) {
      Expr inner = parse_factor();
      if (inner.kind == Expr::Kind::kNumber) return Expr::num(-inner.number);
      Expr e;
      e.kind = Expr::Kind::kNegate;
      e.args.push_back(std::move(inner));
      return e;
    }
    if (accept_symbol("(")) {
      Expr e = parse_expr();
      expect_symbol(")");
      return e;
    }
    if (peek().kind == Tok::kNumber) return Expr::num(parse_double(advance().text));
    return Expr::col(expect_identifier("column or number"));
  }

  void parse_bound(BoundedQuery& q) {
    const std::size_t pos = peek().pos;
    if (accept_keyword("ERROR")) {
      expect_keyword("WITHIN");
      q.bound.kind = Bound::Kind::kError;
      q.bound.epsilon = expect_number("error bound");
      if (q.bound.epsilon < 0) syntax_error(pos, "error bound must be non-negative");
      if (accept_symbol("%")) {
        q.bound.measure = ErrorMeasure::kRelative;
      } else if (accept_keyword("ABSOLUTE")) {
        q.bound.measure = ErrorMeasure::kAbsolute;
      } else {
        q.bound.measure = ErrorMeasure::kRelative;
        warnings_.push_back("ERROR WITHIN " + format_double(q.bound.epsilon) +
                            " has no unit; read as " + format_double(q.bound.epsilon) +
                            "% relative error (write ABSOLUTE for an absolute bound)");
      }
    } else {
      expect_keyword("WITHIN");
      q.bound.kind = Bound::Kind::kTime;
      q.bound.seconds = expect_number("time bound");
      if (!accept_keyword("SECONDS") && !accept_keyword("SECOND")) {
        syntax_error(peek().pos, "expected SECONDS" + describe());
      }
      if (!(q.bound.seconds > 0)) syntax_error(pos, "time bound must be positive");
    }
    if (accept_keyword("AT")) {
      expect_keyword("CONFIDENCE");
      q.bound.confidence = parse_confidence();
    }
  }

  // Predicates come back in DNF; `neg` pushes a pending NOT down to atoms.
  std::vector<Conjunction> parse_or(bool neg) {
    auto acc = parse_and(neg);
    while (accept_keyword("OR")) {
      auto rhs = parse_and(neg);
      acc = neg ? cross(acc, rhs) : concat(std::move(acc), std::move(rhs));
    }
    return acc;
  }

  std::vector<Conjunction> parse_and(bool neg) {
    auto acc = parse_unary(neg);
    while (accept_keyword("AND")) {
      auto rhs = parse_unary(neg);
      acc = neg ? concat(std::move(acc), std::move(rhs)) : cross(acc, rhs);
    }
    return acc;
  }

  std::vector<Conjunction> parse_unary(bool neg) {
    if (accept_keyword("NOT")) return parse_unary(!neg);
    if (accept_symbol("(")) {
      auto inner = parse_or(neg);
      expect_symbol(")");
      return inner;
    }
    Atom atom = parse_atom();
    if (neg) atom.op = negate(atom.op);
    return {{std::move(atom)}};
  }

  Atom parse_atom() {
    Atom atom;
    if (peek().kind == Tok::kIdent || peek().kind == Tok::kQuotedIdent) {
      atom.column = expect_identifier("column name");
      atom.op = parse_op();
      atom.literal = parse_literal();
    } else {
      atom.literal = parse_literal();
      atom.op = mirror(parse_op());
      atom.column = expect_identifier("column name");
    }
    return atom;
  }

  CompareOp parse_op() {
    const Token& t = peek();
    if (t.kind == Tok::kSymbol) {
      const std::string& s = t.text;
      CompareOp op;
      if (s == "=" || s == "==") op = CompareOp::kEq;
      else if (s == "<>" || s == "!=") op = CompareOp::kNe;
      else if (s == "<") op = CompareOp::kLt;
      else if (s == "<=") op = CompareOp::kLe;
      else if (s == ">") op = CompareOp::kGt;
      else if (s == ">=") op = CompareOp::kGe;
      else syntax_error(t.pos, "expected comparison operator" + describe());
      advance();
      return op;
    }
    syntax_error(t.pos, "expected comparison operator" + describe());
  }

  Value parse_literal() {
    const Token& t = peek();
    if (t.kind == Tok::kString) return advance().text;
    bool negative = false;
    if (peek_symbol("-")) {
      negative = true;
      advance();
    }
    const Token& n = peek();
    if (n.kind != Tok::kNumber) syntax_error(n.pos, "expected literal" + describe());
    advance();
    const bool is_int = n.text.find_first_of(".eE") == std::string::npos;
    if (is_int) {
      std::int64_t v = 0;
      const std::string text = (negative ? "-" : "") + n.text;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc() && ptr == text.data() + text.size()) return v;
      syntax_error(n.pos, "integer literal out of range");
    }
    const double v = parse_double(n.text);
    if (!std::isfinite(v)) syntax_error(n.pos, "numeric literal out of range");
    return negative ? -v : v;
  }

  static std::vector<Conjunction> concat(std::vector<Conjunction> a, std::vector<Conjunction> b) {
    for (auto& c : b) a.push_back(std::move(c));
    if (a.size() > kMaxDisjuncts) {
      throw Error(ErrorKind::kParse, "predicate expands to more than " +
                                         std::to_string(kMaxDisjuncts) + " disjuncts");
    }
    return a;
  }

  static std::vector<Conjunction> cross(const std::vector<Conjunction>& a,
                                        const std::vector<Conjunction>& b) {
    if (a.size() * b.size() > kMaxDisjuncts) {
      throw Error(ErrorKind::kParse, "predicate expands to more than " +
                                         std::to_string(kMaxDisjuncts) + " disjuncts");
    }
    std::vector<Conjunction> out;
    for (const auto& x : a) {
      for (const auto& y : b) {
        Conjunction c = x;
        for (const auto& atom : y) {
          if (std::find(c.begin(), c.end(), atom) == c.end()) c.push_back(atom);
        }
        out.push_back(std::move(c));
      }
    }
    return out;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  double default_confidence_;
  std::vector<std::string> warnings_;
};

std::string quote_identifier(const std::string& name) {
  const bool plain = !name.empty() &&
                     (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                     std::all_of(name.begin(), name.end(),
                                 [](char c) {
                                   return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                                 }) &&
                     !is_reserved(name);
  if (plain) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string unparse_literal(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    std::string s = format_double(*d);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
  }
  std::string out = "'";
  for (char c : std::get<std::string>(v)) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string unparse_operand(const Expr& e) {
  if (e.kind == Expr::Kind::kBinary || (e.kind == Expr::Kind::kNumber && e.number < 0)) {
    return "(" + unparse_expr(e) + ")";
  }
  return unparse_expr(e);
}

std::string unparse_aggregate(const AggregateSpec& a) {
  std::string name = a.spelling;
  if (name.empty()) {
    switch (a.op) {
      case AggregateOp::kCount: name = "COUNT"; break;
      case AggregateOp::kSum: name = "SUM"; break;
      case AggregateOp::kAvg: name = "AVG"; break;
      case AggregateOp::kQuantile: name = "QUANTILE"; break;
    }
  }
  std::string out = name + "(";
  out += a.target ? unparse_expr(*a.target) : "*";
  if (a.op == AggregateOp::kQuantile && name != "MEDIAN") out += ", " + format_double(a.p);
  return out + ")";
}

std::string unparse_body(const BoundedQuery& q, bool with_reports) {
  std::string out = "SELECT ";
  bool first = true;
  for (const auto& item : q.select) {
    std::string text;
    switch (item.kind) {
      case SelectItem::Kind::kColumn: text = quote_identifier(item.column); break;
      case SelectItem::Kind::kAggregate: text = unparse_aggregate(item.aggregate); break;
      case SelectItem::Kind::kRelativeError:
        if (!with_reports) continue;
        text = "RELATIVE ERROR AT " + format_double(item.confidence);
        break;
    }
    if (!first) out += ", ";
    out += text;
    first = false;
  }
  out += " FROM " + quote_identifier(q.table);
  if (!q.where.empty()) out += " WHERE " + unparse_predicate(q.where);
  if (!q.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < q.group_by.size(); ++i) {
      if (i) out += ", ";
      out += quote_identifier(q.group_by[i]);
    }
  }
  return out;
}

}  // namespace

std::string unparse_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kColumn: return quote_identifier(e.column);
    case Expr::Kind::kNumber: return format_double(e.number);
    case Expr::Kind::kNegate: {
      const Expr& a = e.args.front();
      return "-" + (a.kind == Expr::Kind::kColumn ? unparse_expr(a) : "(" + unparse_expr(a) + ")");
    }
    case Expr::Kind::kBinary:
      return unparse_operand(e.args[0]) + " " + e.op + " " + unparse_operand(e.args[1]);
  }
  return {};
}

std::string unparse_predicate(const std::vector<Conjunction>& dnf) {
  std::string out;
  for (std::size_t d = 0; d < dnf.size(); ++d) {
    if (d) out += " OR ";
    const bool wrap = dnf.size() > 1 && dnf[d].size() > 1;
    if (wrap) out += "(";
    for (std::size_t i = 0; i < dnf[d].size(); ++i) {
      if (i) out += " AND ";
      const Atom& a = dnf[d][i];
      out += quote_identifier(a.column) + " " + std::string(to_string(a.op)) + " " +
             unparse_literal(a.literal);
    }
    if (wrap) out += ")";
  }
  return out;
}

BoundedQuery parse(std::string_view text, double default_confidence) {
  return Parser(text, default_confidence).parse_query();
}

std::string unparse(const BoundedQuery& q) {
  std::string out = unparse_body(q, true);
  const Bound& b = q.bound;
  switch (b.kind) {
    case Bound::Kind::kNone: break;
    case Bound::Kind::kError:
      out += " ERROR WITHIN " + format_double(b.epsilon) +
             (b.measure == ErrorMeasure::kRelative ? "%" : " ABSOLUTE") + " AT CONFIDENCE " +
             format_double(b.confidence);
      break;
    case Bound::Kind::kTime:
      out += " WITHIN " + format_double(b.seconds) + " SECONDS AT CONFIDENCE " +
             format_double(b.confidence);
      break;
  }
  return out;
}

std::uint64_t fingerprint(const BoundedQuery& q) {
  BoundedQuery core = q;
  std::erase_if(core.select, [](const SelectItem& s) { return s.kind != SelectItem::Kind::kAggregate; });
  return fnv1a(unparse_body(core, false));
}

}  // namespace aqe
