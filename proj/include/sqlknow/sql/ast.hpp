#pragma once

// SQLite SELECT grammar as a value-semantic tree. Every node carries the byte
// range it was parsed from; synthesized nodes carry an empty span.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqlknow::sql {

struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  bool empty() const noexcept { return end <= begin; }
  std::uint32_t size() const noexcept { return empty() ? 0 : end - begin; }
  bool contains(const Span& other) const noexcept {
    return begin <= other.begin && other.end <= end;
  }
  bool overlaps(const Span& other) const noexcept {
    return begin < other.end && other.begin < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

// Deep-copying owning pointer, so recursive nodes keep value semantics.
template <class T>
class Box {
 public:
  Box() = default;
  explicit Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  explicit operator bool() const noexcept { return ptr_ != nullptr; }
  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  T* get() { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }

 private:
  std::unique_ptr<T> ptr_;
};

// An identifier as written (quotes preserved). `key()` is the lookup form.
struct Ident {
  std::string text;
  Span span;

  std::string name() const;  // unquoted
  std::string key() const;   // unquoted, ASCII-lowercased
  bool quoted() const noexcept;
};

std::string ident_key(std::string_view unquoted);
// Quotes `name` with double quotes only when it is not a plain identifier.
std::string quote_ident_if_needed(std::string_view name);

struct SelectStmt;

enum class ExprKind {
  Literal,   // text: literal as written (numbers, strings, blobs, NULL, TRUE, CURRENT_TIME...)
  Param,     // text: ?, ?1, :name
  Column,    // path: [schema.]table.column or column
  Star,      // path: qualifier (empty for bare *)
  Unary,     // op: -, +, ~, NOT ; args[0]
  Binary,    // op: AND OR = == != <> < <= > >= || + - * / % & | << >> IS "IS NOT" -> ->>
  Paren,     // args: one expression, or several for a row value
  Function,  // name, distinct, args (Star arg for count(*)), filter, window
  Case,      // args: [operand?] when/then pairs, [else]; has_operand, has_else
  Cast,      // args[0], type_name
  Collate,   // args[0], op: collation name
  Between,   // args: value, low, high; negated
  In,        // args[0] value, args[1..] list; or subquery; negated
  Like,      // op: LIKE GLOB REGEXP MATCH; args: value, pattern, [escape]; negated
  Postfix,   // op: ISNULL NOTNULL "NOT NULL"; args[0]
  Exists,    // subquery
  Subquery,  // scalar subquery
};

struct WindowSpec;

struct Expr {
  ExprKind kind = ExprKind::Literal;
  std::string text;             // literal text / function name / type name
  std::string op;               // operator / like-op / collation
  std::vector<Ident> path;      // column path or star qualifier
  bool negated = false;
  bool distinct = false;        // function DISTINCT
  bool has_operand = false;     // CASE x WHEN ...
  bool has_else = false;
  std::vector<Expr> args;
  Box<SelectStmt> subquery;
  Box<Expr> filter;             // FILTER (WHERE ...)
  Box<WindowSpec> window;       // OVER (...)
  std::string window_name;      // OVER name
  Span span;
};

struct OrderTerm {
  Expr expr;
  std::string collate;          // COLLATE name on the term, if any
  std::string direction;        // "", "ASC", "DESC"
  std::string nulls;            // "", "NULLS FIRST", "NULLS LAST"
  Span span;
};

struct WindowSpec {
  std::string base;             // existing window name
  std::vector<Expr> partition_by;
  std::vector<OrderTerm> order_by;
  std::string frame;            // frame clause, normalized tokens
};

struct FromClause;

struct FromSource {
  enum class Kind { Table, Subquery, Group, TableFunction };
  Kind kind = Kind::Table;
  std::vector<Ident> name;      // [schema.]table
  Box<SelectStmt> subquery;
  Box<FromClause> group;
  std::vector<Expr> fn_args;
  std::optional<Ident> alias;
  bool as_keyword = false;
  std::string indexed;          // "INDEXED BY x" / "NOT INDEXED" verbatim-normalized
  Span span;
};

struct JoinStep {
  std::string op;               // ",", "JOIN", "INNER JOIN", "LEFT OUTER JOIN", ...
  FromSource source;
  std::optional<Expr> on;
  std::vector<Ident> using_columns;
  Span span;
};

struct FromClause {
  FromSource first;
  std::vector<JoinStep> joins;
  Span span;                    // the items, excluding the FROM keyword
};

struct ResultColumn {
  Expr expr;                    // ExprKind::Star for * and t.*
  std::optional<Ident> alias;
  bool as_keyword = false;
  Span span;
};

struct SelectCore {
  bool distinct = false;
  bool all = false;
  Span distinct_span;
  std::vector<ResultColumn> columns;
  std::optional<FromClause> from;
  std::optional<Expr> where;
  std::vector<Expr> group_by;
  std::optional<Expr> having;
  std::vector<std::vector<Expr>> values;  // VALUES rows; when non-empty the core is a VALUES list
  Span select_span;             // SELECT keyword .. last result column
  Span from_span;               // FROM keyword .. end of last join
  Span where_span;
  Span group_span;
  Span having_span;
  Span span;
};

struct Cte {
  Ident name;
  std::vector<Ident> columns;
  std::string materialized;     // "", "MATERIALIZED", "NOT MATERIALIZED"
  Box<SelectStmt> body;
  Span span;                    // name .. closing paren
  Span body_span;               // inside the parens
};

struct WithClause {
  bool recursive = false;
  std::vector<Cte> ctes;
  Span span;
};

struct SelectStmt {
  std::optional<WithClause> with;
  std::vector<SelectCore> cores;
  std::vector<std::string> compound_ops;  // between cores: UNION, UNION ALL, INTERSECT, EXCEPT
  std::vector<OrderTerm> order_by;
  std::optional<Expr> limit;
  std::optional<Expr> offset;
  Span order_span;              // ORDER BY .. last term
  Span limit_span;              // LIMIT .. end of OFFSET
  Span body_span;               // statement without its WITH clause
  Span span;
};

// Structural equality ignoring spans.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const SelectStmt& a, const SelectStmt& b);

// Makes an expression tree with all spans cleared (useful for comparisons).
void clear_spans(SelectStmt& stmt);
void clear_spans(Expr& expr);

Expr make_column(std::string_view qualifier, std::string_view column);
Expr make_literal(std::string text);
Expr make_binary(std::string op, Expr lhs, Expr rhs);
Expr make_paren(Expr inner);

// Joins conjuncts with AND, parenthesizing operands whose precedence is lower
// than AND. A single conjunct is returned unchanged.
std::optional<Expr> make_conjunction(std::vector<Expr> conjuncts);

// Top-level AND operands of `e` (an OR node or any non-AND node is one conjunct).
std::vector<const Expr*> conjuncts(const Expr& e);

// Visits every expression node of `e`; does not descend into subqueries.
template <class F>
void walk_expr(const Expr& e, F&& fn);

}  // namespace sqlknow::sql

namespace sqlknow::sql {

template <class F>
void walk_expr(const Expr& e, F&& fn) {
  fn(e);
  for (const auto& a : e.args) walk_expr(a, fn);
  if (e.filter) walk_expr(*e.filter, fn);
  if (e.window) {
    for (const auto& p : e.window->partition_by) walk_expr(p, fn);
    for (const auto& o : e.window->order_by) walk_expr(o.expr, fn);
  }
}

}  // namespace sqlknow::sql
