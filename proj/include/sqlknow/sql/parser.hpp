#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "sqlknow/sql/ast.hpp"

namespace sqlknow::sql {

// All parse functions require the whole input to be consumed (a trailing ';' is
// accepted for statements) and throw SyntaxError with the byte offset of the
// offending token otherwise.
SelectStmt parse_select(std::string_view text);
Expr parse_expression(std::string_view text);
ResultColumn parse_result_column(std::string_view text);
std::vector<ResultColumn> parse_result_columns(std::string_view text);

// A free-standing run of clauses, e.g. "WHERE a > 1 GROUP BY b" or
// "DISTINCT ORDER BY x LIMIT 1". Used to parse fragments and splice inputs.
struct ClauseSet {
  bool distinct = false;
  std::optional<FromClause> from;
  std::optional<Expr> where;
  std::optional<std::vector<Expr>> group_by;
  std::optional<Expr> having;
  std::optional<std::vector<OrderTerm>> order_by;
  std::optional<Expr> limit;
  std::optional<Expr> offset;

  bool empty() const {
    return !distinct && !from && !where && !group_by && !having && !order_by && !limit;
  }
};

ClauseSet parse_clauses(std::string_view text);

// True when `text` starts with a clause keyword that parse_clauses understands.
bool starts_with_clause_keyword(std::string_view text);

}  // namespace sqlknow::sql
