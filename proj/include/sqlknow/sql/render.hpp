#pragma once

#include <string>
#include <vector>

#include "sqlknow/sql/ast.hpp"

namespace sqlknow::sql {

// Pretty: one clause per line, CTE bodies indented by two spaces.
// Compact: a single line. Subqueries nested in expressions or FROM are always compact.
enum class RenderStyle { Pretty, Compact };

std::string render(const SelectStmt& stmt, RenderStyle style = RenderStyle::Pretty);
std::string render_expr(const Expr& e);
std::string render_result_column(const ResultColumn& rc);
std::string render_from(const FromClause& from);  // without the FROM keyword
std::string render_order_term(const OrderTerm& t);
std::string render_order_terms(const std::vector<OrderTerm>& terms);
std::string render_exprs(const std::vector<Expr>& es);

// The clause text "DISTINCT ORDER BY ... LIMIT ..." with absent parts omitted.
std::string render_output_clause(bool distinct, const SelectStmt& stmt);

}  // namespace sqlknow::sql
