#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlknow/sql/units.hpp"

namespace sqlknow::sql {

enum class KnowledgeKind { Calculation, Condition, Relation, Dimension, Output };
enum class Clause { Select, Where, Having, FromJoin, GroupBy, OrderByLimitDistinct };

const char* to_string(KnowledgeKind k);
const char* to_string(Clause c);
KnowledgeKind parse_kind(std::string_view s);  // throws ValidationError
Clause parse_clause(std::string_view s);

struct Fragment {
  std::string id;          // "<unit>/<slot>", e.g. "main/where.2", "main/c1.select.1", "main/output"
  KnowledgeKind kind = KnowledgeKind::Calculation;
  Clause clause = Clause::Select;
  std::string unit_id;
  std::string sql_text;    // standalone: expression, result column, or clause text
  Span span;               // into the unit's sql_text
  std::size_t core = 0;    // compound member index
  std::size_t ordinal = 0; // 1-based position within its slot; 0 for whole-clause fragments
  bool from_order_by = false;  // Calculation taken from an ORDER BY term
};

// Fragments of one unit in clause execution order: FROM, WHERE, GROUP BY,
// HAVING, SELECT, ORDER BY expressions, then the Output clause.
std::vector<Fragment> extract_fragments(const SubqueryUnit& unit);

const Fragment* find_fragment(const std::vector<Fragment>& fragments, std::string_view id);

// Syntax of a unit not claimed by any fragment: compound operators, VALUES
// members, per-member DISTINCT of compounds, and a nested WITH clause.
struct Residual {
  std::optional<WithClause> with;
  std::vector<std::string> compound_ops;
  std::vector<bool> core_distinct;
  std::vector<std::vector<std::vector<Expr>>> core_values;
};

Residual residual_of(const SelectStmt& body);

// Rebuilds a unit body from fragment texts plus residual syntax. The
// ORDER BY expressions inside the Output fragment win over Calculation copies.
SelectStmt assemble_unit(const std::vector<Fragment>& fragments, const Residual& residual);

}  // namespace sqlknow::sql
