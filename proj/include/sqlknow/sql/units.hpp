#pragma once

#include <string>
#include <vector>

#include "sqlknow/sql/binder.hpp"
#include "sqlknow/sql/script.hpp"

namespace sqlknow::sql {

inline constexpr const char* kMainUnit = "main";

// One top-level CTE or the main query. `ast` is parsed from `sql_text`, so
// spans inside it (and fragment spans) index into `sql_text`.
struct SubqueryUnit {
  std::string id;                   // lowercase name key; "main" for the main query
  std::string name;                 // unquoted name as written
  std::size_t index = 0;            // definition order
  std::string sql_text;             // standalone pretty rendering of the body
  SelectStmt ast;
  Span script_span;                 // body range in the decomposed script's source_text
  std::vector<std::string> cte_columns;  // explicit CTE column list, if any
  std::string materialized;
  bool recursive = false;           // defined under WITH RECURSIVE
  bool self_referencing = false;    // body reads its own name (recursive CTE)
  std::vector<std::string> referenced_tables;  // base-table keys, first-appearance order
  std::vector<std::string> referenced_ctes;    // unit ids, first-appearance order
  std::vector<OutputColumn> output_columns;

  bool is_main() const { return id == kMainUnit; }
};

struct Decomposition {
  ScriptAst script;                 // after hoisting derived tables
  std::vector<SubqueryUnit> units;  // definition order, main last
};

// Splits a script into units. Derived tables in FROM are hoisted into
// synthetic CTEs named __sub_N. Throws DuplicateNameError.
Decomposition decompose_script(const ScriptAst& script, const Catalog* catalog = nullptr);
std::vector<SubqueryUnit> decompose(const ScriptAst& script, const Catalog* catalog = nullptr);

// Builds a unit from a body statement (re-rendered and re-parsed).
SubqueryUnit make_unit(std::string name, const SelectStmt& body, const std::vector<std::string>& cte_names);

// Recomputes references and output columns of `unit` after its AST changed.
void refresh_unit(SubqueryUnit& unit, const std::vector<std::string>& cte_names, const RelationLookup& lookup);

// Lookup over catalog tables plus the outputs of `units`.
RelationLookup units_lookup(const std::vector<SubqueryUnit>& units, const Catalog* catalog);

// Reassembles a whole script from units (CTEs in order, main last).
ScriptAst compose_script(const std::vector<SubqueryUnit>& units);

// `body` with the definitions of `deps` prepended to its WITH clause.
SelectStmt with_dependencies(const SelectStmt& body, const std::vector<const SubqueryUnit*>& deps);

Cte unit_cte(const SubqueryUnit& unit);

// A runnable statement yielding the rows of `unit`, with `deps` (its upstream
// closure in topological order) as the WITH prefix. Self-referencing units are
// run as `SELECT * FROM <name>` over their own definition.
SelectStmt executable_statement(const SubqueryUnit& unit, const std::vector<const SubqueryUnit*>& deps);

}  // namespace sqlknow::sql
