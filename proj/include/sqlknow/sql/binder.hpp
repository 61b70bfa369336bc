#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sqlknow/sql/ast.hpp"

namespace sqlknow::sql {

struct OutputColumn {
  std::string name;
  std::string type;           // declared or inferred SQLite type; empty when unknown
  std::string origin_table;   // base table key when the column is a plain pass-through
  std::string origin_column;
};

// Base-table schema, keyed case-insensitively.
class Catalog {
 public:
  void add_table(const std::string& name, std::vector<OutputColumn> columns);
  const std::vector<OutputColumn>* find(std::string_view name) const;
  std::vector<std::string> table_names() const;  // as declared, sorted by key
  std::size_t column_count() const;
  bool empty() const noexcept { return tables_.empty(); }

 private:
  std::map<std::string, std::pair<std::string, std::vector<OutputColumn>>> tables_;
};

// Resolves a relation name key (CTE or base table) to its columns; nullopt when unknown.
using RelationLookup = std::function<std::optional<std::vector<OutputColumn>>(const std::string& key)>;

RelationLookup catalog_lookup(const Catalog* catalog);

struct SourceBinding {
  std::string alias_key;      // alias, or the table key when unaliased
  std::string relation_key;   // table/CTE key; empty for derived tables and table functions
  bool known = false;         // columns are known
  std::vector<OutputColumn> columns;
};

std::vector<SourceBinding> bind_sources(const SelectCore& core, const RelationLookup& lookup);

// Output columns of a statement. Nested WITH clauses and derived tables are
// resolved recursively; `*` expands only over known sources.
std::vector<OutputColumn> infer_output_columns(const SelectStmt& stmt, const RelationLookup& lookup);

// Column references of the statement's top-level cores that resolve to no
// known source and no result alias. References into unknown sources are skipped.
std::vector<std::string> unresolved_columns(const SelectStmt& stmt, const RelationLookup& lookup);

// Keys of `producer` output columns referenced anywhere inside `consumer`.
std::set<std::string> referenced_columns(const SelectStmt& consumer, const std::string& producer_key,
                                         const std::vector<OutputColumn>& producer_columns,
                                         const RelationLookup& lookup);

// Renames references to `producer` columns in `consumer` (keys in `renames`
// map old key -> new name). Returns true when anything changed.
bool rename_column_references(SelectStmt& consumer, const std::string& producer_key,
                              const std::vector<OutputColumn>& producer_columns,
                              const std::map<std::string, std::string>& renames, const RelationLookup& lookup);

// Result alias substitution: bare column references naming a result alias of
// `core` are replaced by the aliased expression.
Expr substitute_aliases(const Expr& e, const SelectCore& core);

// The display name SQLite would give an unaliased result column.
std::string result_column_name(const ResultColumn& rc);

}  // namespace sqlknow::sql
