#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "sqlknow/sql/fragments.hpp"

namespace sqlknow::sql {

struct SpliceContext {
  RelationLookup lookup;                  // resolves tables and upstream CTE outputs
  std::vector<std::string> cte_names;     // all unit ids of the script
  std::set<std::string> downstream_columns;  // output column keys read by dependants
};

struct SpliceResult {
  SubqueryUnit unit;
  // Output columns renamed in place (old key -> new name), matched by position.
  std::map<std::string, std::string> renames;
};

// Replaces (or, with nullopt, deletes) one fragment. A replacement that starts
// with a clause keyword may rewrite other clauses: WHERE/HAVING text is added
// as conjuncts, other clauses replace their counterpart.
// Throws SpliceError when the result does not parse, references an unknown
// column, or drops a column read downstream.
SpliceResult splice_fragment(const SubqueryUnit& unit, const std::string& fragment_id,
                             const std::optional<std::string>& replacement, const SpliceContext& ctx = {});

}  // namespace sqlknow::sql
