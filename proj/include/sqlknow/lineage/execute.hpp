#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/lineage/database.hpp"
#include "sqlknow/lineage/graph.hpp"
#include "sqlknow/sql/probe.hpp"

namespace sqlknow::lineage {

// Payload fields are populated according to `expects`:
//   SampleValues / DistinctValues / SampleRecords -> table
//   AtomicAndCompositeCounts -> atomic_count, composite_count
//   RowColCounts -> row_count, col_count
struct FragmentMetadata {
  std::string fragment_id;
  std::string unit_id;
  sql::KnowledgeKind kind = sql::KnowledgeKind::Calculation;
  sql::Expectation expects = sql::Expectation::SampleValues;
  ResultTable table;
  std::int64_t atomic_count = 0;
  std::int64_t composite_count = 0;
  std::int64_t row_count = 0;
  std::int64_t col_count = 0;

  friend bool operator==(const FragmentMetadata& a, const FragmentMetadata& b);
};

// Runs `id` with its transitive dependency closure as a WITH prefix.
// Engine failures surface as ExecutionError tagged with `id`.
ResultTable execute_subquery(const Database& db, const DependencyGraph& graph, const std::string& id,
                             std::size_t max_rows = kDisplayRows);

// The original script's main query, executed verbatim; the oracle for execute_subquery.
ResultTable execute_script(const Database& db, const std::string& sql_text, std::size_t max_rows = kAllRows);

// Probe for `fragment` of unit `unit_id`, closing over the unit's dependencies in `graph`.
sql::ProbeQuery build_probe(const DependencyGraph& graph, const std::string& unit_id, const sql::Fragment& fragment);

FragmentMetadata execute_probe(const Database& db, const sql::ProbeQuery& probe);

void to_json(nlohmann::json& j, const FragmentMetadata& m);

}  // namespace sqlknow::lineage
