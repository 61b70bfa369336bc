#pragma once

#include <string>
#include <vector>

#include "sqlknow/sql/fragments.hpp"

namespace sqlknow::sql {

enum class Expectation { SampleValues, AtomicAndCompositeCounts, RowColCounts, DistinctValues, SampleRecords };

const char* to_string(Expectation e);
Expectation expectation_for(KnowledgeKind k);

inline constexpr int kSampleRows = 20;
inline constexpr int kDistinctValues = 50;

struct ProbeQuery {
  std::string fragment_id;
  std::string unit_id;
  KnowledgeKind kind = KnowledgeKind::Calculation;
  Expectation expects = Expectation::SampleValues;
  std::string sql_text;
  // RowColCounts only: a statement whose result arity is the relation's column count.
  std::string columns_sql;
};

// Builds the probe for `fragment` of `unit`. `deps` is the unit's transitive
// dependency closure in topological order; it becomes the WITH prefix.
ProbeQuery build_probe(const SubqueryUnit& unit, const Fragment& fragment,
                       const std::vector<const SubqueryUnit*>& deps);

}  // namespace sqlknow::sql
