#include "sqlknow/lineage/execute.hpp"

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/render.hpp"

namespace sqlknow::lineage {
namespace {

std::int64_t as_int(const Value& v) {
  if (v.index() == 1) return std::get<std::int64_t>(v);
  if (v.index() == 2) return static_cast<std::int64_t>(std::get<double>(v));
  return 0;
}

}  // namespace

bool operator==(const FragmentMetadata& a, const FragmentMetadata& b) {
  if (a.fragment_id != b.fragment_id || a.unit_id != b.unit_id || a.kind != b.kind || a.expects != b.expects ||
      a.atomic_count != b.atomic_count || a.composite_count != b.composite_count || a.row_count != b.row_count ||
      a.col_count != b.col_count) {
    return false;
  }
  nlohmann::json x = a.table;
  nlohmann::json y = b.table;
  return x == y;
}

ResultTable execute_subquery(const Database& db, const DependencyGraph& graph, const std::string& id,
                             std::size_t max_rows) {
  const auto& unit = graph.unit(id);
  const auto stmt = sql::executable_statement(unit, graph.closure(id));
  try {
    return db.query(sql::render(stmt), max_rows);
  } catch (const ExecutionError& e) {
    throw ExecutionError(id, e.what());
  }
}

ResultTable execute_script(const Database& db, const std::string& sql_text, std::size_t max_rows) {
  return db.query(sql_text, max_rows);
}

sql::ProbeQuery build_probe(const DependencyGraph& graph, const std::string& unit_id, const sql::Fragment& fragment) {
  const auto& unit = graph.unit(unit_id);
  auto deps = graph.closure(unit_id);
  if (unit.self_referencing) deps.push_back(&unit);
  return sql::build_probe(unit, fragment, deps);
}

FragmentMetadata execute_probe(const Database& db, const sql::ProbeQuery& probe) {
  FragmentMetadata m;
  m.fragment_id = probe.fragment_id;
  m.unit_id = probe.unit_id;
  m.kind = probe.kind;
  m.expects = probe.expects;
  try {
    switch (probe.expects) {
      case sql::Expectation::AtomicAndCompositeCounts: {
        auto t = db.query(probe.sql_text, 1);
        m.atomic_count = as_int(t.rows.at(0).at(0));
        m.composite_count = as_int(t.rows.at(0).at(1));
        break;
      }
      case sql::Expectation::RowColCounts: {
        auto t = db.query(probe.sql_text, 1);
        m.row_count = as_int(t.rows.at(0).at(0));
        m.col_count = static_cast<std::int64_t>(db.column_count(probe.columns_sql));
        break;
      }
      case sql::Expectation::SampleRecords:
        m.table = db.query(probe.sql_text, static_cast<std::size_t>(sql::kSampleRows));
        break;
      case sql::Expectation::SampleValues:
      case sql::Expectation::DistinctValues:
        m.table = db.query(probe.sql_text, kAllRows);
        break;
    }
  } catch (const ExecutionError& e) {
    throw ExecutionError(probe.unit_id, e.what());
  }
  return m;
}

void to_json(nlohmann::json& j, const FragmentMetadata& m) {
  nlohmann::json payload;
  switch (m.expects) {
    case sql::Expectation::AtomicAndCompositeCounts:
      payload = {{"atomic_count", m.atomic_count}, {"composite_count", m.composite_count}};
      break;
    case sql::Expectation::RowColCounts:
      payload = {{"row_count", m.row_count}, {"col_count", m.col_count}};
      break;
    case sql::Expectation::SampleValues:
      payload = {{"sample_values", m.table}};
      break;
    case sql::Expectation::DistinctValues:
      payload = {{"distinct_values", m.table}};
      break;
    case sql::Expectation::SampleRecords:
      payload = {{"sample_records", m.table}};
      break;
  }
  j = {{"fragment_id", m.fragment_id},
       {"subquery_id", m.unit_id},
       {"kind", sql::to_string(m.kind)},
       {"expects", sql::to_string(m.expects)},
       {"payload", payload}};
}

}  // namespace sqlknow::lineage
