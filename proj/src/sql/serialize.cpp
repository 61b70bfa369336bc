#include "sqlknow/sql/serialize.hpp"

namespace sqlknow::sql {

void to_json(nlohmann::json& j, const Span& s) { j = {{"begin", s.begin}, {"end", s.end}}; }

void to_json(nlohmann::json& j, const OutputColumn& c) { j = {{"name", c.name}, {"type", c.type}}; }

void to_json(nlohmann::json& j, const SubqueryUnit& u) {
  j = {{"id", u.id},
       {"name", u.name},
       {"index", u.index},
       {"sql_text", u.sql_text},
       {"script_span", u.script_span},
       {"referenced_tables", u.referenced_tables},
       {"referenced_ctes", u.referenced_ctes},
       {"output_columns", u.output_columns}};
}

void to_json(nlohmann::json& j, const Fragment& f) {
  j = {{"id", f.id},
       {"kind", to_string(f.kind)},
       {"clause", to_string(f.clause)},
       {"subquery_id", f.unit_id},
       {"sql_text", f.sql_text},
       {"span", f.span}};
}

nlohmann::json fragment_dump(const Decomposition& d) {
  auto units = nlohmann::json::array();
  auto fragments = nlohmann::json::array();
  for (const auto& u : d.units) {
    units.push_back(u);
    for (const auto& f : extract_fragments(u)) fragments.push_back(f);
  }
  return {{"sql", d.script.source_text}, {"units", units}, {"fragments", fragments}};
}

}  // namespace sqlknow::sql
