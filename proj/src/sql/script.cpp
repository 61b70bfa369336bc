#include "sqlknow/sql/script.hpp"

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/parser.hpp"
#include "sqlknow/sql/render.hpp"

namespace sqlknow::sql {

ScriptAst parse_script(std::string_view sql_text) {
  if (sql_text.find_first_not_of(" \t\r\n;") == std::string_view::npos) {
    throw SyntaxError(0, "SELECT", "empty SQL text");
  }
  auto first = parse_select(sql_text);
  auto script = normalize(first);
  script.original_text = std::string(sql_text);
  return script;
}

ScriptAst normalize(const SelectStmt& stmt) {
  ScriptAst out;
  out.source_text = render(stmt);
  out.original_text = out.source_text;
  out.root = parse_select(out.source_text);
  return out;
}

}  // namespace sqlknow::sql
