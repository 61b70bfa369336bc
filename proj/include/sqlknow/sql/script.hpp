#pragma once

#include <string>
#include <string_view>

#include "sqlknow/sql/ast.hpp"

namespace sqlknow::sql {

// A parsed script. `source_text` is the canonical pretty rendering of the
// input; all spans in `root` index into it, and
// render(parse(source_text)) == source_text.
struct ScriptAst {
  std::string source_text;
  std::string original_text;
  SelectStmt root;
};

// Parses one SELECT statement (an optional trailing ';' is accepted).
// SyntaxError offsets refer to `sql_text` as given.
ScriptAst parse_script(std::string_view sql_text);

// Re-renders `stmt` and parses it again, so the result carries spans into its own text.
ScriptAst normalize(const SelectStmt& stmt);

}  // namespace sqlknow::sql
