#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlknow/lineage/database.hpp"
#include "sqlknow/llm/gateway.hpp"

namespace sqlknow::knowledge {

inline constexpr std::size_t kMaxSamples = 10;

struct ColumnDescription {
  std::string table;
  std::string column;
  std::string description;
  std::vector<lineage::Value> sample_values;  // at most kMaxSamples, ascending
  std::vector<std::string> aliases;
  bool user_edited = false;
};

// (table, column) keys are compared case-insensitively.
class DataDictionary {
 public:
  std::vector<ColumnDescription> columns;
  std::string schema_fingerprint;

  ColumnDescription* find(const std::string& table, const std::string& column);
  const ColumnDescription* find(const std::string& table, const std::string& column) const;

  // A user edit; marks the column user_edited. Throws NotFoundError.
  void set_description(const std::string& table, const std::string& column, std::string description);

  // Every column has a non-empty description.
  bool finalized() const;

  void save(const std::filesystem::path& path) const;
  static DataDictionary load(const std::filesystem::path& path);
};

void to_json(nlohmann::json& j, const ColumnDescription& c);
void from_json(const nlohmann::json& j, ColumnDescription& c);
void to_json(nlohmann::json& j, const DataDictionary& d);
void from_json(const nlohmann::json& j, DataDictionary& d);

lineage::Value value_from_json(const nlohmann::json& j);

// Hash over table names, column names, and declared types.
std::string schema_fingerprint(const sql::Catalog& catalog);

// Keys are (table key, column key), both lowercase.
using AliasMap = std::map<std::pair<std::string, std::string>, std::vector<std::string>>;

struct SkippedScript {
  std::size_t index = 0;
  std::string reason;
};

struct AliasMining {
  AliasMap aliases;  // most frequent first, ties by first appearance
  std::vector<SkippedScript> skipped;
};

// Collects `expr AS alias` bindings where expr is a column reference, resolved
// through table aliases and pass-through CTE columns to a base table column.
// Without a catalog only references whose table is evident are resolved.
AliasMining mine_aliases(const std::vector<std::string>& scripts, const sql::Catalog* catalog = nullptr);

struct ColumnFailure {
  std::string table;
  std::string column;
  std::string message;
  std::string transcript_id;
};

struct SuggestResult {
  DataDictionary dictionary;           // covers every column; failed ones have an empty description
  std::vector<ColumnFailure> failures;
};

// One describe_column call per column, with type, distinct samples and mined aliases.
SuggestResult suggest_descriptions(const lineage::Database& db, const AliasMap& aliases, llm::Gateway& llm);

// Variables for prompts about one column: table, column, type, samples, aliases.
llm::Variables column_variables(const ColumnDescription& c, const std::string& type);

// Completes a user's partial description; the result always begins with `partial`.
// Throws ValidationError on empty partial text, LlmError from the gateway.
std::string complete_description(const std::string& partial, const ColumnDescription& column,
                                 const std::string& type, llm::Gateway& llm);

// Dictionary rows for the given tables (all tables when empty), one per line:
// "table.column: description (aliases: a, b; values: x, y)".
std::string dictionary_context(const DataDictionary& dict, const std::vector<std::string>& tables = {});

// Schema listing, one table per line: "table(col TYPE, ...)".
std::string schema_context(const sql::Catalog& catalog);

}  // namespace sqlknow::knowledge
