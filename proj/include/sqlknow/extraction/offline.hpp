#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/knowledge/dictionary.hpp"
#include "sqlknow/knowledge/store.hpp"

namespace sqlknow::extraction {

struct HistoricalScript {
  std::string id;
  std::string sql_text;
};

// A directory of *.sql files (id = file stem, sorted), a single .sql file, or a
// JSON array / JSON-lines file of {"id", "sql"} objects.
std::vector<HistoricalScript> load_scripts(const std::filesystem::path& path);

struct HistoricalScriptRecord {
  std::string script_id;
  std::string sql_text;
  std::string script_description;
  std::vector<knowledge::KnowledgeRecord> fragment_records;
};

// Base tables read anywhere in the script's units.
std::vector<std::string> referenced_tables(const std::vector<sql::SubqueryUnit>& units);

std::string describe_script(const std::string& sql_text, const knowledge::DataDictionary& dict, llm::Gateway& llm);

std::string describe_fragment(const sql::Fragment& fragment, const sql::SubqueryUnit& parent,
                              const knowledge::DataDictionary& dict, llm::Gateway& llm,
                              const std::vector<std::string>& tables = {});

struct ScriptOutcome {
  std::string script_id;
  bool indexed = false;
  std::size_t fragment_count = 0;
  int llm_retries = 0;
  std::string error;  // reason the script was skipped
};

struct OfflineReport {
  std::vector<ScriptOutcome> scripts;  // input order
  std::size_t script_records = 0;
  std::size_t fragment_records = 0;

  std::vector<const ScriptOutcome*> skipped() const;
};

void to_json(nlohmann::json& j, const OfflineReport& r);

struct OfflineOptions {
  int retries = 2;                                  // extra attempts per LLM call
  std::chrono::milliseconds backoff{200};           // doubled after each failed attempt
  std::size_t workers = 1;
};

struct OfflineResult {
  knowledge::KnowledgeStore store;
  OfflineReport report;
  std::vector<HistoricalScriptRecord> histories;  // indexed scripts, input order
};

// parse, decompose, extract fragments, describe, embed, index. Per-script
// failures are reported, never thrown. The catalog (when given) resolves columns.
OfflineResult run_offline(const std::vector<HistoricalScript>& scripts, const knowledge::DataDictionary& dict,
                          llm::Gateway& llm, const sql::Catalog* catalog = nullptr, const OfflineOptions& options = {});

// Rebuilds history records (script descriptions and fragment records) from a store.
std::vector<HistoricalScriptRecord> histories_from_store(const knowledge::KnowledgeStore& store,
                                                         const std::vector<HistoricalScript>& scripts);

}  // namespace sqlknow::extraction
