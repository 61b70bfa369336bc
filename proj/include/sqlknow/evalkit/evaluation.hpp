#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/extraction/offline.hpp"
#include "sqlknow/knowledge/store.hpp"
#include "sqlknow/lineage/database.hpp"

namespace sqlknow::evalkit {

// A fragment of one historical script, the unit of ground-truth knowledge.
struct ItemRef {
  std::string script_id;
  std::string fragment_id;

  std::string record_id() const { return knowledge::record_id(script_id, fragment_id); }
  friend bool operator==(const ItemRef&, const ItemRef&) = default;
};

struct EvalTask {
  std::string task_id;
  std::string database_id;
  std::string instruction;
  std::string ground_truth_sql;
  std::vector<ItemRef> ground_truth_items;
  std::vector<std::string> context_scripts;  // 1..kMaxContextScripts
};

void to_json(nlohmann::json& j, const ItemRef& r);
void from_json(const nlohmann::json& j, ItemRef& r);
void to_json(nlohmann::json& j, const EvalTask& t);
void from_json(const nlohmann::json& j, EvalTask& t);

// A JSON array or JSON-lines file of tasks. Throws NotFoundError, ValidationError.
std::vector<EvalTask> load_tasks(const std::filesystem::path& path);
void save_tasks(const std::vector<EvalTask>& tasks, const std::filesystem::path& path);

// Rows compared by the execution-accuracy predicate are fetched up to this cap.
inline constexpr std::size_t kCompareRows = 100000;

// Execution accuracy: both statements run and lineage::results_match holds.
// Symmetric in its arguments. Errors in either statement count as a mismatch.
bool execution_match(const lineage::Database& db, const std::string& sql_a, const std::string& sql_b);

// Percentage with two decimals; 0 when the denominator is 0.
double percent(std::size_t num, std::size_t den);
double round2(double v);
// Harmonic mean of two percentages, rounded to two decimals; 0 when both are 0.
double harmonic(double precision, double recall);

// ---------------------------------------------------------------- dataset

inline constexpr std::size_t kMaxContextScripts = 5;
inline constexpr std::size_t kTargetTaskLines = 30;
inline constexpr std::size_t kMaxTaskLines = 2 * kTargetTaskLines;

struct DatasetOptions {
  std::string database_id;
  std::size_t n_tasks = 0;
  int retries_per_task = 3;  // extra synthesis attempts budgeted per requested task
  std::uint64_t seed = 1;
};

struct Discarded {
  std::size_t attempt = 0;
  std::vector<std::string> context_scripts;
  std::string reason;
};

struct Dataset {
  std::vector<EvalTask> tasks;
  std::vector<Discarded> discarded;
};

// Prompt block for the synthesis call: per script its id, fragment list and SQL.
std::string context_block(const std::vector<const extraction::HistoricalScriptRecord*>& scripts);

// Reasons a candidate fails the constraints; empty when the task is admissible.
std::string check_task(const EvalTask& task, const lineage::Database& db,
                       const std::vector<extraction::HistoricalScriptRecord>& histories);

// Samples 1..5 context scripts per attempt and asks the LLM for a task until
// n_tasks survive the constraints. Throws BudgetExhaustedError.
Dataset build_dataset(const lineage::Database& db, const std::vector<extraction::HistoricalScriptRecord>& histories,
                      const knowledge::DataDictionary& dict, llm::Gateway& llm, const DatasetOptions& options);

// Review file for the manual cross-validation stage: one entry per task with
// "decision": "pending" to be set to accept, fix or reject.
nlohmann::json review_file(const std::vector<EvalTask>& tasks);

// Accepted and fixed tasks, in review order. Fixed tasks are re-checked.
// Throws ValidationError on a pending or unknown decision or a failing fix.
std::vector<EvalTask> apply_review(const nlohmann::json& review, const lineage::Database& db,
                                   const std::vector<extraction::HistoricalScriptRecord>& histories);

// ---------------------------------------------------------------- reconstruction

struct ReconstructionOutcome {
  std::string script_id;
  bool success = false;
  std::string reconstructed_sql;
  std::string error;
};

struct ReconstructionReport {
  std::string database_id;
  std::size_t history_count = 0;
  std::size_t success_count = 0;
  double success_ratio = 0;
  std::vector<ReconstructionOutcome> outcomes;
};

// Rebuilds each script from its description, fragment descriptions, schema
// and dictionary alone, then compares execution results with the original.
ReconstructionReport reconstruction_accuracy(const std::string& database_id, const lineage::Database& db,
                                             const std::vector<extraction::HistoricalScriptRecord>& histories,
                                             const knowledge::DataDictionary& dict, llm::Gateway& llm,
                                             std::size_t workers = 1);

// ---------------------------------------------------------------- retrieval

struct RetrievalTaskOutcome {
  std::string task_id;
  std::vector<std::string> truth;      // record ids
  std::vector<std::string> retrieved;  // Fragment-level record ids, rerank order
  std::size_t hits = 0;
  std::string error;
};

struct RetrievalRow {
  std::string database_id;
  std::size_t items = 0;
  std::size_t retrieved = 0;
  std::size_t hits = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct RetrievalReport {
  std::vector<RetrievalRow> rows;  // one per database, first-appearance order
  std::vector<RetrievalTaskOutcome> tasks;
};

// Micro-averaged per database over Fragment-level records only.
RetrievalReport retrieval_metrics(const std::vector<EvalTask>& tasks, const knowledge::KnowledgeStore& store,
                                  llm::Gateway& llm, std::size_t workers = 1);

// ---------------------------------------------------------------- ablation

enum class Mode { Direct, Rag, Refine, Pipeline };
const char* to_string(Mode m);
Mode parse_mode(std::string_view s);  // case-insensitive; throws ValidationError

inline constexpr int kMaxRefineSteps = 5;

struct RefineOutcome {
  bool success = false;
  int steps = 0;  // revision rounds issued, never above kMaxRefineSteps
  std::string sql;
  std::vector<std::string> instructions;
  std::string error;
};

// Each step: the LLM writes a modification instruction from the wrong and the
// correct SQL, then revises seeing only the wrong SQL and that instruction.
RefineOutcome refine_loop(const lineage::Database& db, const std::string& wrong_sql, const std::string& truth_sql,
                          llm::Gateway& llm, int max_steps = kMaxRefineSteps);

struct TaskOutcome {
  std::string task_id;
  bool attempted = true;  // false for Refine-mode tasks RAG already solved
  bool success = false;
  std::string initial_sql;
  std::string final_sql;
  int refine_steps = 0;
  std::string error;
};

struct AblationRow {
  std::string database_id;
  Mode mode = Mode::Direct;
  std::size_t tasks = 0;
  std::size_t success = 0;
  double success_ratio = 0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<TaskOutcome> outcomes;  // task order
};

struct AblationContext {
  const lineage::Database& db;
  const knowledge::DataDictionary& dictionary;
  const knowledge::KnowledgeStore* store = nullptr;  // required for every mode but Direct
  llm::Gateway& llm;
  std::size_t workers = 1;
};

// Direct: instruction, schema and dictionary only. Rag: with retrieval.
// Refine: refinement of the tasks Rag fails (only those count). Pipeline:
// Rag, then refinement of its failures.
AblationResult run_ablation(const std::vector<EvalTask>& tasks, Mode mode, const AblationContext& ctx);

// ---------------------------------------------------------------- reports

// Report JSON with the published table columns, metric identities checked,
// and the published reference rows alongside.
nlohmann::json reconstruction_report_json(const std::vector<ReconstructionReport>& reports);
nlohmann::json retrieval_report_json(const RetrievalReport& report);
nlohmann::json ablation_report_json(const std::vector<AblationResult>& results);

// Violations of F1 = harmonic(P, R) within 0.01 and ratio x tasks = success.
std::vector<std::string> check_identities(const nlohmann::json& report);

}  // namespace sqlknow::evalkit
