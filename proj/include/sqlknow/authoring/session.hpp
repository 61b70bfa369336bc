#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/authoring/query.hpp"
#include "sqlknow/lineage/execute.hpp"
#include "sqlknow/lineage/worker_pool.hpp"

namespace sqlknow::authoring {

enum class EditMode { Modify, Add, Delete };
enum class EditTarget { Subquery, Item, WholeQuery };

const char* to_string(EditMode m);
const char* to_string(EditTarget t);
EditMode parse_edit_mode(std::string_view s);    // case-insensitive; throws ValidationError
EditTarget parse_edit_target(std::string_view s);

struct RefinementEdit {
  EditMode mode = EditMode::Modify;
  EditTarget target = EditTarget::Item;
  std::string target_id;  // item id or subquery id; empty for WholeQuery
  std::optional<std::string> instruction;

  // Delete requires an Item target; Modify and Add require a non-empty instruction.
  void validate() const;
};

// {"mode", "target": {"type", "id"}, "instruction"}
void to_json(nlohmann::json& j, const RefinementEdit& e);
void from_json(const nlohmann::json& j, RefinementEdit& e);

// Everything a session reads but does not own. The dictionary may be edited
// while sessions run; each call takes a copy.
class Workspace {
 public:
  Workspace(std::string database_id, std::string db_path, knowledge::DataDictionary dictionary,
            std::shared_ptr<const knowledge::KnowledgeStore> store, std::shared_ptr<llm::Gateway> llm);

  const std::string& database_id() const { return database_id_; }
  const std::string& db_path() const { return db_path_; }
  const sql::Catalog& catalog() const { return catalog_; }
  llm::Gateway& llm() const { return *llm_; }
  const knowledge::KnowledgeStore& store() const { return *store_; }

  knowledge::DataDictionary dictionary() const;
  void set_dictionary(knowledge::DataDictionary d);

 private:
  std::string database_id_;
  std::string db_path_;
  sql::Catalog catalog_;
  std::shared_ptr<const knowledge::KnowledgeStore> store_;
  std::shared_ptr<llm::Gateway> llm_;
  mutable std::mutex mu_;
  knowledge::DataDictionary dictionary_;
};

struct HistoryEntry {
  std::optional<std::string> instruction;  // set for generate
  std::optional<RefinementEdit> edit;      // set for refine
  std::shared_ptr<const GeneratedQuery> query;
};

// Applies one refinement to `current`, returning the next query (generation
// not yet assigned). Nothing is mutated on failure.
GeneratedQuery apply_refinement(const GeneratedQuery& current, const RefinementEdit& edit, const Workspace& ws);

// Edits are serialized; reads see immutable generation snapshots.
class Session {
 public:
  Session(std::string session_id, std::shared_ptr<Workspace> workspace);

  const std::string& id() const { return id_; }
  const std::string& database_id() const { return ws_->database_id(); }
  Workspace& workspace() const { return *ws_; }

  std::shared_ptr<const GeneratedQuery> generate(const std::string& instruction);
  std::shared_ptr<const GeneratedQuery> refine(const RefinementEdit& edit);

  std::shared_ptr<const GeneratedQuery> current() const;  // null before the first generate
  long long generation() const;                          // 0 before the first generate
  std::shared_ptr<const RetrievalBundle> last_bundle() const;

  // Probe results cached per (generation, fragment). A generation other than
  // the current one is rejected with StaleGenerationError.
  lineage::FragmentMetadata resolve_item_metadata(const std::string& item_id,
                                                  std::optional<long long> generation = std::nullopt) const;
  lineage::ResultTable subquery_result(const std::string& subquery_id,
                                       std::optional<long long> generation = std::nullopt) const;

  // Resolves every item of the current generation on `pool`; failures stay in the futures.
  std::vector<std::future<lineage::FragmentMetadata>> schedule_probes(lineage::WorkerPool& pool) const;

  std::vector<HistoryEntry> history() const;

  // {session_id, database_id, instructions, generations:[{generation, instruction|edit, sql_text, items, removed, diffs, warnings}]}
  nlohmann::json snapshot() const;
  static std::unique_ptr<Session> restore(const nlohmann::json& snapshot, std::shared_ptr<Workspace> workspace);
  void save(const std::filesystem::path& path) const;

 private:
  std::shared_ptr<const GeneratedQuery> commit(GeneratedQuery q, HistoryEntry entry);
  std::shared_ptr<const GeneratedQuery> checked(std::optional<long long> generation) const;

  std::string id_;
  std::shared_ptr<Workspace> ws_;
  std::mutex edit_mu_;
  mutable std::mutex state_mu_;
  std::vector<HistoryEntry> history_;
  std::shared_ptr<const GeneratedQuery> current_;
  std::shared_ptr<const RetrievalBundle> bundle_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::pair<long long, std::string>, lineage::FragmentMetadata> cache_;
};

}  // namespace sqlknow::authoring
