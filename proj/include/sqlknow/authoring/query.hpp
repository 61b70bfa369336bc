#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/authoring/retrieve.hpp"
#include "sqlknow/knowledge/dictionary.hpp"
#include "sqlknow/lineage/database.hpp"
#include "sqlknow/lineage/graph.hpp"
#include "sqlknow/sql/fragments.hpp"

namespace sqlknow::authoring {

enum class ItemStatus { Unchanged, Added, Removed };
const char* to_string(ItemStatus s);

struct KnowledgeItem {
  std::string id;  // equals fragment_id
  std::string subquery_id;
  std::string subquery_name;
  sql::KnowledgeKind kind = sql::KnowledgeKind::Calculation;
  sql::Clause clause = sql::Clause::Select;
  std::string title;
  std::string description;
  std::string fragment_id;
  std::string sql_text;
  sql::Span span;  // into the unit's sql_text
  ItemStatus status = ItemStatus::Unchanged;
  std::string reused_from;  // knowledge record id whose description was reused
};

void to_json(nlohmann::json& j, const KnowledgeItem& i);
void from_json(const nlohmann::json& j, KnowledgeItem& i);

// A parsed, decomposed and graphed script. Fragments are listed unit by unit
// in topological order, each unit's fragments in clause execution order.
struct Analysis {
  sql::ScriptAst script;
  lineage::DependencyGraph graph;
  std::vector<sql::Fragment> fragments;
};

// Throws SyntaxError, DuplicateNameError, UnresolvedDependencyError, CycleError.
Analysis analyze(const std::string& sql_text, const sql::Catalog* catalog);

struct GeneratedQuery {
  long long generation = 0;
  std::string sql_text;  // canonical rendering; parses
  sql::ScriptAst script;
  lineage::DependencyGraph graph;
  std::vector<sql::Fragment> fragments;
  std::vector<KnowledgeItem> items;    // one per fragment, same order
  std::vector<KnowledgeItem> removed;  // items of the previous generation that did not survive
  std::vector<std::string> warnings;

  const std::vector<sql::SubqueryUnit>& units() const { return graph.units(); }
  const KnowledgeItem* find_item(const std::string& id) const;
  const sql::Fragment* find_fragment(const std::string& id) const;
};

// The summary shape served over HTTP and stored in snapshots (no metadata).
nlohmann::json summary_json(const GeneratedQuery& q);
nlohmann::json graph_json(const lineage::DependencyGraph& g);

// At most five words of the description, trailing punctuation removed; the
// kind name when the description has no words.
std::string make_title(const std::string& description, sql::KnowledgeKind kind);

// Whitespace runs collapsed to one space, trimmed.
std::string normalize_space(const std::string& text);

struct GenerateContext {
  const knowledge::DataDictionary& dictionary;
  const sql::Catalog* catalog = nullptr;
  const lineage::Database* db = nullptr;  // when set, statements are also prepared against it
  llm::Gateway& llm;
};

inline constexpr int kRepairAttempts = 2;

// Asks the LLM for SQL, re-prompting with the error up to kRepairAttempts
// times. Throws GenerationParseError carrying the last raw reply.
Analysis generate_sql(const std::string& instruction, const RetrievalBundle& bundle, const GenerateContext& ctx,
                      std::string* raw_reply = nullptr);

// Items for every fragment: descriptions reused from retrieved fragment
// knowledge with the same kind and text, otherwise freshly described.
std::vector<KnowledgeItem> describe_items(const Analysis& a, const std::vector<knowledge::KnowledgeRecord>& knowledge,
                                          const GenerateContext& ctx);

GeneratedQuery generate(const std::string& instruction, const RetrievalBundle& bundle, const GenerateContext& ctx);

struct KnowledgeGroup {
  std::string subquery_id;
  std::string subquery_name;
  std::vector<KnowledgeItem> items;
};

struct KnowledgeViewModel {
  long long generation = 0;
  std::vector<KnowledgeGroup> groups;  // topological order
};

KnowledgeViewModel build_knowledge_view(const GeneratedQuery& q);
void to_json(nlohmann::json& j, const KnowledgeViewModel& v);

}  // namespace sqlknow::authoring
