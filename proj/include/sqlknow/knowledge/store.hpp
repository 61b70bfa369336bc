#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlknow/llm/gateway.hpp"
#include "sqlknow/sql/fragments.hpp"

namespace sqlknow::knowledge {

enum class Level { Script, Fragment };
const char* to_string(Level l);
Level parse_level(std::string_view s);

// The fragment a Fragment-level record was extracted from.
struct FragmentRef {
  std::string id;           // fragment id within its script, e.g. "main/where.1"
  std::string subquery_id;
  sql::Clause clause = sql::Clause::Select;
  std::string sql_text;
  sql::Span span;           // into the unit's sql_text
  friend bool operator==(const FragmentRef&, const FragmentRef&) = default;
};

FragmentRef fragment_ref(const sql::Fragment& f);

struct KnowledgeRecord {
  std::string id;                // "<script>" or "<script>#<fragment id>"
  Level level = Level::Script;
  std::string source_script_id;
  std::optional<FragmentRef> fragment;
  std::optional<sql::KnowledgeKind> kind;
  std::string description;
  std::string sql_text;          // Script level: the historical script; empty otherwise
  std::string template_version;  // "<template>@<version>" that produced the description
  llm::Vector embedding;
};

std::string record_id(const std::string& script_id, const std::string& fragment_id = {});

void to_json(nlohmann::json& j, const KnowledgeRecord& r);
void from_json(const nlohmann::json& j, KnowledgeRecord& r);

struct Scored {
  KnowledgeRecord record;
  double score = 0;
};

inline constexpr std::size_t kScriptTopK = 5;
inline constexpr std::size_t kFragmentTopK = 8;

// Records ordered by id. Reads run concurrently; writes are serialized and
// each write replaces the snapshot atomically.
class KnowledgeStore {
 public:
  KnowledgeStore() = default;
  KnowledgeStore(const KnowledgeStore& other);
  KnowledgeStore& operator=(const KnowledgeStore& other);

  // Embeds descriptions (once per distinct text, reusing unchanged embeddings)
  // and upserts by id. Throws EmbeddingError on a dimension mismatch or a
  // record that breaks the level/fragment invariant (ValidationError).
  void index(std::vector<KnowledgeRecord> records, llm::Gateway& llm);

  // Upserts records that already carry embeddings.
  void insert(std::vector<KnowledgeRecord> records);

  std::vector<KnowledgeRecord> records() const;
  std::vector<KnowledgeRecord> records(Level level) const;
  std::optional<KnowledgeRecord> find(const std::string& id) const;
  std::size_t size() const;
  std::size_t size(Level level) const;
  std::size_t dimension() const;  // 0 when empty

  // Top-k by cosine, descending, ties by id. Throws EmptyStoreError, ValidationError (k < 1).
  std::vector<Scored> similar(const std::string& query_text, Level level, std::size_t k, llm::Gateway& llm) const;
  std::vector<Scored> similar(const llm::Vector& query, Level level, std::size_t k) const;

  // JSON lines, one record per line, sorted by id; written via a temp file and rename.
  void save(const std::filesystem::path& path) const;
  static KnowledgeStore load(const std::filesystem::path& path);

 private:
  void upsert_locked(std::vector<KnowledgeRecord> records);

  mutable std::shared_mutex mu_;
  std::vector<KnowledgeRecord> records_;
};

}  // namespace sqlknow::knowledge
