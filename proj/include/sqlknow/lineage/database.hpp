#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sqlknow/sql/binder.hpp"

struct sqlite3;

namespace sqlknow::lineage {

struct Blob {
  std::vector<std::uint8_t> bytes;
  friend bool operator==(const Blob&, const Blob&) = default;
};

using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

struct ResultColumn {
  std::string name;
  std::string type;
};

struct ResultTable {
  std::vector<ResultColumn> columns;
  std::vector<std::vector<Value>> rows;
  bool truncated = false;
  std::int64_t total_row_count = 0;
};

inline constexpr std::size_t kDisplayRows = 200;
inline constexpr std::size_t kAllRows = std::numeric_limits<std::size_t>::max();

// A read-only SQLite connection. Not shareable across threads; open one per worker.
class Database {
 public:
  explicit Database(const std::string& path);
  ~Database();
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  Database(Database&& other) noexcept;
  Database& operator=(Database&& other) noexcept;

  const std::string& path() const noexcept { return path_; }

  // Runs one statement, keeping at most `max_rows` rows but counting all of them.
  // Throws ExecutionError with the engine message.
  ResultTable query(const std::string& sql, std::size_t max_rows = kDisplayRows) const;

  // Result arity of `sql` without stepping it.
  std::size_t column_count(const std::string& sql) const;

  // Prepares `sql`; returns the engine error message, or empty when valid.
  std::string check(const std::string& sql) const;

  sql::Catalog catalog() const;

 private:
  std::string path_;
  sqlite3* db_ = nullptr;
};

// Creates (replacing any existing file) a database populated by `seed_sql`.
// The only write path in the engine; used to materialize fixtures.
void create_database(const std::string& path, const std::string& seed_sql);

// Compares two results as ordered lists when `ordered`, else as multisets.
// Integer and real values compare numerically; column names are ignored.
bool same_results(const ResultTable& a, const ResultTable& b, bool ordered);

// True when the outermost query of `sql` has an ORDER BY clause.
bool has_outer_order_by(const std::string& sql);

// Execution-accuracy predicate: ordered comparison if either side orders its output.
bool results_match(const std::string& sql_a, const ResultTable& a, const std::string& sql_b, const ResultTable& b);

std::string display(const Value& v);

void to_json(nlohmann::json& j, const Value& v);
void to_json(nlohmann::json& j, const ResultTable& t);
void from_json(const nlohmann::json& j, ResultTable& t);

}  // namespace sqlknow::lineage
