#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "sqlknow/lineage/database.hpp"
#include "sqlknow/sql/lexer.hpp"

namespace sqlknow::testing {

inline std::filesystem::path source_dir() { return SQLKNOW_SOURCE_DIR; }
inline std::filesystem::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Scratch directory unique to this process, removed at exit.
class ScratchDir {
 public:
  ScratchDir() {
    path_ = std::filesystem::temp_directory_path() / ("sqlknow-test-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const ScratchDir& scratch() {
  static ScratchDir dir;
  return dir;
}

// The toxicology-style fixture database, materialized once per process.
inline const std::string& toxicology_db() {
  static const std::string path = [] {
    auto p = (scratch().path() / "toxicology.db").string();
    lineage::create_database(p, read_file(fixtures_dir() / "toxicology.sql"));
    return p;
  }();
  return path;
}

struct CorpusQuery {
  std::string name;
  std::string sql;
};

inline void PrintTo(const CorpusQuery& q, std::ostream* os) { *os << q.name; }

inline std::vector<CorpusQuery> corpus() {
  std::vector<CorpusQuery> out;
  for (const auto& e : std::filesystem::directory_iterator(source_dir() / "tests" / "corpus")) {
    if (e.path().extension() != ".sql") continue;
    out.push_back({e.path().stem().string(), read_file(e.path())});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

// Byte offset where the main query of `original` begins: the first SELECT (or
// VALUES) token at parenthesis depth 0 after any leading WITH clause. Token-level
// only, independent of the decomposition code.
inline std::size_t main_query_offset(const std::string& original) {
  const auto toks = sql::tokenize(original);
  int depth = 0;
  for (const auto& t : toks) {
    if (t.is_op("(")) ++depth;
    if (t.is_op(")")) --depth;
    if (depth == 0 && (t.is_word("SELECT") || t.is_word("VALUES"))) return t.span.begin;
  }
  return 0;
}

// The original script with its main query replaced by `SELECT * FROM <name>`.
inline std::string restrict_script_to(const std::string& original, const std::string& quoted_name) {
  return original.substr(0, main_query_offset(original)) + "SELECT * FROM " + quoted_name;
}

}  // namespace sqlknow::testing
