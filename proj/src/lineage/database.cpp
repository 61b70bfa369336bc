#include "sqlknow/lineage/database.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sqlknow/errors.hpp"
#include "sqlknow/sql/parser.hpp"

namespace sqlknow::lineage {
namespace {

class Statement {
 public:
  Statement(sqlite3* db, const std::string& sql) {
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &stmt_, &tail) != SQLITE_OK) {
      error_ = sqlite3_errmsg(db);
      sqlite3_finalize(stmt_);
      stmt_ = nullptr;
    } else if (!stmt_) {
      error_ = "empty statement";
    } else if (tail && std::string_view(tail).find_first_not_of(" \t\r\n;") != std::string_view::npos) {
      error_ = "trailing text after statement";
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  sqlite3_stmt* get() const { return stmt_; }
  const std::string& error() const { return error_; }

 private:
  sqlite3_stmt* stmt_ = nullptr;
  std::string error_;
};

std::string type_of(const Value& v) {
  switch (v.index()) {
    case 1: return "INTEGER";
    case 2: return "REAL";
    case 3: return "TEXT";
    case 4: return "BLOB";
    default: return "";
  }
}

Value read_value(sqlite3_stmt* st, int i) {
  switch (sqlite3_column_type(st, i)) {
    case SQLITE_INTEGER:
      return static_cast<std::int64_t>(sqlite3_column_int64(st, i));
    case SQLITE_FLOAT:
      return sqlite3_column_double(st, i);
    case SQLITE_TEXT: {
      const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st, i));
      return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(st, i)));
    }
    case SQLITE_BLOB: {
      const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(st, i));
      const auto n = static_cast<std::size_t>(sqlite3_column_bytes(st, i));
      return Blob{std::vector<std::uint8_t>(p, p + n)};
    }
    default:
      return std::monostate{};
  }
}

// Total order used to sort rows for multiset comparison: NULL < numbers < text < blob.
int rank(const Value& v) {
  switch (v.index()) {
    case 0: return 0;
    case 1:
    case 2: return 1;
    case 3: return 2;
    default: return 3;
  }
}

int compare_numbers(const Value& a, const Value& b) {
  if (a.index() == 1 && b.index() == 1) {
    const auto x = std::get<std::int64_t>(a);
    const auto y = std::get<std::int64_t>(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  const double x = a.index() == 1 ? static_cast<double>(std::get<std::int64_t>(a)) : std::get<double>(a);
  const double y = b.index() == 1 ? static_cast<double>(std::get<std::int64_t>(b)) : std::get<double>(b);
  return x < y ? -1 : (x > y ? 1 : 0);
}

int compare_values(const Value& a, const Value& b) {
  const int ra = rank(a);
  const int rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0: return 0;
    case 1: return compare_numbers(a, b);
    case 2: return std::get<std::string>(a).compare(std::get<std::string>(b)) < 0
                       ? -1
                       : (std::get<std::string>(a) == std::get<std::string>(b) ? 0 : 1);
    default: {
      const auto& x = std::get<Blob>(a).bytes;
      const auto& y = std::get<Blob>(b).bytes;
      return x < y ? -1 : (x == y ? 0 : 1);
    }
  }
}

int compare_rows(const std::vector<Value>& a, const std::vector<Value>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (int c = compare_values(a[i], b[i])) return c;
  }
  return a.size() < b.size() ? -1 : (a.size() > b.size() ? 1 : 0);
}

}  // namespace

Database::Database(const std::string& path) : path_(path) {
  const int flags = SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX | SQLITE_OPEN_URI;
  if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "cannot open database";
    sqlite3_close(db_);
    db_ = nullptr;
    throw ExecutionError("", "cannot open " + path + ": " + msg);
  }
  sqlite3_exec(db_, "PRAGMA query_only = 1", nullptr, nullptr, nullptr);
  // Probe the schema so a non-database file fails here rather than later.
  Statement probe(db_, "SELECT name FROM sqlite_master LIMIT 1");
  if (!probe.error().empty()) {
    auto msg = probe.error();
    sqlite3_close(db_);
    db_ = nullptr;
    throw ExecutionError("", "cannot open " + path + ": " + msg);
  }
}

Database::~Database() { sqlite3_close(db_); }

Database::Database(Database&& other) noexcept : path_(std::move(other.path_)), db_(other.db_) { other.db_ = nullptr; }

Database& Database::operator=(Database&& other) noexcept {
  if (this != &other) {
    sqlite3_close(db_);
    path_ = std::move(other.path_);
    db_ = other.db_;
    other.db_ = nullptr;
  }
  return *this;
}

ResultTable Database::query(const std::string& sql, std::size_t max_rows) const {
  Statement st(db_, sql);
  if (!st.error().empty()) throw ExecutionError("", st.error());
  ResultTable out;
  const int ncols = sqlite3_column_count(st.get());
  for (int i = 0; i < ncols; ++i) {
    const char* decl = sqlite3_column_decltype(st.get(), i);
    out.columns.push_back({sqlite3_column_name(st.get(), i), decl ? decl : ""});
  }
  while (true) {
    const int rc = sqlite3_step(st.get());
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) throw ExecutionError("", sqlite3_errmsg(db_));
    ++out.total_row_count;
    if (out.rows.size() >= max_rows) continue;
    std::vector<Value> row;
    row.reserve(static_cast<std::size_t>(ncols));
    for (int i = 0; i < ncols; ++i) row.push_back(read_value(st.get(), i));
    out.rows.push_back(std::move(row));
  }
  out.truncated = static_cast<std::int64_t>(out.rows.size()) < out.total_row_count;
  for (std::size_t i = 0; i < out.columns.size(); ++i) {
    if (!out.columns[i].type.empty()) continue;
    for (const auto& row : out.rows) {
      if (row[i].index() != 0) {
        out.columns[i].type = type_of(row[i]);
        break;
      }
    }
  }
  return out;
}

std::size_t Database::column_count(const std::string& sql) const {
  Statement st(db_, sql);
  if (!st.error().empty()) throw ExecutionError("", st.error());
  return static_cast<std::size_t>(sqlite3_column_count(st.get()));
}

std::string Database::check(const std::string& sql) const {
  Statement st(db_, sql);
  return st.error();
}

sql::Catalog Database::catalog() const {
  sql::Catalog cat;
  auto tables = query(
      "SELECT name FROM sqlite_master WHERE type IN ('table', 'view') AND name NOT LIKE 'sqlite_%' ORDER BY name",
      kAllRows);
  for (const auto& row : tables.rows) {
    const auto& name = std::get<std::string>(row[0]);
    std::string quoted = "\"";
    for (char c : name) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    auto info = query("SELECT name, type FROM pragma_table_info(" + std::string("'") + name + "')", kAllRows);
    std::vector<sql::OutputColumn> cols;
    for (const auto& c : info.rows) {
      cols.push_back({std::get<std::string>(c[0]), c[1].index() == 3 ? std::get<std::string>(c[1]) : "", "", ""});
    }
    cat.add_table(name, std::move(cols));
  }
  return cat;
}

void create_database(const std::string& path, const std::string& seed_sql) {
  std::remove(path.c_str());
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "cannot create database";
    sqlite3_close(db);
    throw ExecutionError("", "cannot create " + path + ": " + msg);
  }
  char* err = nullptr;
  const std::string script = "BEGIN;\n" + seed_sql + "\nCOMMIT;";
  if (sqlite3_exec(db, script.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "seed failed";
    sqlite3_free(err);
    sqlite3_close(db);
    throw ExecutionError("", "seeding " + path + ": " + msg);
  }
  sqlite3_close(db);
}

bool same_results(const ResultTable& a, const ResultTable& b, bool ordered) {
  if (a.columns.size() != b.columns.size() || a.rows.size() != b.rows.size()) return false;
  if (ordered) {
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      if (compare_rows(a.rows[i], b.rows[i]) != 0) return false;
    }
    return true;
  }
  auto x = a.rows;
  auto y = b.rows;
  auto less = [](const auto& r, const auto& s) { return compare_rows(r, s) < 0; };
  std::sort(x.begin(), x.end(), less);
  std::sort(y.begin(), y.end(), less);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (compare_rows(x[i], y[i]) != 0) return false;
  }
  return true;
}

bool has_outer_order_by(const std::string& sql) {
  try {
    return !sql::parse_select(sql).order_by.empty();
  } catch (const SyntaxError&) {
    return false;
  }
}

bool results_match(const std::string& sql_a, const ResultTable& a, const std::string& sql_b, const ResultTable& b) {
  const bool ordered = has_outer_order_by(sql_a) || has_outer_order_by(sql_b);
  return same_results(a, b, ordered);
}

std::string display(const Value& v) {
  switch (v.index()) {
    case 0: return "NULL";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
      return buf;
    }
    case 3: return std::get<std::string>(v);
    default: return "<blob " + std::to_string(std::get<Blob>(v).bytes.size()) + " bytes>";
  }
}

void to_json(nlohmann::json& j, const Value& v) {
  switch (v.index()) {
    case 0: j = nullptr; break;
    case 1: j = std::get<std::int64_t>(v); break;
    case 2: j = std::get<double>(v); break;
    case 3: j = std::get<std::string>(v); break;
    default: {
      static const char* hex = "0123456789abcdef";
      std::string s = "x'";
      for (auto b : std::get<Blob>(v).bytes) {
        s += hex[b >> 4];
        s += hex[b & 15];
      }
      j = s + "'";
    }
  }
}

void to_json(nlohmann::json& j, const ResultTable& t) {
  auto cols = nlohmann::json::array();
  for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", c.type}});
  auto rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    auto row = nlohmann::json::array();
    for (const auto& v : r) row.push_back(v);
    rows.push_back(std::move(row));
  }
  j = {{"columns", cols}, {"rows", rows}, {"truncated", t.truncated}, {"total_row_count", t.total_row_count}};
}

void from_json(const nlohmann::json& j, ResultTable& t) {
  t = {};
  for (const auto& c : j.at("columns")) t.columns.push_back({c.at("name"), c.at("type")});
  for (const auto& r : j.at("rows")) {
    std::vector<Value> row;
    for (const auto& v : r) {
      if (v.is_null()) {
        row.emplace_back(std::monostate{});
      } else if (v.is_number_integer()) {
        row.emplace_back(v.get<std::int64_t>());
      } else if (v.is_number()) {
        row.emplace_back(v.get<double>());
      } else {
        row.emplace_back(v.get<std::string>());
      }
    }
    t.rows.push_back(std::move(row));
  }
  t.truncated = j.at("truncated");
  t.total_row_count = j.at("total_row_count");
}

}  // namespace sqlknow::lineage
