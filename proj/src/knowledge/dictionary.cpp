#include "sqlknow/knowledge/dictionary.hpp"

#include <fstream>

#include "sqlknow/errors.hpp"

namespace sqlknow::knowledge {

using nlohmann::json;

namespace {

bool same_key(const std::string& a, const std::string& b) { return sql::ident_key(a) == sql::ident_key(b); }

std::string quoted(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string joined(const std::vector<std::string>& parts, const char* sep = ", ") {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
  return out;
}

std::string samples_text(const std::vector<lineage::Value>& values) {
  std::vector<std::string> parts;
  for (const auto& v : values) parts.push_back(lineage::display(v));
  return parts.empty() ? "(none)" : joined(parts);
}

}  // namespace

ColumnDescription* DataDictionary::find(const std::string& table, const std::string& column) {
  for (auto& c : columns) {
    if (same_key(c.table, table) && same_key(c.column, column)) return &c;
  }
  return nullptr;
}

const ColumnDescription* DataDictionary::find(const std::string& table, const std::string& column) const {
  return const_cast<DataDictionary*>(this)->find(table, column);
}

void DataDictionary::set_description(const std::string& table, const std::string& column, std::string description) {
  auto* c = find(table, column);
  if (!c) throw NotFoundError("unknown column: " + table + "." + column);
  c->description = std::move(description);
  c->user_edited = true;
}

bool DataDictionary::finalized() const {
  return std::all_of(columns.begin(), columns.end(), [](const auto& c) { return !c.description.empty(); });
}

void DataDictionary::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << json(*this).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

DataDictionary DataDictionary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read dictionary: " + path.string());
  try {
    return json::parse(in).get<DataDictionary>();
  } catch (const json::exception& e) {
    throw ValidationError("dictionary " + path.string() + ": " + e.what());
  }
}

lineage::Value value_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return std::int64_t{j.get<bool>() ? 1 : 0};
  return j.dump();
}

void to_json(json& j, const ColumnDescription& c) {
  json samples = json::array();
  for (const auto& v : c.sample_values) samples.push_back(v);
  j = json{{"table", c.table},
           {"column", c.column},
           {"description", c.description},
           {"sample_values", samples},
           {"aliases", c.aliases},
           {"user_edited", c.user_edited}};
}

void from_json(const json& j, ColumnDescription& c) {
  c.table = j.at("table").get<std::string>();
  c.column = j.at("column").get<std::string>();
  c.description = j.value("description", "");
  c.sample_values.clear();
  for (const auto& v : j.value("sample_values", json::array())) c.sample_values.push_back(value_from_json(v));
  c.aliases = j.value("aliases", std::vector<std::string>{});
  c.user_edited = j.value("user_edited", false);
}

void to_json(json& j, const DataDictionary& d) {
  j = json{{"schema_fingerprint", d.schema_fingerprint}, {"columns", d.columns}};
}

void from_json(const json& j, DataDictionary& d) {
  d.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
  d.columns = j.at("columns").get<std::vector<ColumnDescription>>();
}

std::string schema_fingerprint(const sql::Catalog& catalog) {
  std::string enc;
  for (const auto& t : catalog.table_names()) {
    enc += sql::ident_key(t) + "(";
    for (const auto& c : *catalog.find(t)) enc += sql::ident_key(c.name) + " " + c.type + ",";
    enc += ");";
  }
  return llm::hex16(llm::fnv1a64(enc));
}

llm::Variables column_variables(const ColumnDescription& c, const std::string& type) {
  return {{"table", c.table},
          {"column", c.column},
          {"type", type.empty() ? "(unspecified)" : type},
          {"samples", samples_text(c.sample_values)},
          {"aliases", c.aliases.empty() ? "(none)" : joined(c.aliases)}};
}

SuggestResult suggest_descriptions(const lineage::Database& db, const AliasMap& aliases, llm::Gateway& llm) {
  const auto catalog = db.catalog();
  SuggestResult out;
  out.dictionary.schema_fingerprint = schema_fingerprint(catalog);
  for (const auto& table : catalog.table_names()) {
    for (const auto& col : *catalog.find(table)) {
      ColumnDescription c;
      c.table = table;
      c.column = col.name;
      const auto samples = db.query("SELECT DISTINCT " + quoted(col.name) + " FROM " + quoted(table) + " WHERE " +
                                        quoted(col.name) + " IS NOT NULL ORDER BY 1 LIMIT " + std::to_string(kMaxSamples),
                                    lineage::kAllRows);
      for (const auto& row : samples.rows) c.sample_values.push_back(row.at(0));
      if (auto it = aliases.find({sql::ident_key(table), sql::ident_key(col.name)}); it != aliases.end()) {
        c.aliases = it->second;
      }
      try {
        c.description = llm::strip_code_fence(llm.chat("describe_column", column_variables(c, col.type)));
      } catch (const LlmError& e) {
        out.failures.push_back({table, col.name, e.what(), e.transcript_id()});
      }
      out.dictionary.columns.push_back(std::move(c));
    }
  }
  return out;
}

std::string complete_description(const std::string& partial, const ColumnDescription& column, const std::string& type,
                                  llm::Gateway& llm) {
  if (partial.find_first_not_of(" \t\r\n") == std::string::npos) throw ValidationError("partial description is empty");
  auto vars = column_variables(column, type);
  vars.erase("aliases");
  vars["partial"] = partial;
  auto text = llm::strip_code_fence(llm.chat("complete_description", vars));
  if (text.rfind(partial, 0) == 0) return text;
  // Models sometimes answer with only the continuation.
  const bool glue = !partial.empty() && !std::isspace(static_cast<unsigned char>(partial.back())) && !text.empty() &&
                    text.front() != ',' && text.front() != ';' && text.front() != '.';
  return partial + (glue ? " " : "") + text;
}

std::string dictionary_context(const DataDictionary& dict, const std::vector<std::string>& tables) {
  std::string out;
  for (const auto& c : dict.columns) {
    if (!tables.empty() &&
        std::none_of(tables.begin(), tables.end(), [&](const auto& t) { return same_key(t, c.table); })) {
      continue;
    }
    out += c.table + "." + c.column + ": " + (c.description.empty() ? "(no description)" : c.description);
    std::vector<std::string> extras;
    if (!c.aliases.empty()) extras.push_back("aliases: " + joined(c.aliases));
    if (!c.sample_values.empty()) extras.push_back("values: " + samples_text(c.sample_values));
    if (!extras.empty()) out += " (" + joined(extras, "; ") + ")";
    out += "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::string schema_context(const sql::Catalog& catalog) {
  std::string out;
  for (const auto& t : catalog.table_names()) {
    std::vector<std::string> cols;
    for (const auto& c : *catalog.find(t)) cols.push_back(c.type.empty() ? c.name : c.name + " " + c.type);
    out += t + "(" + joined(cols) + ")\n";
  }
  return out;
}

}  // namespace sqlknow::knowledge
