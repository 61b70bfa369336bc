#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sqlknow/errors.hpp"
#include "sqlknow/llm/gateway.hpp"

namespace sqlknow::llm {
namespace {

using nlohmann::json;

std::string one_line(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const std::string* var(const Variables& vars, const std::string& name) {
  auto it = vars.find(name);
  return it == vars.end() ? nullptr : &it->second;
}

std::string var_or(const Variables& vars, const std::string& name, const std::string& dflt = {}) {
  const auto* v = var(vars, name);
  return v ? *v : dflt;
}

// Splits at connective words and punctuation, then strips leading request filler.
std::vector<std::string> heuristic_keywords(const std::string& instruction) {
  static const std::set<std::string> connectives{"with", "and", "of", "for", "by", "in", "where", "that", "which", "whose", "per"};
  static const std::set<std::string> filler{"show", "me", "find", "list", "give", "get", "return", "compute", "calculate",
                                            "count", "number", "how", "many", "much", "what", "is", "are", "the", "a",
                                            "an", "all", "total", "please", "us", "i", "want", "to", "see"};
  std::vector<std::vector<std::string>> chunks(1);
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    if (connectives.count(lower(word))) {
      chunks.emplace_back();
    } else {
      chunks.back().push_back(word);
    }
    word.clear();
  };
  for (char c : instruction) {
    if (c == ',' || c == ';' || c == '.' || c == '?' || c == '!') {
      flush();
      chunks.emplace_back();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      word += c;
    }
  }
  flush();
  std::vector<std::string> out;
  for (auto& ch : chunks) {
    std::size_t i = 0;
    while (i < ch.size() && filler.count(lower(ch[i]))) ++i;
    std::string phrase;
    for (; i < ch.size(); ++i) phrase += (phrase.empty() ? "" : " ") + ch[i];
    if (!phrase.empty() && std::find(out.begin(), out.end(), phrase) == out.end()) out.push_back(phrase);
  }
  if (out.empty() && !one_line(instruction).empty()) out.push_back(one_line(instruction));
  return out;
}

// Restates the first context script as the task, reusing all of its fragments.
std::string synthesized_task(const std::string& context) {
  std::istringstream lines(context);
  std::string id;
  std::string sql;
  json items = json::array();
  for (std::string line; std::getline(lines, line);) {
    if (id.empty()) {
      if (line.rfind("-- script_id: ", 0) == 0) id = line.substr(14);
      continue;
    }
    if (line.rfind("--   ", 0) == 0) {
      items.push_back({{"script_id", id}, {"fragment_id", line.substr(5, line.find(' ', 5) - 5)}});
    } else if (line.rfind("--", 0) == 0) {
      continue;
    } else if (one_line(line).empty()) {
      break;
    } else {
      sql += (sql.empty() ? "" : "\n") + line;
    }
  }
  return json{{"instruction", "Reproduce the result of script " + id + "."}, {"sql", sql}, {"items", items}}.dump();
}

bool matches(const MockEntry& e, const Variables& vars) {
  for (const auto& [k, v] : e.when) {
    const auto* got = var(vars, k);
    if (!got || *got != v) return false;
  }
  for (const auto& [k, v] : e.contains) {
    const auto* got = var(vars, k);
    if (!got || got->find(v) == std::string::npos) return false;
  }
  return true;
}

MockEntry entry_from_json(const json& j) {
  MockEntry e;
  e.template_id = j.at("template_id").get<std::string>();
  if (j.contains("variables_hash")) e.variables_hash = j.at("variables_hash").get<std::string>();
  if (j.contains("when")) e.when = j.at("when").get<Variables>();
  if (j.contains("contains")) e.contains = j.at("contains").get<Variables>();
  e.response = j.value("response", "");
  e.error = j.value("error", "");
  e.fail_times = j.value("fail_times", 0);
  return e;
}

std::vector<MockEntry> read_entries(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw NotFoundError("cannot read mock fixture: " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("mock fixture " + file.string() + ": " + e.what());
  }
  std::vector<MockEntry> out;
  for (const auto& j : doc) out.push_back(entry_from_json(j));
  return out;
}

}  // namespace

MockBackend::MockBackend(std::vector<MockEntry> entries)
    : entries_(std::move(entries)), failures_(entries_.size(), 0) {}

std::vector<MockEntry> MockBackend::read(const std::filesystem::path& path) {
  std::vector<MockEntry> all;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto part = read_entries(f);
      all.insert(all.end(), part.begin(), part.end());
    }
  } else {
    all = read_entries(path);
  }
  return all;
}

std::shared_ptr<MockBackend> MockBackend::load(const std::filesystem::path& path) {
  return std::make_shared<MockBackend>(read(path));
}

std::string MockBackend::complete(const std::string& template_id, const Variables& vars, const std::string&) {
  std::lock_guard lock(mu_);
  const auto hash = variables_hash(vars);
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < entries_.size() && !hit; ++i) {
    if (entries_[i].template_id == template_id && entries_[i].variables_hash == hash) hit = i;
  }
  for (std::size_t i = 0; i < entries_.size() && !hit; ++i) {
    const auto& e = entries_[i];
    if (e.template_id == template_id && !e.variables_hash && matches(e, vars)) hit = i;
  }
  if (!hit) return fallback(template_id, vars);
  const auto& e = entries_[*hit];
  if (!e.error.empty() || e.fail_times > 0) {
    if (e.fail_times == 0 || failures_[*hit] < e.fail_times) {
      ++failures_[*hit];
      throw LlmError(e.error.empty() ? "simulated failure for " + template_id : e.error);
    }
  }
  return e.response;
}

std::string MockBackend::fallback(const std::string& template_id, const Variables& vars) {
  if (template_id == "describe_column") {
    auto words = var_or(vars, "column");
    std::replace(words.begin(), words.end(), '_', ' ');
    std::string out = "The " + words + " of the " + var_or(vars, "table") + " table";
    const auto aliases = var_or(vars, "aliases");
    if (!aliases.empty() && aliases != "(none)") out += ", also known as " + aliases;
    return out + ".";
  }
  if (template_id == "complete_description") {
    const auto partial = var_or(vars, "partial");
    if (!partial.empty() && partial.back() == '.') return partial;
    return partial + "; values seen: " + var_or(vars, "samples") + ".";
  }
  if (template_id == "describe_script") return "Query: " + one_line(var_or(vars, "sql"));
  if (template_id == "describe_fragment") return var_or(vars, "kind") + ": " + one_line(var_or(vars, "fragment_sql"));
  if (template_id == "extract_keywords") return json(heuristic_keywords(var_or(vars, "instruction"))).dump();
  if (template_id == "rerank") {
    json ids = json::array();
    std::istringstream lines(var_or(vars, "candidates"));
    for (std::string line; std::getline(lines, line);) {
      const auto j = json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("id")) ids.push_back(j["id"]);
    }
    return ids.dump();
  }
  if (template_id == "refine_fragment") return var_or(vars, "fragment_sql");
  if (template_id == "refine_subquery") return var_or(vars, "unit_sql");
  if (template_id == "reconstruct_sql") {
    const auto d = var_or(vars, "script_description");
    return d.rfind("Query: ", 0) == 0 ? d.substr(7) : "-- no scripted response";
  }
  if (template_id == "synthesize_task") return synthesized_task(var_or(vars, "context_scripts"));
  if (template_id == "modification_instruction") return "Rewrite the query so that its result matches the intended task.";
  if (template_id == "revise_sql") return var_or(vars, "wrong_sql");
  return "-- no scripted response";
}

ReplayBackend::ReplayBackend(const std::vector<ChatExchange>& recorded) {
  for (const auto& x : recorded) {
    if (!x.error.empty()) continue;
    responses_[x.template_id + "/" + variables_hash(x.variables)].push_back(x.response_text);
  }
}

std::string ReplayBackend::complete(const std::string& template_id, const Variables& vars, const std::string&) {
  std::lock_guard lock(mu_);
  const auto key = template_id + "/" + variables_hash(vars);
  auto it = responses_.find(key);
  if (it == responses_.end()) throw LlmError("no recorded response for " + template_id + " with variables " + variables_hash(vars));
  auto& pos = cursor_[key];
  // Past the recorded count the last response repeats.
  const auto& out = it->second[std::min(pos, it->second.size() - 1)];
  ++pos;
  return out;
}

}  // namespace sqlknow::llm
