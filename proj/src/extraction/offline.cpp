#include "sqlknow/extraction/offline.hpp"

#include <fstream>
#include <set>
#include <thread>

#include "sqlknow/errors.hpp"
#include "sqlknow/lineage/worker_pool.hpp"

namespace sqlknow::extraction {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

HistoricalScript script_from_json(const json& j) { return {j.at("id").get<std::string>(), j.at("sql").get<std::string>()}; }

template <class F>
auto with_retries(const OfflineOptions& opt, int& retries, F&& call) {
  auto delay = opt.backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return call();
    } catch (const LlmError&) {
      if (attempt >= opt.retries) throw;
      ++retries;
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
}

struct ScriptWork {
  ScriptOutcome outcome;
  std::optional<HistoricalScriptRecord> history;
  std::vector<knowledge::KnowledgeRecord> records;
};

ScriptWork process(const HistoricalScript& script, const knowledge::DataDictionary& dict, llm::Gateway& llm,
                   const sql::Catalog* catalog, const OfflineOptions& opt) {
  ScriptWork w;
  w.outcome.script_id = script.id;
  const auto script_version = "describe_script@" + std::to_string(llm.templates().get("describe_script").version);
  const auto fragment_version = "describe_fragment@" + std::to_string(llm.templates().get("describe_fragment").version);
  try {
    const auto ast = sql::parse_script(script.sql_text);
    const auto units = sql::decompose(ast, catalog);
    const auto tables = referenced_tables(units);
    HistoricalScriptRecord h;
    h.script_id = script.id;
    h.sql_text = script.sql_text;
    h.script_description = with_retries(opt, w.outcome.llm_retries, [&] { return describe_script(script.sql_text, dict, llm); });
    knowledge::KnowledgeRecord top;
    top.id = knowledge::record_id(script.id);
    top.level = knowledge::Level::Script;
    top.source_script_id = script.id;
    top.description = h.script_description;
    top.sql_text = script.sql_text;
    top.template_version = script_version;
    for (const auto& u : units) {
      for (const auto& f : sql::extract_fragments(u)) {
        knowledge::KnowledgeRecord r;
        r.id = knowledge::record_id(script.id, f.id);
        r.level = knowledge::Level::Fragment;
        r.source_script_id = script.id;
        r.fragment = knowledge::fragment_ref(f);
        r.kind = f.kind;
        r.description = with_retries(opt, w.outcome.llm_retries, [&] { return describe_fragment(f, u, dict, llm, tables); });
        r.template_version = fragment_version;
        h.fragment_records.push_back(r);
      }
    }
    if (top.description.empty()) throw LlmError("empty description for " + top.id);
    for (const auto& r : h.fragment_records) {
      if (r.description.empty()) throw LlmError("empty description for " + r.id);
    }
    w.outcome.fragment_count = h.fragment_records.size();
    w.records.push_back(std::move(top));
    w.records.insert(w.records.end(), h.fragment_records.begin(), h.fragment_records.end());
    w.history = std::move(h);
  } catch (const LlmError& e) {
    w.outcome.error = std::string("llm: ") + e.what() + (e.transcript_id().empty() ? "" : " [" + e.transcript_id() + "]");
  } catch (const Error& e) {
    w.outcome.error = e.what();
  }
  return w;
}

}  // namespace

std::vector<HistoricalScript> load_scripts(const std::filesystem::path& path) {
  std::vector<HistoricalScript> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.path().extension() == ".sql") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({f.stem().string(), read_text(f)});
    return out;
  }
  const auto ext = path.extension().string();
  const auto text = read_text(path);
  try {
    if (ext == ".json") {
      for (const auto& j : json::parse(text)) out.push_back(script_from_json(j));
      return out;
    }
    if (ext == ".jsonl") {
      std::istringstream lines(text);
      for (std::string line; std::getline(lines, line);) {
        if (!line.empty()) out.push_back(script_from_json(json::parse(line)));
      }
      return out;
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  out.push_back({path.stem().string(), text});
  return out;
}

std::vector<std::string> referenced_tables(const std::vector<sql::SubqueryUnit>& units) {
  std::vector<std::string> out;
  for (const auto& u : units) {
    for (const auto& t : u.referenced_tables) {
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
  }
  return out;
}

std::string describe_script(const std::string& sql_text, const knowledge::DataDictionary& dict, llm::Gateway& llm) {
  const auto ast = sql::parse_script(sql_text);
  const auto units = sql::decompose(ast);
  return llm::strip_code_fence(
      llm.chat("describe_script", {{"sql", ast.source_text}, {"dictionary", knowledge::dictionary_context(dict, referenced_tables(units))}}));
}

std::string describe_fragment(const sql::Fragment& fragment, const sql::SubqueryUnit& parent,
                              const knowledge::DataDictionary& dict, llm::Gateway& llm,
                              const std::vector<std::string>& tables) {
  if (fragment.unit_id != parent.id) throw ValidationError("fragment " + fragment.id + " is not part of " + parent.id);
  const auto& scope = tables.empty() ? parent.referenced_tables : tables;
  return llm::strip_code_fence(llm.chat("describe_fragment", {{"kind", sql::to_string(fragment.kind)},
                                                              {"fragment_sql", fragment.sql_text},
                                                              {"context_sql", parent.sql_text},
                                                              {"dictionary", knowledge::dictionary_context(dict, scope)}}));
}

std::vector<const ScriptOutcome*> OfflineReport::skipped() const {
  std::vector<const ScriptOutcome*> out;
  for (const auto& s : scripts) {
    if (!s.indexed) out.push_back(&s);
  }
  return out;
}

void to_json(json& j, const OfflineReport& r) {
  json scripts = json::array();
  json skipped = json::array();
  for (const auto& s : r.scripts) {
    scripts.push_back({{"script_id", s.script_id},
                       {"indexed", s.indexed},
                       {"fragment_count", s.fragment_count},
                       {"llm_retries", s.llm_retries}});
    if (!s.indexed) skipped.push_back({{"script_id", s.script_id}, {"reason", s.error}});
  }
  j = json{{"scripts", scripts},
           {"skipped", skipped},
           {"script_records", r.script_records},
           {"fragment_records", r.fragment_records}};
}

OfflineResult run_offline(const std::vector<HistoricalScript>& scripts, const knowledge::DataDictionary& dict,
                          llm::Gateway& llm, const sql::Catalog* catalog, const OfflineOptions& options) {
  std::vector<ScriptWork> work(scripts.size());
  {
    lineage::WorkerPool pool(std::max<std::size_t>(1, options.workers));
    std::vector<std::future<ScriptWork>> futures;
    for (const auto& s : scripts) {
      futures.push_back(pool.submit([&, s] { return process(s, dict, llm, catalog, options); }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) work[i] = futures[i].get();
  }

  OfflineResult out;
  std::set<std::string> seen;
  for (auto& w : work) {
    auto& o = w.outcome;
    if (o.error.empty() && !seen.insert(o.script_id).second) o.error = "duplicate script id";
    if (o.error.empty()) {
      try {
        out.store.index(w.records, llm);
        o.indexed = true;
        out.report.script_records += 1;
        out.report.fragment_records += o.fragment_count;
        out.histories.push_back(std::move(*w.history));
      } catch (const Error& e) {
        o.error = std::string("index: ") + e.what();
      }
    }
    out.report.scripts.push_back(o);
  }
  return out;
}

std::vector<HistoricalScriptRecord> histories_from_store(const knowledge::KnowledgeStore& store,
                                                         const std::vector<HistoricalScript>& scripts) {
  std::vector<HistoricalScriptRecord> out;
  const auto all = store.records();
  for (const auto& s : scripts) {
    auto top = store.find(knowledge::record_id(s.id));
    if (!top) continue;
    HistoricalScriptRecord h;
    h.script_id = s.id;
    h.sql_text = s.sql_text;
    h.script_description = top->description;
    // Clause execution order, as extraction produced them.
    try {
      for (const auto& u : sql::decompose(sql::parse_script(s.sql_text))) {
        for (const auto& f : sql::extract_fragments(u)) {
          if (auto r = store.find(knowledge::record_id(s.id, f.id))) h.fragment_records.push_back(std::move(*r));
        }
      }
    } catch (const Error&) {
      for (const auto& r : all) {
        if (r.level == knowledge::Level::Fragment && r.source_script_id == s.id) h.fragment_records.push_back(r);
      }
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace sqlknow::extraction
