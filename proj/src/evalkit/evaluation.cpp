#include "sqlknow/evalkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "sqlknow/authoring/query.hpp"
#include "sqlknow/authoring/retrieve.hpp"
#include "sqlknow/errors.hpp"
#include "sqlknow/lineage/worker_pool.hpp"

namespace sqlknow::evalkit {

using nlohmann::json;

namespace {

std::string one_line(const std::string& s) { return authoring::normalize_space(s); }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t line_count(const std::string& s) {
  const auto t = authoring::normalize_space(s);
  if (t.empty()) return 0;
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) + 1;
}

const extraction::HistoricalScriptRecord* find_history(const std::vector<extraction::HistoricalScriptRecord>& hs,
                                                       const std::string& id) {
  for (const auto& h : hs) {
    if (h.script_id == id) return &h;
  }
  return nullptr;
}

// Runs f(i) for every index, possibly concurrently; results keep index order.
template <class T, class F>
std::vector<T> map_indexed(std::size_t n, std::size_t workers, F&& f) {
  std::vector<T> out(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  lineage::WorkerPool pool(workers);
  std::vector<std::future<T>> futures;
  for (std::size_t i = 0; i < n; ++i) futures.push_back(pool.submit([&f, i] { return f(i); }));
  for (std::size_t i = 0; i < n; ++i) out[i] = futures[i].get();
  return out;
}

std::vector<std::string> database_order(const std::vector<EvalTask>& tasks) {
  std::vector<std::string> out;
  for (const auto& t : tasks) {
    if (std::find(out.begin(), out.end(), t.database_id) == out.end()) out.push_back(t.database_id);
  }
  return out;
}

std::string sql_reply(const std::string& raw) { return llm::strip_code_fence(raw); }

}  // namespace

void to_json(json& j, const ItemRef& r) { j = json{{"script_id", r.script_id}, {"fragment_id", r.fragment_id}}; }

void from_json(const json& j, ItemRef& r) {
  r.script_id = j.at("script_id").get<std::string>();
  r.fragment_id = j.at("fragment_id").get<std::string>();
}

void to_json(json& j, const EvalTask& t) {
  j = json{{"task_id", t.task_id},
           {"database_id", t.database_id},
           {"instruction", t.instruction},
           {"ground_truth_sql", t.ground_truth_sql},
           {"ground_truth_items", t.ground_truth_items},
           {"context_scripts", t.context_scripts}};
}

void from_json(const json& j, EvalTask& t) {
  t.task_id = j.at("task_id").get<std::string>();
  t.database_id = j.value("database_id", "");
  t.instruction = j.at("instruction").get<std::string>();
  t.ground_truth_sql = j.at("ground_truth_sql").get<std::string>();
  t.ground_truth_items = j.value("ground_truth_items", std::vector<ItemRef>{});
  t.context_scripts = j.value("context_scripts", std::vector<std::string>{});
}

std::vector<EvalTask> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read tasks file " + path.string());
  std::vector<EvalTask> out;
  try {
    if (path.extension() == ".jsonl") {
      for (std::string line; std::getline(in, line);) {
        if (!one_line(line).empty()) out.push_back(json::parse(line).get<EvalTask>());
      }
    } else {
      out = json::parse(in).get<std::vector<EvalTask>>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return out;
}

void save_tasks(const std::vector<EvalTask>& tasks, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NotFoundError("cannot write " + path.string());
  out << json(tasks).dump(2) << "\n";
}

bool execution_match(const lineage::Database& db, const std::string& sql_a, const std::string& sql_b) {
  try {
    const auto a = db.query(sql_a, kCompareRows);
    const auto b = db.query(sql_b, kCompareRows);
    return lineage::results_match(sql_a, a, sql_b, b);
  } catch (const Error&) {
    return false;
  }
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : round2(100.0 * static_cast<double>(num) / static_cast<double>(den));
}

double harmonic(double precision, double recall) {
  return precision + recall == 0 ? 0.0 : round2(2 * precision * recall / (precision + recall));
}

// ---------------------------------------------------------------- dataset

std::string context_block(const std::vector<const extraction::HistoricalScriptRecord*>& scripts) {
  std::ostringstream out;
  for (const auto* h : scripts) {
    out << "-- script_id: " << h->script_id << "\n-- fragments:\n";
    for (const auto& r : h->fragment_records) {
      out << "--   " << r.fragment->id << " [" << sql::to_string(*r.kind) << "]: " << one_line(r.fragment->sql_text)
          << "\n";
    }
    out << h->sql_text;
    if (!h->sql_text.empty() && h->sql_text.back() != '\n') out << "\n";
    out << "\n";
  }
  return out.str();
}

std::string check_task(const EvalTask& task, const lineage::Database& db,
                       const std::vector<extraction::HistoricalScriptRecord>& histories) {
  if (one_line(task.instruction).empty()) return "empty instruction";
  if (task.context_scripts.empty() || task.context_scripts.size() > kMaxContextScripts) {
    return "context must hold 1 to " + std::to_string(kMaxContextScripts) + " scripts";
  }
  if (task.ground_truth_items.empty()) return "no knowledge items";
  for (const auto& item : task.ground_truth_items) {
    if (std::find(task.context_scripts.begin(), task.context_scripts.end(), item.script_id) ==
        task.context_scripts.end()) {
      return "item " + item.record_id() + " is outside the context scripts";
    }
    const auto* h = find_history(histories, item.script_id);
    const bool known = h && std::any_of(h->fragment_records.begin(), h->fragment_records.end(),
                                        [&](const auto& r) { return r.fragment && r.fragment->id == item.fragment_id; });
    if (!known) return "unknown item " + item.record_id();
  }
  const auto lines = line_count(task.ground_truth_sql);
  if (lines == 0) return "empty sql";
  if (lines > kMaxTaskLines) return "sql has " + std::to_string(lines) + " lines";
  try {
    if (db.query(task.ground_truth_sql, 1).rows.empty()) return "sql returns zero rows";
  } catch (const Error& e) {
    return std::string("sql does not execute: ") + e.what();
  }
  return {};
}

Dataset build_dataset(const lineage::Database& db, const std::vector<extraction::HistoricalScriptRecord>& histories,
                      const knowledge::DataDictionary& dict, llm::Gateway& llm, const DatasetOptions& options) {
  Dataset out;
  if (options.n_tasks == 0) return out;
  if (histories.empty()) throw BudgetExhaustedError(0, options.n_tasks);
  const auto schema = knowledge::schema_context(db.catalog());
  const auto dictionary = knowledge::dictionary_context(dict);
  // mt19937_64 output is fixed by the standard; distributions are not, so draws use modulo.
  std::mt19937_64 rng(options.seed);
  const std::size_t budget = options.n_tasks * static_cast<std::size_t>(1 + std::max(0, options.retries_per_task));
  for (std::size_t attempt = 1; attempt <= budget && out.tasks.size() < options.n_tasks; ++attempt) {
    std::vector<std::size_t> idx(histories.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const std::size_t k = 1 + rng() % std::min(kMaxContextScripts, histories.size());
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    std::vector<const extraction::HistoricalScriptRecord*> context;
    std::vector<std::string> ids;
    for (auto i : idx) {
      context.push_back(&histories[i]);
      ids.push_back(histories[i].script_id);
    }

    Discarded d{attempt, ids, {}};
    try {
      const auto reply = json::parse(
          llm::strip_code_fence(llm.chat("synthesize_task", {{"schema", schema},
                                                             {"dictionary", dictionary},
                                                             {"context_scripts", context_block(context)}})));
      std::ostringstream id;
      id << (options.database_id.empty() ? "" : options.database_id + "-") << "t" << std::setw(3)
         << std::setfill('0') << out.tasks.size() + 1;
      EvalTask t;
      t.task_id = id.str();
      t.database_id = options.database_id;
      t.instruction = reply.at("instruction").get<std::string>();
      t.ground_truth_sql = reply.at("sql").get<std::string>();
      t.ground_truth_items = reply.at("items").get<std::vector<ItemRef>>();
      t.context_scripts = ids;
      d.reason = check_task(t, db, histories);
      if (d.reason.empty()) {
        out.tasks.push_back(std::move(t));
        continue;
      }
    } catch (const LlmError& e) {
      d.reason = std::string("llm: ") + e.what();
    } catch (const json::exception& e) {
      d.reason = std::string("malformed reply: ") + e.what();
    }
    out.discarded.push_back(std::move(d));
  }
  if (out.tasks.size() < options.n_tasks) throw BudgetExhaustedError(out.tasks.size(), options.n_tasks);
  return out;
}

json review_file(const std::vector<EvalTask>& tasks) {
  json out = json::array();
  for (const auto& t : tasks) {
    json j = t;
    j["decision"] = "pending";
    j["note"] = "";
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<EvalTask> apply_review(const json& review, const lineage::Database& db,
                                   const std::vector<extraction::HistoricalScriptRecord>& histories) {
  if (!review.is_array()) throw ValidationError("review file must be a JSON array");
  std::vector<EvalTask> out;
  for (const auto& entry : review) {
    EvalTask t;
    try {
      t = entry.get<EvalTask>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("review entry: ") + e.what());
    }
    const auto decision = lower(entry.value("decision", "pending"));
    if (decision == "reject") continue;
    if (decision == "fix") {
      if (auto why = check_task(t, db, histories); !why.empty()) {
        throw ValidationError("fixed task " + t.task_id + " fails: " + why);
      }
    } else if (decision != "accept") {
      throw ValidationError("task " + t.task_id + " has decision '" + decision + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------- reconstruction

ReconstructionReport reconstruction_accuracy(const std::string& database_id, const lineage::Database& db,
                                             const std::vector<extraction::HistoricalScriptRecord>& histories,
                                             const knowledge::DataDictionary& dict, llm::Gateway& llm,
                                             std::size_t workers) {
  ReconstructionReport r;
  r.database_id = database_id;
  r.history_count = histories.size();
  const auto schema = knowledge::schema_context(db.catalog());
  const auto dictionary = knowledge::dictionary_context(dict);
  r.outcomes = map_indexed<ReconstructionOutcome>(histories.size(), workers, [&](std::size_t i) {
    const auto& h = histories[i];
    ReconstructionOutcome o;
    o.script_id = h.script_id;
    std::ostringstream fragments;
    for (const auto& f : h.fragment_records) fragments << sql::to_string(*f.kind) << ": " << f.description << "\n";
    try {
      o.reconstructed_sql = sql_reply(llm.chat("reconstruct_sql", {{"schema", schema},
                                                                   {"dictionary", dictionary},
                                                                   {"script_description", h.script_description},
                                                                   {"fragments", fragments.str()}}));
      const auto truth = db.query(h.sql_text, kCompareRows);
      const auto got = db.query(o.reconstructed_sql, kCompareRows);
      o.success = lineage::results_match(h.sql_text, truth, o.reconstructed_sql, got);
      if (!o.success) o.error = "results differ";
    } catch (const LlmError& e) {
      o.error = std::string("llm: ") + e.what();
    } catch (const Error& e) {
      o.error = e.what();
    }
    return o;
  });
  for (const auto& o : r.outcomes) r.success_count += o.success;
  r.success_ratio = percent(r.success_count, r.history_count);
  return r;
}

// ---------------------------------------------------------------- retrieval

RetrievalReport retrieval_metrics(const std::vector<EvalTask>& tasks, const knowledge::KnowledgeStore& store,
                                  llm::Gateway& llm, std::size_t workers) {
  RetrievalReport rep;
  rep.tasks = map_indexed<RetrievalTaskOutcome>(tasks.size(), workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    RetrievalTaskOutcome o;
    o.task_id = t.task_id;
    for (const auto& item : t.ground_truth_items) {
      if (std::find(o.truth.begin(), o.truth.end(), item.record_id()) == o.truth.end()) o.truth.push_back(item.record_id());
    }
    try {
      for (const auto& r : authoring::retrieve(t.instruction, store, llm).reranked) {
        if (r.level == knowledge::Level::Fragment) o.retrieved.push_back(r.id);
      }
    } catch (const Error& e) {
      o.error = e.what();
    }
    const std::set<std::string> truth(o.truth.begin(), o.truth.end());
    for (const auto& id : o.retrieved) o.hits += truth.count(id);
    return o;
  });
  for (const auto& db : database_order(tasks)) {
    RetrievalRow row;
    row.database_id = db;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].database_id != db) continue;
      row.items += rep.tasks[i].truth.size();
      row.retrieved += rep.tasks[i].retrieved.size();
      row.hits += rep.tasks[i].hits;
    }
    row.precision = percent(row.hits, row.retrieved);
    row.recall = percent(row.hits, row.items);
    row.f1 = harmonic(row.precision, row.recall);
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------- ablation

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Direct: return "Direct";
    case Mode::Rag: return "RAG";
    case Mode::Refine: return "Refine";
    case Mode::Pipeline: return "Pipeline";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  const auto v = lower(std::string(s));
  if (v == "direct") return Mode::Direct;
  if (v == "rag") return Mode::Rag;
  if (v == "refine") return Mode::Refine;
  if (v == "pipeline") return Mode::Pipeline;
  throw ValidationError("unknown mode '" + std::string(s) + "' (direct, rag, refine, pipeline)");
}

RefineOutcome refine_loop(const lineage::Database& db, const std::string& wrong_sql, const std::string& truth_sql,
                          llm::Gateway& llm, int max_steps) {
  RefineOutcome o;
  o.sql = wrong_sql;
  if (execution_match(db, o.sql, truth_sql)) {
    o.success = true;
    return o;
  }
  try {
    while (o.steps < std::min(max_steps, kMaxRefineSteps)) {
      const auto instruction = llm::strip_code_fence(
          llm.chat("modification_instruction", {{"wrong_sql", o.sql}, {"ground_truth_sql", truth_sql}}));
      o.instructions.push_back(instruction);
      ++o.steps;
      o.sql = sql_reply(llm.chat("revise_sql", {{"wrong_sql", o.sql}, {"instruction", instruction}}));
      if (execution_match(db, o.sql, truth_sql)) {
        o.success = true;
        break;
      }
    }
  } catch (const LlmError& e) {
    o.error = std::string("llm: ") + e.what();
  }
  return o;
}

AblationResult run_ablation(const std::vector<EvalTask>& tasks, Mode mode, const AblationContext& ctx) {
  if (mode != Mode::Direct && !ctx.store) throw ValidationError(std::string(to_string(mode)) + " mode needs a knowledge store");
  const auto catalog = ctx.db.catalog();
  AblationResult res;
  res.outcomes = map_indexed<TaskOutcome>(tasks.size(), ctx.workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    TaskOutcome o;
    o.task_id = t.task_id;
    try {
      authoring::RetrievalBundle bundle;
      if (mode != Mode::Direct) bundle = authoring::retrieve(t.instruction, *ctx.store, ctx.llm);
      std::string raw;
      try {
        const auto a = authoring::generate_sql(t.instruction, bundle,
                                               authoring::GenerateContext{ctx.dictionary, &catalog, &ctx.db, ctx.llm}, &raw);
        o.initial_sql = a.script.source_text;
      } catch (const GenerationParseError& e) {
        o.initial_sql = sql_reply(e.raw_text());
        o.error = e.what();
      }
      o.success = o.error.empty() && execution_match(ctx.db, o.initial_sql, t.ground_truth_sql);
    } catch (const Error& e) {
      o.error = e.what();
    }
    o.final_sql = o.initial_sql;
    if (mode == Mode::Refine && o.success) o.attempted = false;
    if ((mode == Mode::Refine || mode == Mode::Pipeline) && !o.success) {
      const auto r = refine_loop(ctx.db, o.initial_sql, t.ground_truth_sql, ctx.llm);
      o.success = r.success;
      o.refine_steps = r.steps;
      o.final_sql = r.sql;
      if (!r.error.empty()) o.error = r.error;
    }
    return o;
  });
  for (const auto& db : database_order(tasks)) {
    AblationRow row;
    row.database_id = db;
    row.mode = mode;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].database_id != db || !res.outcomes[i].attempted) continue;
      ++row.tasks;
      row.success += res.outcomes[i].success;
    }
    row.success_ratio = percent(row.success, row.tasks);
    res.rows.push_back(row);
  }
  return res;
}

// ---------------------------------------------------------------- reports

namespace {

json reference_reconstruction() {
  return json::array({{{"Database", "Toxicology"}, {"History", 145}, {"Success", 139}, {"Success Ratio", 95.86}},
                      {{"Database", "European"}, {"History", 129}, {"Success", 123}, {"Success Ratio", 95.35}},
                      {{"Database", "Codebase"}, {"History", 186}, {"Success", 180}, {"Success Ratio", 96.77}},
                      {{"Database", "Formula 1"}, {"History", 174}, {"Success", 168}, {"Success Ratio", 96.55}}});
}

json reference_retrieval() {
  auto row = [](const char* db, int items, int retrieved, double p, double r, double f) {
    return json{{"Database", db}, {"Items", items}, {"Retrieved", retrieved}, {"Precision", p}, {"Recall", r}, {"F1", f}};
  };
  return json::array({row("Toxicology", 334, 546, 43.04, 71.18, 53.64), row("European", 262, 422, 51.63, 81.92, 63.34),
                      row("Codebase", 251, 514, 43.49, 87.67, 58.14), row("Formula 1", 360, 645, 44.74, 73.20, 55.53)});
}

json reference_ablation() {
  json out = json::array();
  const std::vector<std::tuple<const char*, const char*, int, int, double>> rows = {
      {"Toxicology", "Direct", 55, 20, 36.36}, {"Toxicology", "RAG", 55, 40, 72.73},
      {"Toxicology", "Refine", 15, 10, 66.67}, {"Toxicology", "Pipeline", 55, 50, 90.91},
      {"European", "Direct", 47, 19, 40.43},   {"European", "RAG", 47, 33, 70.21},
      {"European", "Refine", 14, 11, 78.57},   {"European", "Pipeline", 47, 44, 93.62},
      {"Codebase", "Direct", 67, 27, 40.30},   {"Codebase", "RAG", 67, 48, 71.64},
      {"Codebase", "Refine", 19, 15, 78.95},   {"Codebase", "Pipeline", 67, 63, 94.03},
      {"Formula 1", "Direct", 63, 14, 22.22},  {"Formula 1", "RAG", 63, 44, 69.84},
      {"Formula 1", "Refine", 19, 14, 73.68},  {"Formula 1", "Pipeline", 63, 58, 92.06}};
  for (const auto& [db, mode, tasks, success, ratio] : rows) {
    out.push_back({{"Database", db}, {"Mode", mode}, {"Tasks", tasks}, {"Success", success}, {"Success Ratio", ratio}});
  }
  return out;
}

}  // namespace

json reconstruction_report_json(const std::vector<ReconstructionReport>& reports) {
  json rows = json::array();
  json outcomes = json::object();
  for (const auto& r : reports) {
    rows.push_back({{"Database", r.database_id},
                    {"History", r.history_count},
                    {"Success", r.success_count},
                    {"Success Ratio", r.success_ratio}});
    json list = json::array();
    for (const auto& o : r.outcomes) {
      list.push_back({{"script_id", o.script_id},
                      {"success", o.success},
                      {"reconstructed_sql", o.reconstructed_sql},
                      {"error", o.error}});
    }
    outcomes[r.database_id] = std::move(list);
  }
  return json{{"table", "SQL reconstruction accuracy"},
              {"columns", {"Database", "History", "Success", "Success Ratio"}},
              {"rows", rows},
              {"outcomes", outcomes},
              {"reference", reference_reconstruction()}};
}

json retrieval_report_json(const RetrievalReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"Database", r.database_id},
                    {"Items", r.items},
                    {"Retrieved", r.retrieved},
                    {"Precision", r.precision},
                    {"Recall", r.recall},
                    {"F1", r.f1}});
  }
  json tasks = json::array();
  for (const auto& t : report.tasks) {
    tasks.push_back({{"task_id", t.task_id}, {"truth", t.truth}, {"retrieved", t.retrieved}, {"hits", t.hits}, {"error", t.error}});
  }
  return json{{"table", "Knowledge retrieval"},
              {"counting", "Retrieved and the intersection count Fragment-level knowledge records only; script-level "
                           "matches are excluded. Precision and Recall are micro-averaged per database."},
              {"columns", {"Database", "Items", "Retrieved", "Precision", "Recall", "F1"}},
              {"rows", rows},
              {"tasks", tasks},
              {"reference", reference_retrieval()}};
}

json ablation_report_json(const std::vector<AblationResult>& results) {
  json rows = json::array();
  json outcomes = json::array();
  for (const auto& res : results) {
    for (const auto& r : res.rows) {
      rows.push_back({{"Database", r.database_id},
                      {"Mode", to_string(r.mode)},
                      {"Tasks", r.tasks},
                      {"Success", r.success},
                      {"Success Ratio", r.success_ratio}});
    }
    json list = json::array();
    for (const auto& o : res.outcomes) {
      list.push_back({{"task_id", o.task_id},
                      {"attempted", o.attempted},
                      {"success", o.success},
                      {"initial_sql", o.initial_sql},
                      {"final_sql", o.final_sql},
                      {"refine_steps", o.refine_steps},
                      {"error", o.error}});
    }
    outcomes.push_back({{"mode", res.rows.empty() ? "" : to_string(res.rows.front().mode)}, {"tasks", list}});
  }
  return json{{"table", "Code generation and knowledge refinement ablation"},
              {"columns", {"Database", "Mode", "Tasks", "Success", "Success Ratio"}},
              {"rows", rows},
              {"outcomes", outcomes},
              {"reference", reference_ablation()}};
}

std::vector<std::string> check_identities(const json& report) {
  std::vector<std::string> out;
  for (const char* section : {"rows", "reference"}) {
    if (!report.contains(section)) continue;
    const auto& rows = report.at(section);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const auto where = std::string(section) + "[" + std::to_string(i) + "]";
      if (r.contains("F1")) {
        const double p = r.at("Precision"), rc = r.at("Recall"), f = r.at("F1");
        const double h = p + rc == 0 ? 0 : 2 * p * rc / (p + rc);
        if (std::abs(h - f) > 0.01 + 1e-9) out.push_back(where + ": F1 " + std::to_string(f) + " vs " + std::to_string(h));
      }
      if (r.contains("Success Ratio")) {
        const double den = r.contains("Tasks") ? r.at("Tasks").get<double>() : r.at("History").get<double>();
        const double ratio = r.at("Success Ratio");
        const double success = r.at("Success");
        if (std::llround(ratio * den / 100.0) != std::llround(success)) {
          out.push_back(where + ": ratio " + std::to_string(ratio) + " x " + std::to_string(den) + " != " +
                        std::to_string(success));
        }
        if (std::abs(ratio - (den == 0 ? 0 : round2(100 * success / den))) > 1e-9) {
          out.push_back(where + ": ratio is not success / tasks to two decimals");
        }
      }
    }
  }
  return out;
}

}  // namespace sqlknow::evalkit
