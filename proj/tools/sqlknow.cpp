// sqlknow: server, offline extraction, evaluation and debugging commands.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "sqlknow/errors.hpp"
#include "sqlknow/evalkit/evaluation.hpp"
#include "sqlknow/server/service.hpp"
#include "sqlknow/sql/serialize.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace sqlknow;

constexpr int kUsage = 2;

// Exit with a usage error naming the offending flag.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LlmFlags {
  std::string mock;
  std::string replay;
  std::string transcript;
  std::string prompts;
  std::size_t in_flight = 4;

  void add(CLI::App* cmd) {
    cmd->add_option("--mock", mock, "Mock fixture file or directory; selects the mock provider");
    cmd->add_option("--replay", replay, "Recorded transcript (JSON lines); selects the replay provider");
    cmd->add_option("--transcript", transcript, "Append every exchange to this JSON-lines file");
    cmd->add_option("--prompts", prompts, "Prompt template directory");
    cmd->add_option("--in-flight", in_flight, "Concurrent LLM calls")->check(CLI::PositiveNumber);
  }

  std::shared_ptr<llm::Gateway> gateway() const {
    if (!mock.empty() && !replay.empty()) throw UsageError("--mock and --replay are exclusive");
    const fs::path dir = prompts.empty() ? llm::default_prompt_dir() : fs::path(prompts);
    auto t = transcript.empty() ? std::make_shared<llm::Transcript>() : std::make_shared<llm::Transcript>(transcript);
    std::shared_ptr<llm::ChatBackend> chat;
    if (!mock.empty()) {
      require_path("--mock", mock);
      chat = llm::MockBackend::load(mock);
    } else if (!replay.empty()) {
      require_path("--replay", replay);
      chat = std::make_shared<llm::ReplayBackend>(llm::Transcript::load(replay));
    } else {
      return llm::make_live_gateway(dir, std::move(t));
    }
    return std::make_shared<llm::Gateway>(llm::TemplateRegistry::load(dir), std::move(chat),
                                          std::make_shared<llm::HashingEmbedder>(), std::move(t), in_flight);
  }

  static void require_path(const std::string& flag, const std::string& path) {
    if (path.empty()) throw UsageError(flag + " is required");
    if (!fs::exists(path)) throw UsageError(flag + ": no such file: " + path);
  }
};

void require(const std::string& flag, const std::string& path) { LlmFlags::require_path(flag, path); }

void emit(const json& j, const std::string& out) {
  const auto text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw UsageError("--out: cannot write " + out);
  f << text;
}

knowledge::DataDictionary load_dictionary(const std::string& path) {
  if (path.empty()) return {};
  require("--dict", path);
  return knowledge::DataDictionary::load(path);
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// Mean of every numeric column per (Database, Mode) key across runs.
json repetition_means(const std::vector<json>& reports) {
  std::map<std::string, json> sums;
  std::vector<std::string> order;
  for (const auto& rep : reports) {
    for (const auto& row : rep.at("rows")) {
      const auto key = row.value("Database", "") + "|" + row.value("Mode", "");
      auto [it, fresh] = sums.try_emplace(key, row);
      if (fresh) {
        order.push_back(key);
        continue;
      }
      for (auto& [k, v] : it->second.items()) {
        if (v.is_number()) v = v.get<double>() + row.at(k).get<double>();
      }
    }
  }
  json rows = json::array();
  for (const auto& key : order) {
    auto row = sums[key];
    for (auto& [k, v] : row.items()) {
      if (v.is_number()) v = evalkit::round2(v.get<double>() / static_cast<double>(reports.size()));
    }
    rows.push_back(std::move(row));
  }
  return {{"count", reports.size()}, {"mean_rows", rows}};
}

// Runs `one` `repeat` times; the first run is the report, later runs only feed the means.
template <class F>
json repeated(int repeat, F&& one) {
  std::vector<json> runs;
  for (int i = 0; i < repeat; ++i) runs.push_back(one());
  auto report = runs.front();
  if (repeat > 1) report["repetitions"] = repetition_means(runs);
  return report;
}

// Writes the report and fails when a metric identity is violated.
int finish_report(json report, const std::string& out) {
  const auto violations = evalkit::check_identities(report);
  report["identity_violations"] = violations;
  emit(report, out);
  for (const auto& v : violations) std::cerr << "identity violated: " << v << "\n";
  return violations.empty() ? 0 : 1;
}

std::vector<extraction::HistoricalScriptRecord> histories(const std::string& store_path, const std::string& scripts) {
  require("--store", store_path);
  require("--scripts", scripts);
  auto h = extraction::histories_from_store(knowledge::KnowledgeStore::load(store_path), extraction::load_scripts(scripts));
  if (h.empty()) throw UsageError("--store holds no script records for the scripts in --scripts");
  return h;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-grounded SQL authoring: server, offline extraction and evaluation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // ---------------------------------------------------------------- serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string config_path;
  server::ServerConfig cli_cfg;
  LlmFlags serve_llm;
  serve->add_option("--config", config_path, "JSON config file; flags override its values");
  serve->add_option("--db", cli_cfg.database_path, "SQLite database file");
  serve->add_option("--database-id", cli_cfg.database_id, "Database id (default: file stem)");
  serve->add_option("--store", cli_cfg.store_path, "Knowledge store (JSON lines)");
  serve->add_option("--dict", cli_cfg.dictionary_path, "Data dictionary JSON");
  serve->add_option("--sessions", cli_cfg.sessions_dir, "Session snapshot directory");
  serve->add_option("--host", cli_cfg.host, "Bind address");
  auto* port_opt = serve->add_option("--port", cli_cfg.port, "Port (0 = any free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--cors", cli_cfg.cors_origins, "Allowed CORS origin (repeatable)");
  serve_llm.add(serve);

  // ---------------------------------------------------------------- offline
  auto* offline = app.add_subcommand("offline", "Offline knowledge extraction");
  offline->require_subcommand(1);
  auto* extract = offline->add_subcommand("extract", "Extract and index knowledge from historical scripts");
  std::string x_db, x_scripts, x_dict, x_out, x_report;
  std::size_t x_workers = 1;
  LlmFlags x_llm;
  extract->add_option("--db", x_db, "SQLite database file (resolves columns)");
  extract->add_option("--scripts", x_scripts, "Directory of .sql files, a .sql file, or JSON/JSONL scripts");
  extract->add_option("--dict", x_dict, "Data dictionary JSON");
  extract->add_option("--out", x_out, "Knowledge store to write (JSON lines)");
  extract->add_option("--report", x_report, "Write the extraction report here instead of stdout");
  extract->add_option("--workers", x_workers, "Parallel scripts")->check(CLI::PositiveNumber);
  x_llm.add(extract);

  // ---------------------------------------------------------------- dict
  auto* dict = app.add_subcommand("dict", "Data dictionary");
  dict->require_subcommand(1);
  auto* suggest = dict->add_subcommand("suggest", "Describe every column from samples and mined aliases");
  std::string d_db, d_scripts, d_out;
  LlmFlags d_llm;
  suggest->add_option("--db", d_db, "SQLite database file");
  suggest->add_option("--scripts", d_scripts, "Historical scripts for alias mining");
  suggest->add_option("--out", d_out, "Dictionary JSON to write");
  d_llm.add(suggest);
  auto* complete = dict->add_subcommand("complete", "Complete a partial column description and store it");
  std::string c_db, c_dict, c_table, c_column, c_partial;
  LlmFlags c_llm;
  complete->add_option("--db", c_db, "SQLite database file");
  complete->add_option("--dict", c_dict, "Dictionary JSON, updated in place");
  complete->add_option("--table", c_table)->required();
  complete->add_option("--column", c_column)->required();
  complete->add_option("--partial", c_partial)->required();
  c_llm.add(complete);

  // ---------------------------------------------------------------- eval
  auto* eval = app.add_subcommand("eval", "Technical evaluation");
  eval->require_subcommand(1);
  std::string e_db, e_store, e_tasks, e_dict, e_scripts, e_out, e_mode = "all", e_database_id, e_review;
  std::size_t e_workers = 1, e_n = 0;
  int e_repeat = 1, e_retries = 3;
  std::uint64_t e_seed = 1;
  LlmFlags e_llm;
  auto common = [&](CLI::App* c) {
    c->add_option("--db", e_db, "SQLite database file");
    c->add_option("--store", e_store, "Knowledge store (JSON lines)");
    c->add_option("--dict", e_dict, "Data dictionary JSON");
    c->add_option("--out", e_out, "Report file (default stdout)");
    c->add_option("--workers", e_workers, "Concurrent tasks")->check(CLI::PositiveNumber);
    e_llm.add(c);
  };
  auto* recon = eval->add_subcommand("recon", "Reconstruction accuracy (History/Success/Success Ratio)");
  common(recon);
  recon->add_option("--scripts", e_scripts, "Historical scripts the store was built from");
  recon->add_option("--database-id", e_database_id, "Database label (default: --db file stem)");
  recon->add_option("--repeat", e_repeat, "Repetitions; means are reported")->check(CLI::PositiveNumber);
  auto* retrieval = eval->add_subcommand("retrieval", "Retrieval precision/recall/F1");
  common(retrieval);
  retrieval->add_option("--tasks", e_tasks, "Tasks (JSON array or JSON lines)");
  retrieval->add_option("--repeat", e_repeat, "Repetitions; means are reported")->check(CLI::PositiveNumber);
  auto* ablation = eval->add_subcommand("ablation", "Direct/RAG/Refine/Pipeline ablation");
  common(ablation);
  ablation->add_option("--tasks", e_tasks, "Tasks (JSON array or JSON lines)");
  ablation->add_option("--mode", e_mode, "direct, rag, refine, pipeline or all");
  ablation->add_option("--repeat", e_repeat, "Repetitions; means are reported")->check(CLI::PositiveNumber);
  auto* dataset = eval->add_subcommand("dataset", "Synthesize evaluation tasks and a review file");
  common(dataset);
  dataset->add_option("--scripts", e_scripts, "Historical scripts the store was built from");
  dataset->add_option("--database-id", e_database_id, "Database label (default: --db file stem)");
  dataset->add_option("-n,--tasks-count", e_n, "Tasks to produce")->required();
  dataset->add_option("--seed", e_seed, "Sampling seed");
  dataset->add_option("--retries", e_retries, "Extra synthesis attempts budgeted per task");
  dataset->add_option("--review", e_review, "Review file to write");
  auto* review = eval->add_subcommand("review", "Apply a completed review file");
  review->add_option("--review", e_review, "Review file with accept/fix/reject decisions");
  review->add_option("--db", e_db, "SQLite database file");
  review->add_option("--store", e_store, "Knowledge store (JSON lines)");
  review->add_option("--scripts", e_scripts, "Historical scripts the store was built from");
  review->add_option("--out", e_out, "Accepted tasks file");

  // ---------------------------------------------------------------- db, fragment
  auto* dbcmd = app.add_subcommand("db", "Database utilities");
  dbcmd->require_subcommand(1);
  auto* init = dbcmd->add_subcommand("init", "Create a SQLite database from a SQL seed script");
  std::string i_sql, i_out;
  init->add_option("--sql", i_sql, "Seed SQL")->required();
  init->add_option("--out", i_out, "Database file to create (replaced)")->required();

  auto* fragment = app.add_subcommand("fragment", "Dump subquery units and knowledge fragments as JSON");
  std::string f_sql, f_db;
  fragment->add_option("sql-file", f_sql, "SQL script")->required();
  fragment->add_option("--db", f_db, "Database whose schema resolves columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*serve) {
      server::ServerConfig cfg = config_path.empty() ? server::ServerConfig{} : server::ServerConfig::load(config_path);
      if (!cli_cfg.database_path.empty()) cfg.database_path = cli_cfg.database_path;
      if (!cli_cfg.database_id.empty()) cfg.database_id = cli_cfg.database_id;
      if (!cli_cfg.store_path.empty()) cfg.store_path = cli_cfg.store_path;
      if (!cli_cfg.dictionary_path.empty()) cfg.dictionary_path = cli_cfg.dictionary_path;
      if (!cli_cfg.sessions_dir.empty()) cfg.sessions_dir = cli_cfg.sessions_dir;
      if (serve->count("--host")) cfg.host = cli_cfg.host;
      if (port_opt->count()) cfg.port = cli_cfg.port;
      if (!cli_cfg.cors_origins.empty()) cfg.cors_origins = cli_cfg.cors_origins;
      if (cfg.database_path.empty()) throw UsageError("--db is required (or database_path in --config)");
      if (!fs::is_regular_file(cfg.database_path)) throw UsageError("--db: no such file: " + cfg.database_path);
      if (!serve_llm.mock.empty()) {
        cfg.llm_provider = "mock";
        cfg.mock_path = serve_llm.mock;
      } else if (!serve_llm.replay.empty()) {
        cfg.llm_provider = "replay";
        cfg.replay_path = serve_llm.replay;
      }
      if (!serve_llm.transcript.empty()) cfg.transcript_path = serve_llm.transcript;
      if (!serve_llm.prompts.empty()) cfg.prompt_dir = serve_llm.prompts;
      server::Service service(cfg, server::make_gateway(cfg));
      if (service.restored_count()) std::cerr << "restored " << service.restored_count() << " sessions\n";
      return server::serve(service);
    }

    if (*extract) {
      require("--db", x_db);
      require("--scripts", x_scripts);
      if (x_out.empty()) throw UsageError("--out is required");
      const auto d = load_dictionary(x_dict);
      auto llm = x_llm.gateway();
      lineage::Database db(x_db);
      const auto catalog = db.catalog();
      extraction::OfflineOptions opt;
      opt.workers = x_workers;
      const auto result = extraction::run_offline(extraction::load_scripts(x_scripts), d, *llm, &catalog, opt);
      result.store.save(x_out);
      emit(json(result.report), x_report);
      return 0;
    }

    if (*suggest) {
      require("--db", d_db);
      if (d_out.empty()) throw UsageError("--out is required");
      auto llm = d_llm.gateway();
      lineage::Database db(d_db);
      knowledge::AliasMap aliases;
      if (!d_scripts.empty()) {
        require("--scripts", d_scripts);
        std::vector<std::string> texts;
        for (const auto& s : extraction::load_scripts(d_scripts)) texts.push_back(s.sql_text);
        const auto catalog = db.catalog();
        aliases = knowledge::mine_aliases(texts, &catalog).aliases;
      }
      const auto res = knowledge::suggest_descriptions(db, aliases, *llm);
      res.dictionary.save(d_out);
      for (const auto& f : res.failures) std::cerr << "no description for " << f.table << "." << f.column << ": " << f.message << "\n";
      return res.failures.empty() ? 0 : 1;
    }

    if (*complete) {
      require("--db", c_db);
      require("--dict", c_dict);
      auto d = knowledge::DataDictionary::load(c_dict);
      const auto* col = d.find(c_table, c_column);
      if (!col) throw NotFoundError("unknown column " + c_table + "." + c_column);
      std::string type;
      lineage::Database db(c_db);
      const auto catalog = db.catalog();
      if (const auto* cols = catalog.find(col->table)) {
        for (const auto& oc : *cols) {
          if (oc.name == col->column) type = oc.type;
        }
      }
      auto llm = c_llm.gateway();
      const auto text = knowledge::complete_description(c_partial, *col, type, *llm);
      d.set_description(c_table, c_column, text);
      d.save(c_dict);
      std::cout << text << "\n";
      return 0;
    }

    if (*recon) {
      require("--db", e_db);
      const auto h = histories(e_store, e_scripts);
      const auto d = load_dictionary(e_dict);
      auto llm = e_llm.gateway();
      lineage::Database db(e_db);
      const auto id = e_database_id.empty() ? stem_of(e_db) : e_database_id;
      return finish_report(repeated(e_repeat, [&] {
                             return evalkit::reconstruction_report_json(
                                 {evalkit::reconstruction_accuracy(id, db, h, d, *llm, e_workers)});
                           }),
                           e_out);
    }

    if (*retrieval) {
      require("--store", e_store);
      require("--tasks", e_tasks);
      const auto store = knowledge::KnowledgeStore::load(e_store);
      const auto tasks = evalkit::load_tasks(e_tasks);
      auto llm = e_llm.gateway();
      return finish_report(repeated(e_repeat, [&] {
                             return evalkit::retrieval_report_json(evalkit::retrieval_metrics(tasks, store, *llm, e_workers));
                           }),
                           e_out);
    }

    if (*ablation) {
      require("--db", e_db);
      require("--tasks", e_tasks);
      std::vector<evalkit::Mode> modes;
      if (e_mode == "all") {
        modes = {evalkit::Mode::Direct, evalkit::Mode::Rag, evalkit::Mode::Refine, evalkit::Mode::Pipeline};
      } else {
        try {
          modes = {evalkit::parse_mode(e_mode)};
        } catch (const ValidationError& e) {
          throw UsageError(std::string("--mode: ") + e.what());
        }
      }
      std::optional<knowledge::KnowledgeStore> store;
      if (!e_store.empty()) {
        require("--store", e_store);
        store = knowledge::KnowledgeStore::load(e_store);
      } else if (modes != std::vector<evalkit::Mode>{evalkit::Mode::Direct}) {
        throw UsageError("--store is required for every mode but direct");
      }
      const auto d = load_dictionary(e_dict);
      const auto tasks = evalkit::load_tasks(e_tasks);
      auto llm = e_llm.gateway();
      lineage::Database db(e_db);
      const evalkit::AblationContext ctx{db, d, store ? &*store : nullptr, *llm, e_workers};
      return finish_report(repeated(e_repeat, [&] {
                             std::vector<evalkit::AblationResult> results;
                             for (auto m : modes) results.push_back(evalkit::run_ablation(tasks, m, ctx));
                             return evalkit::ablation_report_json(results);
                           }),
                           e_out);
    }

    if (*dataset) {
      require("--db", e_db);
      const auto h = histories(e_store, e_scripts);
      const auto d = load_dictionary(e_dict);
      auto llm = e_llm.gateway();
      lineage::Database db(e_db);
      evalkit::DatasetOptions opt;
      opt.database_id = e_database_id.empty() ? stem_of(e_db) : e_database_id;
      opt.n_tasks = e_n;
      opt.retries_per_task = e_retries;
      opt.seed = e_seed;
      const auto ds = evalkit::build_dataset(db, h, d, *llm, opt);
      if (!e_review.empty()) emit(evalkit::review_file(ds.tasks), e_review);
      for (const auto& x : ds.discarded) std::cerr << "discarded attempt " << x.attempt << ": " << x.reason << "\n";
      emit(json(ds.tasks), e_out);
      return 0;
    }

    if (*review) {
      require("--review", e_review);
      require("--db", e_db);
      const auto h = histories(e_store, e_scripts);
      std::ifstream in(e_review);
      lineage::Database db(e_db);
      const auto tasks = evalkit::apply_review(json::parse(in), db, h);
      if (e_out.empty()) throw UsageError("--out is required");
      evalkit::save_tasks(tasks, e_out);
      std::cerr << tasks.size() << " tasks accepted\n";
      return 0;
    }

    if (*init) {
      require("--sql", i_sql);
      std::ifstream in(i_sql, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      lineage::create_database(i_out, ss.str());
      return 0;
    }

    if (*fragment) {
      require("sql-file", f_sql);
      std::ifstream in(f_sql, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      std::optional<sql::Catalog> catalog;
      if (!f_db.empty()) {
        require("--db", f_db);
        catalog = lineage::Database(f_db).catalog();
      }
      const auto d = sql::decompose_script(sql::parse_script(ss.str()), catalog ? &*catalog : nullptr);
      emit(sql::fragment_dump(d), "");
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
