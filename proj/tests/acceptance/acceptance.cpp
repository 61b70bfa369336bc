// Acceptance runner: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "sqlknow/errors.hpp"
#include "sqlknow/evalkit/evaluation.hpp"
#include "support/corpus_checks.hpp"
#include "support/graph_sweep.hpp"
#include "support/knowledge_fixture.hpp"
#include "support/scenario.hpp"

namespace {

using namespace sqlknow;
using namespace sqlknow::testing;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (!pass) detail << "; ";
      else detail.str("");
      pass = false;
      detail << what;
    }
  }
};

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<CorpusOutcome>& corpus_outcomes(double* seconds) {
  static std::vector<CorpusOutcome> out;
  static double took = 0;
  if (out.empty()) {
    const auto start = Clock::now();
    lineage::Database db(toxicology_db());
    for (const auto& q : corpus()) out.push_back(check_corpus_query(q, db, false));
    took = since(start);
  }
  if (seconds) *seconds = took;
  return out;
}

void parser_corpus(Verdict& v) {
  double seconds = 0;
  const auto& outs = corpus_outcomes(&seconds);
  std::size_t ok = 0, fragments = 0;
  for (const auto& o : outs) {
    ok += o.sql_core_ok();
    fragments += o.fragments;
    if (!o.sql_core_ok()) v.require(false, o.name + ": " + (o.problems.empty() ? "failed" : o.problems.front()));
  }
  v.require(outs.size() >= 50, "corpus has " + std::to_string(outs.size()) + " queries, fewer than 50");
  v.require(seconds < 10, "runtime " + std::to_string(seconds) + " s exceeds 10 s");
  if (v.pass) {
    v.detail << outs.size() << " queries, " << fragments << " fragments; golden, conjunct split and cover equivalence hold on "
             << ok << "/" << outs.size() << " (" << seconds << " s)";
  }
}

void lineage_oracle(Verdict& v) {
  double corpus_seconds = 0;
  const auto& outs = corpus_outcomes(&corpus_seconds);
  const auto start = Clock::now();
  std::size_t ok = 0;
  for (const auto& o : outs) {
    ok += o.lineage;
    if (!o.lineage) v.require(false, o.name + ": unit execution differs from the original script");
  }
  const double budget = 29.5 - corpus_seconds;
  const auto sweep = sweep_graphs(5, 8, budget);
  const double seconds = corpus_seconds + since(start);
  for (const auto& f : sweep.first_failures) v.require(false, f);
  std::ostringstream levels;
  for (const auto& l : sweep.levels) levels << " n=" << l.nodes << ":" << l.graphs;
  if (!sweep.complete) {
    const auto& last = sweep.levels.back();
    v.require(false, "graph sweep cut at n=" + std::to_string(last.nodes) + " after " + std::to_string(last.graphs) +
                         " of " + std::to_string(1ull << (last.nodes * (last.nodes - 1) / 2)) +
                         " DAG shapes within the 30 s budget (" + std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
                         " threads); unit executions match on " + std::to_string(ok) + "/" + std::to_string(outs.size()) +
                         " corpus queries");
  }
  v.require(seconds < 30, "runtime " + std::to_string(seconds) + " s exceeds 30 s");
  if (v.pass) {
    v.detail << "unit executions match on " << ok << "/" << outs.size() << " corpus queries; graphs checked" << levels.str()
             << " (" << seconds << " s)";
  }
}

std::vector<std::int64_t> ints_of(const lineage::ResultTable& t) {
  std::vector<std::int64_t> out;
  for (const auto& r : t.rows) {
    for (const auto& c : r) out.push_back(std::get<std::int64_t>(c));
  }
  return out;
}

void probe_metadata(Verdict& v) {
  authoring::Session s("acceptance", mock_workspace());
  s.generate(kFig1Instruction);
  auto meta = [&](const char* id) { return s.resolve_item_metadata(id); };

  const auto cond = meta("non_carci_mol/where.1");
  v.require(cond.expects == sql::Expectation::AtomicAndCompositeCounts && cond.atomic_count == 1 && cond.composite_count == 1,
            "Condition non_carci_mol/where.1: expected atomic 1, composite 1");
  const auto rel = meta("least_com_el/relation");
  v.require(rel.expects == sql::Expectation::RowColCounts && rel.row_count == 62 && rel.col_count == 5,
            "Relation least_com_el/relation: expected 62 rows x 5 columns, got " + std::to_string(rel.row_count) + " x " +
                std::to_string(rel.col_count));
  const auto dim = meta("least_com_el/group");
  std::vector<std::string> elements;
  for (const auto& r : dim.table.rows) elements.push_back(std::get<std::string>(r.at(0)));
  v.require(dim.expects == sql::Expectation::DistinctValues &&
                elements == std::vector<std::string>{"br", "c", "ca", "cl", "cu", "h", "i", "k", "n", "na", "o", "p", "s", "sn"},
            "Dimension least_com_el/group: distinct elements differ");
  const auto calc = meta("least_com_el/order.1");
  auto counts = ints_of(calc.table);
  std::sort(counts.begin(), counts.end());
  v.require(calc.expects == sql::Expectation::SampleValues &&
                counts == std::vector<std::int64_t>{1, 1, 1, 1, 1, 1, 1, 3, 3, 4, 5, 8, 15, 15},
            "Calculation least_com_el/order.1: per-element molecule counts differ");
  const auto out = meta("least_com_el/output");
  v.require(out.expects == sql::Expectation::SampleRecords && out.table.rows.size() == 1 && out.table.total_row_count == 1,
            "Output least_com_el/output: LIMIT 1 should yield 1 record");
  const auto before = ints_of(s.subquery_result("main"));
  authoring::RefinementEdit edit;
  edit.mode = authoring::EditMode::Modify;
  edit.target = authoring::EditTarget::Item;
  edit.target_id = "least_com_el/output";
  edit.instruction = kMultipleLeastCommon;
  s.refine(edit);
  const auto after = ints_of(s.subquery_result("main"));
  v.require(before == std::vector<std::int64_t>{1, 0} && after == std::vector<std::int64_t>{4, 3},
            "refinement flip: expected (1,0) -> (4,3)");
  if (v.pass) v.detail << "five metadata kinds equal hand-audited values; LIMIT 1 -> 1 record; result (1,0) -> (4,3)";
}

void mock_end_to_end(Verdict& v) {
  const auto a = run_mock_scenario()->snapshot().dump(2) + "\n";
  const auto b = run_mock_scenario()->snapshot().dump(2) + "\n";
  const auto golden = read_file(source_dir() / "tests" / "golden" / "session_snapshot.json");
  v.require(a == b, "two runs produced different snapshots");
  v.require(a == golden, "snapshot differs from tests/golden/session_snapshot.json");
  if (v.pass) v.detail << "two runs and the committed golden are byte-identical (" << a.size() << " bytes)";
}

knowledge::KnowledgeRecord record(const std::string& id, const std::string& description) {
  knowledge::KnowledgeRecord r;
  r.id = id;
  const auto hash = id.find('#');
  r.source_script_id = id.substr(0, hash);
  r.description = description;
  if (hash != std::string::npos) {
    r.level = knowledge::Level::Fragment;
    r.kind = sql::KnowledgeKind::Condition;
    r.fragment = knowledge::FragmentRef{id.substr(hash + 1), "main", sql::Clause::Where, "x = 1", {}};
  }
  return r;
}

evalkit::EvalTask retrieval_task(const std::string& id, const std::string& db, std::vector<evalkit::ItemRef> truth) {
  evalkit::EvalTask t;
  t.task_id = id;
  t.database_id = db;
  t.instruction = "instruction for " + id;
  t.ground_truth_items = std::move(truth);
  return t;
}

void retrieval_math(Verdict& v) {
  auto g = mock_gateway_with({
      canned("rerank", {{"instruction", "instruction for A"}}, R"(["s1", "s1#main/where.1", "s2#main/group"])"),
      canned("rerank", {{"instruction", "instruction for B"}}, R"(["s2#main/group", "s2"])"),
      canned("rerank", {{"instruction", "instruction for C"}},
             R"(["s2#main/where.1", "s1#main/where.1", "s1#main/select.1", "s2#main/group"])"),
      canned("rerank", {{"instruction", "instruction for D"}}, R"(["s2"])"),
  });
  knowledge::KnowledgeStore store;
  store.index({record("s1", "count carcinogenic molecules"), record("s2", "bond types"),
               record("s1#main/where.1", "carcinogenic only"), record("s1#main/select.1", "number of molecules"),
               record("s2#main/group", "per bond type"), record("s2#main/where.1", "double bonds")},
              *g);
  const std::vector<evalkit::EvalTask> tasks = {
      retrieval_task("A", "X", {{"s1", "main/where.1"}, {"s1", "main/select.1"}}),
      retrieval_task("B", "X", {{"s2", "main/group"}}),
      retrieval_task("C", "X", {{"s2", "main/where.1"}, {"s1", "main/where.1"}}),
      retrieval_task("D", "Y", {{"s1", "main/select.1"}}),
  };
  const auto rep = evalkit::retrieval_metrics(tasks, store, *g);
  // Hand count over fragment-level records: X has 5 items, 7 retrieved, 4 hits; Y retrieves nothing.
  v.require(rep.rows.size() == 2, "expected one row per database");
  if (rep.rows.size() == 2) {
    const auto& x = rep.rows[0];
    const auto& y = rep.rows[1];
    v.require(x.items == 5 && x.retrieved == 7 && x.hits == 4, "X counts differ from 5/7/4");
    v.require(x.precision == 57.14 && x.recall == 80.0 && x.f1 == 66.66,
              "X P/R/F1 " + std::to_string(x.precision) + "/" + std::to_string(x.recall) + "/" + std::to_string(x.f1) +
                  " differ from 57.14/80.00/66.66");
    v.require(y.items == 1 && y.retrieved == 0 && y.precision == 0 && y.recall == 0 && y.f1 == 0, "Y row is not all zero");
  }

  // similar() against exhaustive cosine over every fragment record.
  std::size_t queries = 0;
  for (const std::string q : {"carcinogenic molecules", "bond type", "double bonds", "number of molecules"}) {
    const auto qv = g->embed_one(q);
    std::vector<std::pair<double, std::string>> expect;
    for (const auto& r : store.records(knowledge::Level::Fragment)) {
      double dot = 0, nq = 0, nr = 0;
      for (std::size_t d = 0; d < qv.size(); ++d) {
        dot += qv[d] * r.embedding[d];
        nq += qv[d] * qv[d];
        nr += r.embedding[d] * r.embedding[d];
      }
      expect.emplace_back(nq * nr == 0 ? 0 : -dot / std::sqrt(nq * nr), r.id);
    }
    std::sort(expect.begin(), expect.end());
    const auto got = store.similar(q, knowledge::Level::Fragment, expect.size(), *g);
    bool same = got.size() == expect.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = std::abs(got[i].score + expect[i].first) < 1e-12;
      // Exact ties may order either way; ids are compared only between distinct scores.
      const bool tied = i + 1 < got.size() && std::abs(expect[i].first - expect[i + 1].first) <= 1e-12;
      const bool tied_before = i > 0 && std::abs(expect[i].first - expect[i - 1].first) <= 1e-12;
      if (same && !tied && !tied_before) same = got[i].record.id == expect[i].second;
    }
    v.require(same, "similar(\"" + q + "\") ranking differs from exhaustive cosine");
    ++queries;
  }
  if (v.pass) v.detail << "X: P 57.14 R 80.00 F1 66.66, Y: 0/0/0 as hand-computed; similar() equals exhaustive cosine on " << queries
                       << " queries";
}

void eval_harness(Verdict& v) {
  const auto fixtures = fixtures_dir();
  const auto store = knowledge::KnowledgeStore::load(fixtures / "eval" / "store.jsonl");
  const auto dict = knowledge::DataDictionary::load(fixtures / "toxicology_dictionary.json");
  const auto tasks = evalkit::load_tasks(fixtures / "eval" / "tasks.json");
  const auto histories = extraction::histories_from_store(store, extraction::load_scripts(fixtures / "eval" / "histories.json"));
  lineage::Database db(toxicology_db());
  auto llm = mock_gateway();

  const auto recon = evalkit::reconstruction_report_json({evalkit::reconstruction_accuracy("toxicology", db, histories, dict, *llm)});
  const auto retr = evalkit::retrieval_report_json(evalkit::retrieval_metrics(tasks, store, *llm));
  const evalkit::AblationContext ctx{db, dict, &store, *llm, 1};
  std::vector<evalkit::AblationResult> modes;
  for (auto m : {evalkit::Mode::Direct, evalkit::Mode::Rag, evalkit::Mode::Refine, evalkit::Mode::Pipeline}) {
    modes.push_back(evalkit::run_ablation(tasks, m, ctx));
  }
  const auto abl = evalkit::ablation_report_json(modes);

  auto shape = [&](const json& rep, const json& columns, const std::string& name) {
    v.require(rep.at("columns") == columns, name + ": columns differ");
    for (const auto* section : {"rows", "reference"}) {
      for (const auto& r : rep.at(section)) {
        for (const auto& c : columns) v.require(r.contains(c.get<std::string>()), name + ": row lacks " + c.get<std::string>());
      }
    }
    for (const auto& x : evalkit::check_identities(rep)) v.require(false, name + ": " + x);
  };
  shape(recon, {"Database", "History", "Success", "Success Ratio"}, "reconstruction");
  shape(retr, {"Database", "Items", "Retrieved", "Precision", "Recall", "F1"}, "retrieval");
  shape(abl, {"Database", "Mode", "Tasks", "Success", "Success Ratio"}, "ablation");
  v.require(recon.at("reference").at(0).at("Success Ratio") == 95.86, "reconstruction reference lacks Toxicology 95.86");

  std::string live = "live ordering skipped: SQLKNOW_LLM_URL unset";
  if (std::getenv("SQLKNOW_LLM_URL")) {
    const char* t = std::getenv("SQLKNOW_ACCEPT_TASKS");
    const char* d = std::getenv("SQLKNOW_ACCEPT_DB");
    const char* s = std::getenv("SQLKNOW_ACCEPT_STORE");
    const char* dd = std::getenv("SQLKNOW_ACCEPT_DICT");
    if (!t || !d || !s) {
      v.require(false, "live run needs SQLKNOW_ACCEPT_TASKS, SQLKNOW_ACCEPT_DB and SQLKNOW_ACCEPT_STORE");
    } else {
      const auto live_tasks = evalkit::load_tasks(t);
      v.require(live_tasks.size() >= 20, "live run needs at least 20 tasks");
      auto gw = llm::make_live_gateway(llm::default_prompt_dir());
      lineage::Database ldb(d);
      const auto lstore = knowledge::KnowledgeStore::load(s);
      const auto ldict = dd ? knowledge::DataDictionary::load(dd) : knowledge::DataDictionary{};
      const evalkit::AblationContext lctx{ldb, ldict, &lstore, *gw, 4};
      const auto direct = evalkit::run_ablation(live_tasks, evalkit::Mode::Direct, lctx).rows.at(0).success_ratio;
      const auto rag = evalkit::run_ablation(live_tasks, evalkit::Mode::Rag, lctx).rows.at(0).success_ratio;
      const auto pipe = evalkit::run_ablation(live_tasks, evalkit::Mode::Pipeline, lctx).rows.at(0).success_ratio;
      std::ostringstream o;
      o << "live Direct " << direct << " < RAG " << rag << " <= Pipeline " << pipe;
      v.require(direct < rag && rag <= pipe, o.str() + " does not hold");
      live = o.str();
    }
  }
  if (v.pass) {
    v.detail << "reports match the published columns, F1 and ratio identities hold on " << recon["rows"].size() + retr["rows"].size() + abl["rows"].size()
             << " rows and every reference row; mock Direct " << abl["rows"][0]["Success Ratio"] << " < RAG "
             << abl["rows"][1]["Success Ratio"] << " <= Pipeline " << abl["rows"][3]["Success Ratio"] << "; " << live;
  }
}

void refine_cap(Verdict& v) {
  const auto fixtures = fixtures_dir();
  const auto store = knowledge::KnowledgeStore::load(fixtures / "eval" / "store.jsonl");
  const auto dict = knowledge::DataDictionary::load(fixtures / "toxicology_dictionary.json");
  const auto tasks = evalkit::load_tasks(fixtures / "eval" / "tasks.json");
  lineage::Database db(toxicology_db());
  // Generation is always wrong and revision never changes the SQL.
  auto g = mock_gateway_with({canned("generate_sql", {}, "SELECT 1 AS wrong")});
  const auto r = evalkit::run_ablation(tasks, evalkit::Mode::Refine, evalkit::AblationContext{db, dict, &store, *g, 1});
  int max_steps = 0;
  for (const auto& o : r.outcomes) max_steps = std::max(max_steps, o.refine_steps);
  std::size_t revisions = 0;
  for (const auto& x : g->transcript().entries()) revisions += x.template_id == "revise_sql";
  v.require(max_steps <= evalkit::kMaxRefineSteps, "a task ran " + std::to_string(max_steps) + " rounds");
  v.require(revisions <= evalkit::kMaxRefineSteps * r.outcomes.size(),
            std::to_string(revisions) + " revise calls for " + std::to_string(r.outcomes.size()) + " tasks");
  v.require(r.rows.at(0).success == 0, "the non-converging fixture converged");
  const auto asked = evalkit::refine_loop(db, "SELECT 1", tasks.front().ground_truth_sql, *g, 50);
  v.require(asked.steps <= evalkit::kMaxRefineSteps, "refine_loop honoured a cap above 5");
  if (v.pass) {
    v.detail << r.outcomes.size() << " never-converging tasks stop at " << max_steps << " rounds (" << revisions
             << " revise calls); a requested cap of 50 runs " << asked.steps;
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria = {
      {"Parser corpus", parser_corpus},   {"Lineage oracle", lineage_oracle}, {"Probe metadata", probe_metadata},
      {"Mock end-to-end", mock_end_to_end}, {"Retrieval math", retrieval_math}, {"Eval harness shape", eval_harness},
      {"Refine loop cap", refine_cap},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("threw: ") + e.what());
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail.str() << std::endl;
  }
  return failed ? 1 : 0;
}
