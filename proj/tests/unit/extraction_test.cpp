#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "support/knowledge_fixture.hpp"
#include "sqlknow/errors.hpp"

namespace sqlknow::extraction {
namespace {

using sqlknow::testing::history_dir;
using sqlknow::testing::mock_gateway;
using sqlknow::testing::quick_options;
using sqlknow::testing::read_file;
using sqlknow::testing::scratch;
using sqlknow::testing::toxicology_db;
using sqlknow::testing::toxicology_dictionary;

struct ExtractionFixture : ::testing::Test {
  std::shared_ptr<llm::Transcript> transcript = std::make_shared<llm::Transcript>();
  std::shared_ptr<llm::Gateway> llm = mock_gateway(transcript);
  knowledge::DataDictionary dict = toxicology_dictionary(*llm);
  lineage::Database db{toxicology_db()};
  sql::Catalog catalog = db.catalog();

  OfflineResult run(const std::vector<HistoricalScript>& scripts, OfflineOptions o = quick_options()) {
    return run_offline(scripts, dict, *llm, &catalog, o);
  }
};

std::shared_ptr<llm::Gateway> gateway_with(std::vector<llm::MockEntry> entries) {
  return std::make_shared<llm::Gateway>(llm::TemplateRegistry::load(llm::default_prompt_dir()),
                                        std::make_shared<llm::MockBackend>(std::move(entries)),
                                        std::make_shared<llm::HashingEmbedder>(), std::make_shared<llm::Transcript>());
}

TEST_F(ExtractionFixture, OneScriptRecordPlusOneRecordPerFragment) {
  const auto res = run(load_scripts(history_dir()));
  // Hand count of fragments per history script, in file order.
  const std::vector<std::size_t> fragments{5, 3, 4, 4, 4, 5};
  ASSERT_EQ(res.report.scripts.size(), 6u);
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    EXPECT_TRUE(res.report.scripts[i].indexed) << res.report.scripts[i].error;
    EXPECT_EQ(res.report.scripts[i].fragment_count, fragments[i]) << res.report.scripts[i].script_id;
  }
  EXPECT_EQ(res.report.script_records, 6u);
  EXPECT_EQ(res.report.fragment_records, 25u);
  EXPECT_EQ(res.store.size(knowledge::Level::Script), 6u);
  EXPECT_EQ(res.store.size(knowledge::Level::Fragment), 25u);
  EXPECT_EQ(res.store.size(), 31u);
}

TEST_F(ExtractionFixture, RerunProducesByteIdenticalStore) {
  const auto scripts = load_scripts(history_dir());
  const auto a = scratch().path() / "extract_a.jsonl";
  const auto b = scratch().path() / "extract_b.jsonl";
  run(scripts).store.save(a);
  run(scripts).store.save(b);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_FALSE(read_file(a).empty());
}

TEST_F(ExtractionFixture, ParallelWorkersMatchSequentialRun) {
  const auto scripts = load_scripts(history_dir());
  auto o = quick_options();
  o.workers = 3;
  const auto a = scratch().path() / "extract_seq.jsonl";
  const auto b = scratch().path() / "extract_par.jsonl";
  run(scripts).store.save(a);
  run(scripts, o).store.save(b);
  EXPECT_EQ(read_file(a), read_file(b));
}

TEST_F(ExtractionFixture, EmptyCorpusGivesEmptyStore) {
  const auto res = run({});
  EXPECT_EQ(res.store.size(), 0u);
  EXPECT_TRUE(res.report.scripts.empty());
  EXPECT_TRUE(res.histories.empty());
}

TEST_F(ExtractionFixture, UnparseableScriptIsSkippedWithReason) {
  auto scripts = load_scripts(history_dir());
  scripts.insert(scripts.begin() + 2, {"broken", "SELECT FROM WHERE"});
  const auto res = run(scripts);
  ASSERT_EQ(res.report.scripts.size(), 7u);
  EXPECT_FALSE(res.report.scripts[2].indexed);
  EXPECT_FALSE(res.report.scripts[2].error.empty());
  ASSERT_EQ(res.report.skipped().size(), 1u);
  EXPECT_EQ(res.report.skipped().front()->script_id, "broken");
  EXPECT_EQ(res.report.script_records, 6u);
  EXPECT_FALSE(res.store.find("broken").has_value());
}

TEST_F(ExtractionFixture, PaperFragmentAndScriptDescriptions) {
  const auto res = run(load_scripts(history_dir()));
  const auto join = res.store.find("h01_least_common_element#main/relation");
  ASSERT_TRUE(join.has_value());
  EXPECT_EQ(join->description, "Join atoms and molecules to filter molecules with known carcinogenicity.");
  const auto script = res.store.find("h01_least_common_element");
  ASSERT_TRUE(script.has_value());
  EXPECT_EQ(script->description, "Find the least common element.");
  EXPECT_EQ(script->template_version, "describe_script@1");
  EXPECT_EQ(join->template_version, "describe_fragment@1");
}

TEST_F(ExtractionFixture, DictionaryRowsReachFragmentPrompts) {
  const auto res = run(load_scripts(history_dir()));
  const auto cond = res.store.find("h03_non_carcinogenic_molecules#main/where.1");
  ASSERT_TRUE(cond.has_value());
  std::string lowered = cond->description;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
  EXPECT_NE(lowered.find("non-carcinogenic"), std::string::npos);

  bool seen = false;
  for (const auto& x : transcript->entries()) {
    if (x.template_id != "describe_fragment" || x.variables.at("fragment_sql") != "T2.label = '-'") continue;
    seen = true;
    const auto& d = x.variables.at("dictionary");
    EXPECT_NE(d.find("molecule.label: + means carcinogenic, - means non-carcinogenic."), std::string::npos);
    EXPECT_EQ(d.find("bond."), std::string::npos) << "only referenced tables belong in the context";
    EXPECT_NE(x.rendered_prompt.find(d), std::string::npos);
  }
  EXPECT_TRUE(seen);
}

TEST_F(ExtractionFixture, TransientFailuresAreRetried) {
  llm::MockEntry flaky;
  flaky.template_id = "describe_script";
  flaky.response = "A script.";
  flaky.error = "upstream timeout";
  flaky.fail_times = 2;
  auto g = gateway_with({flaky});
  const auto res = run_offline({{"s", "SELECT label FROM molecule"}}, dict, *g, &catalog, quick_options());
  ASSERT_EQ(res.report.scripts.size(), 1u);
  EXPECT_TRUE(res.report.scripts[0].indexed);
  EXPECT_EQ(res.report.scripts[0].llm_retries, 2);
  EXPECT_EQ(res.store.find("s")->description, "A script.");
}

TEST_F(ExtractionFixture, ExhaustedRetriesSkipTheScript) {
  llm::MockEntry down;
  down.template_id = "describe_script";
  down.error = "service unavailable";
  auto g = gateway_with({down});
  auto o = quick_options();
  o.retries = 1;
  const auto res = run_offline({{"s", "SELECT label FROM molecule"}, {"t", "SELECT element FROM atom"}}, dict, *g,
                               &catalog, o);
  EXPECT_EQ(res.report.skipped().size(), 2u);
  EXPECT_EQ(res.report.scripts[0].llm_retries, 1);
  EXPECT_NE(res.report.scripts[0].error.find("service unavailable"), std::string::npos);
  EXPECT_EQ(res.store.size(), 0u);
}

TEST_F(ExtractionFixture, HistoriesRebuiltFromStoreMatchTheRun) {
  const auto scripts = load_scripts(history_dir());
  const auto res = run(scripts);
  const auto rebuilt = histories_from_store(res.store, scripts);
  ASSERT_EQ(rebuilt.size(), res.histories.size());
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    EXPECT_EQ(rebuilt[i].script_id, res.histories[i].script_id);
    EXPECT_EQ(rebuilt[i].script_description, res.histories[i].script_description);
    ASSERT_EQ(rebuilt[i].fragment_records.size(), res.histories[i].fragment_records.size());
    for (std::size_t k = 0; k < rebuilt[i].fragment_records.size(); ++k) {
      EXPECT_EQ(rebuilt[i].fragment_records[k].id, res.histories[i].fragment_records[k].id);
    }
  }
}

TEST_F(ExtractionFixture, WholeCorpusIsIndexed) {
  std::vector<HistoricalScript> scripts;
  for (const auto& q : sqlknow::testing::corpus()) scripts.push_back({q.name, q.sql});
  ASSERT_GE(scripts.size(), 50u);
  const auto res = run(scripts);
  EXPECT_TRUE(res.report.skipped().empty());
  EXPECT_EQ(res.report.script_records, scripts.size());
  EXPECT_EQ(res.store.size(knowledge::Level::Script), scripts.size());
}

TEST(LoadScripts, DirectoryJsonAndJsonLines) {
  const auto dir = load_scripts(history_dir());
  ASSERT_EQ(dir.size(), 6u);
  EXPECT_EQ(dir.front().id, "h01_least_common_element");
  const auto json_path = scratch().path() / "scripts.json";
  const auto jsonl_path = scratch().path() / "scripts.jsonl";
  std::ofstream(json_path) << R"([{"id": "a", "sql": "SELECT 1"}, {"id": "b", "sql": "SELECT 2"}])";
  std::ofstream(jsonl_path) << "{\"id\": \"a\", \"sql\": \"SELECT 1\"}\n\n{\"id\": \"b\", \"sql\": \"SELECT 2\"}\n";
  for (const auto& p : {json_path, jsonl_path}) {
    const auto s = load_scripts(p);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].id, "b");
    EXPECT_EQ(s[1].sql_text, "SELECT 2");
  }
  EXPECT_THROW(load_scripts(scratch().path() / "missing.sql"), NotFoundError);
}

TEST(OfflineReportJson, CountsAndSkippedReasons) {
  OfflineReport r;
  r.scripts.push_back({"a", true, 3, 0, ""});
  r.scripts.push_back({"b", false, 0, 1, "syntax error"});
  r.script_records = 1;
  r.fragment_records = 3;
  nlohmann::json j = r;
  EXPECT_EQ(j.at("script_records"), 1);
  EXPECT_EQ(j.at("fragment_records"), 3);
  EXPECT_EQ(j.at("scripts").size(), 2u);
  ASSERT_EQ(j.at("skipped").size(), 1u);
  EXPECT_EQ(j.at("skipped")[0].at("reason"), "syntax error");
}

}  // namespace
}  // namespace sqlknow::extraction
