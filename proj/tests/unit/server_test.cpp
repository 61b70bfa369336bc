#include <gtest/gtest.h>

#include <future>
#include <set>
#include <thread>

#include "httplib.h"
#include "sqlknow/errors.hpp"
#include "sqlknow/server/service.hpp"
#include "support/scenario.hpp"

namespace sqlknow::server {
namespace {

using nlohmann::json;
using sqlknow::testing::canned;
using sqlknow::testing::history_dir;
using sqlknow::testing::kFig1Instruction;
using sqlknow::testing::kMultipleLeastCommon;
using sqlknow::testing::mock_gateway_with;
using sqlknow::testing::scratch;
using sqlknow::testing::toxicology_db;

// Dictionary and history store written once per process.
struct Prepared {
  std::filesystem::path dictionary;
  std::filesystem::path store;
};

const Prepared& prepared() {
  static const Prepared p = [] {
    auto llm = sqlknow::testing::mock_gateway();
    const auto dict = sqlknow::testing::toxicology_dictionary(*llm);
    Prepared out{scratch().path() / "server_dictionary.json", scratch().path() / "server_store.jsonl"};
    dict.save(out.dictionary);
    sqlknow::testing::history_extraction(dict, *llm).store.save(out.store);
    return out;
  }();
  return p;
}

std::filesystem::path fresh_dir(const std::string& name) {
  static int n = 0;
  auto p = scratch().path() / (name + "-" + std::to_string(++n));
  std::filesystem::create_directories(p);
  return p;
}

ServerConfig test_config(const std::filesystem::path& dir) {
  ServerConfig c;
  c.port = 0;
  c.database_path = toxicology_db();
  c.database_id = "toxicology";
  c.store_path = (dir / "store.jsonl").string();
  c.dictionary_path = (dir / "dictionary.json").string();
  c.sessions_dir = (dir / "sessions").string();
  c.cors_origins = {"http://localhost:5173"};
  c.http_threads = 4;
  c.probe_workers = 2;
  c.llm_provider = "mock";
  if (!std::filesystem::exists(c.store_path)) std::filesystem::copy_file(prepared().store, c.store_path);
  if (!std::filesystem::exists(c.dictionary_path)) std::filesystem::copy_file(prepared().dictionary, c.dictionary_path);
  return c;
}

class Running {
 public:
  Running(const ServerConfig& config, std::vector<llm::MockEntry> first = {})
      : service_(config, mock_gateway_with(std::move(first))) {
    service_.install(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(60, 0);
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }

  Service& service() { return service_; }
  httplib::Client& client() { return *client_; }

  std::pair<int, json> get(const std::string& path) { return unpack(client_->Get(path)); }
  std::pair<int, json> post(const std::string& path, const json& body) {
    return unpack(client_->Post(path, body.dump(), "application/json"));
  }
  std::pair<int, json> put(const std::string& path, const json& body) {
    return unpack(client_->Put(path, body.dump(), "application/json"));
  }
  std::string new_session() {
    auto [status, body] = post("/sessions", {{"database_id", "toxicology"}});
    EXPECT_EQ(status, 200) << body;
    return body.at("session_id");
  }

 private:
  static std::pair<int, json> unpack(const httplib::Result& r) {
    if (!r) return {0, json()};
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }

  Service service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

json modify_limit() {
  return {{"mode", "Modify"}, {"target", {{"type", "Item"}, {"id", "least_com_el/output"}}}, {"instruction", kMultipleLeastCommon}};
}

bool has_title(const json& summary, const std::string& title) {
  for (const auto& i : summary.at("items")) {
    if (i.at("title") == title) return true;
  }
  return false;
}

// ---------------------------------------------------------------- config

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_THROW(ServerConfig::from_json({{"database_path", "x.db"}, {"prot", 1}}), ValidationError);
  EXPECT_THROW(ServerConfig::from_json({{"port", 70000}}), ValidationError);
  EXPECT_THROW(ServerConfig::from_json(json::array()), ValidationError);
}

TEST(Config, LoadsEveryField) {
  const auto path = fresh_dir("config") / "server.json";
  const json j = {{"host", "0.0.0.0"},          {"port", 9000},           {"database_path", "db.sqlite"},
                  {"database_id", "tox"},        {"store_path", "s.jsonl"}, {"dictionary_path", "d.json"},
                  {"sessions_dir", "sess"},      {"cors_origins", {"*"}},   {"http_threads", 2},
                  {"probe_workers", 3},          {"max_body_bytes", 4096},  {"llm_provider", "mock"},
                  {"mock_path", "m.json"},       {"replay_path", "r.jsonl"}, {"transcript_path", "t.jsonl"},
                  {"prompt_dir", "prompts"},     {"llm_env", {{"SQLKNOW_LLM_MODEL", "m"}}}};
  std::ofstream(path) << j.dump();
  const auto c = ServerConfig::load(path);
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.database_id, "tox");
  EXPECT_EQ(c.cors_origins, std::vector<std::string>{"*"});
  EXPECT_EQ(c.http_threads, 2u);
  EXPECT_EQ(c.probe_workers, 3u);
  EXPECT_EQ(c.max_body_bytes, 4096u);
  EXPECT_EQ(c.llm_provider, "mock");
  EXPECT_EQ(c.llm_env.at("SQLKNOW_LLM_MODEL"), "m");
}

TEST(Config, ProviderSelection) {
  ServerConfig c;
  c.llm_provider = "mock";
  EXPECT_EQ(make_gateway(c)->provider(), llm::Provider::Mock);
  c.llm_provider = "replay";
  EXPECT_THROW(make_gateway(c), ValidationError);
  c.llm_provider = "oracle";
  EXPECT_THROW(make_gateway(c), ValidationError);
}

TEST(Config, MissingDatabaseIsNotFound) {
  auto c = test_config(fresh_dir("nodb"));
  c.database_path = (scratch().path() / "absent.db").string();
  EXPECT_THROW(Service(c, sqlknow::testing::mock_gateway()), NotFoundError);
}

TEST(Errors, StatusMapping) {
  EXPECT_EQ(status_for(ValidationError("x")), 400);
  EXPECT_EQ(status_for(SyntaxError(0, "x", "y")), 400);
  EXPECT_EQ(status_for(NotFoundError("x")), 404);
  EXPECT_EQ(status_for(StaleGenerationError(1, 2)), 409);
  EXPECT_EQ(status_for(RefusalError("x")), 422);
  EXPECT_EQ(status_for(LlmError("x", "t7")), 502);
  EXPECT_EQ(status_for(GenerationParseError("x", "raw")), 502);
  EXPECT_EQ(status_for(std::runtime_error("x")), 500);
  EXPECT_EQ(error_body(LlmError("x", "t7"))["error"]["transcript_id"], "t7");
  const auto stale = error_body(StaleGenerationError(1, 2))["error"];
  EXPECT_EQ(stale["requested_generation"], 1);
  EXPECT_EQ(stale["current_generation"], 2);
}

// ---------------------------------------------------------------- routes

TEST(Server, HealthReportsStoreAndProvider) {
  Running r(test_config(fresh_dir("health")));
  auto [status, body] = r.get("/health");
  ASSERT_EQ(status, 200);
  EXPECT_EQ(body["status"], "ok");
  EXPECT_EQ(body["database_id"], "toxicology");
  EXPECT_EQ(body["provider"], "Mock");
  EXPECT_GT(body["store"]["fragment_records"].get<int>(), 0);
  EXPECT_EQ(body["sessions"], 0);
}

TEST(Server, SessionCreationValidatesDatabase) {
  Running r(test_config(fresh_dir("create")));
  auto [ok, handle] = r.post("/sessions", {{"database_id", "toxicology"}});
  ASSERT_EQ(ok, 200);
  EXPECT_EQ(handle["session_id"], "s1");
  EXPECT_EQ(handle["current_generation"], 0);
  EXPECT_FALSE(handle["created_at"].get<std::string>().empty());
  EXPECT_EQ(r.post("/sessions", {{"database_id", "financial"}}).first, 404);
  EXPECT_EQ(r.post("/sessions", json::object()).first, 400);
  auto res = r.client().Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body)["error"]["type"], "ValidationError");
  EXPECT_EQ(r.get("/sessions/s1").second, handle);
  EXPECT_EQ(r.get("/sessions/s99").first, 404);
}

TEST(Server, GenerateServesSummaryGraphAndKnowledge) {
  Running r(test_config(fresh_dir("generate")));
  const auto id = r.new_session();
  auto [status, summary] = r.post("/sessions/" + id + "/generate", {{"instruction", kFig1Instruction}});
  ASSERT_EQ(status, 200) << summary;
  EXPECT_EQ(summary["generation"], 1);
  EXPECT_TRUE(has_title(summary, "Limit to 1 result"));
  for (const auto& i : summary["items"]) EXPECT_EQ(i["metadata"], "pending");

  auto [gs, graph] = r.get("/sessions/" + id + "/graph");
  ASSERT_EQ(gs, 200);
  EXPECT_EQ(graph["generation"], 1);
  std::set<std::string> units;
  for (const auto& u : graph["nodes"]) units.insert(u["id"].get<std::string>());
  EXPECT_TRUE(units.count("least_com_el")) << graph;

  auto [ks, view] = r.get("/sessions/" + id + "/knowledge");
  ASSERT_EQ(ks, 200);
  EXPECT_EQ(view["generation"], 1);
  std::size_t items = 0;
  for (const auto& g : view["groups"]) items += g["items"].size();
  EXPECT_EQ(items, summary["items"].size());

  EXPECT_EQ(r.get("/sessions/" + id).second["current_generation"], 1);
}

TEST(Server, ReadsBeforeGenerateAreNotFound) {
  Running r(test_config(fresh_dir("empty")));
  const auto id = r.new_session();
  EXPECT_EQ(r.get("/sessions/" + id + "/graph").first, 404);
  EXPECT_EQ(r.get("/sessions/" + id + "/knowledge").first, 404);
  EXPECT_EQ(r.post("/sessions/" + id + "/generate", json::object()).first, 400);
}

TEST(Server, ItemAndSubqueryResultsHonourGeneration) {
  Running r(test_config(fresh_dir("items")));
  const auto id = r.new_session();
  ASSERT_EQ(r.post("/sessions/" + id + "/generate", {{"instruction", kFig1Instruction}}).first, 200);

  auto [s1, limit] = r.get("/sessions/" + id + "/items/least_com_el%2Foutput/result?generation=1");
  ASSERT_EQ(s1, 200) << limit;
  EXPECT_EQ(limit["fragment_id"], "least_com_el/output");
  EXPECT_EQ(limit["generation"], 1);
  EXPECT_EQ(limit["expects"], "SampleRecords");
  EXPECT_EQ(limit["payload"]["sample_records"]["rows"].size(), 1u);
  auto [s2, same] = r.get("/sessions/" + id + "/items/least_com_el/output/result");
  ASSERT_EQ(s2, 200);
  EXPECT_EQ(same, limit);

  auto [s3, sub] = r.get("/sessions/" + id + "/subqueries/least_com_el/result?generation=1");
  ASSERT_EQ(s3, 200);
  EXPECT_EQ(sub["rows"].size(), 1u);

  EXPECT_EQ(r.get("/sessions/" + id + "/items/nowhere%2Foutput/result").first, 404);
  EXPECT_EQ(r.get("/sessions/" + id + "/subqueries/nowhere/result").first, 404);
  EXPECT_EQ(r.get("/sessions/" + id + "/subqueries/least_com_el/result?generation=abc").first, 400);

  ASSERT_EQ(r.post("/sessions/" + id + "/refine", modify_limit()).first, 200);
  auto [stale, err] = r.get("/sessions/" + id + "/items/least_com_el%2Foutput/result?generation=1");
  EXPECT_EQ(stale, 409);
  EXPECT_EQ(err["error"]["current_generation"], 2);
}

TEST(Server, RefineReturnsDiffAndValidatesEdits) {
  Running r(test_config(fresh_dir("refine")));
  const auto id = r.new_session();
  EXPECT_EQ(r.post("/sessions/" + id + "/refine", modify_limit()).first, 404);
  ASSERT_EQ(r.post("/sessions/" + id + "/generate", {{"instruction", kFig1Instruction}}).first, 200);

  auto [status, summary] = r.post("/sessions/" + id + "/refine", modify_limit());
  ASSERT_EQ(status, 200) << summary;
  EXPECT_EQ(summary["generation"], 2);
  EXPECT_FALSE(has_title(summary, "Limit to 1 result"));
  EXPECT_FALSE(summary["diff"]["added"].empty());
  EXPECT_NE(std::find(summary["diff"]["removed"].begin(), summary["diff"]["removed"].end(), "least_com_el/output"),
            summary["diff"]["removed"].end());

  EXPECT_EQ(r.post("/sessions/" + id + "/refine", {{"mode", "Rewrite"}, {"target", {{"type", "Item"}, {"id", "x"}}}}).first, 400);
  EXPECT_EQ(r.post("/sessions/" + id + "/refine", {{"mode", "Modify"}, {"target", {{"type", "Item"}, {"id", "least_com_el/group"}}}}).first,
            400);
  EXPECT_EQ(r.post("/sessions/" + id + "/refine",
                   {{"mode", "Delete"}, {"target", {{"type", "Item"}, {"id", "nowhere/output"}}}})
                .first,
            404);
  EXPECT_EQ(r.get("/sessions/" + id).second["current_generation"], 2);
}

TEST(Server, LlmFailureIs502WithTranscriptId) {
  Running r(test_config(fresh_dir("llmfail")),
            {[] {
              auto e = canned("generate_sql", {{"instruction", "Break the endpoint."}}, "");
              e.error = "endpoint unavailable";
              return e;
            }()});
  const auto id = r.new_session();
  auto [status, body] = r.post("/sessions/" + id + "/generate", {{"instruction", "Break the endpoint."}});
  EXPECT_EQ(status, 502);
  EXPECT_EQ(body["error"]["type"], "LlmError");
  ASSERT_TRUE(body["error"].contains("transcript_id")) << body;
  EXPECT_FALSE(body["error"]["transcript_id"].get<std::string>().empty());
  EXPECT_EQ(r.get("/sessions/" + id).second["current_generation"], 0);
}

TEST(Server, UnknownRouteIsJson404) {
  Running r(test_config(fresh_dir("route")));
  auto [status, body] = r.get("/nothing/here");
  EXPECT_EQ(status, 404);
  EXPECT_EQ(body["error"]["type"], "NotFoundError");
}

TEST(Server, CorsAllowsConfiguredOriginsOnly) {
  Running r(test_config(fresh_dir("cors")));
  auto allowed = r.client().Get("/health", {{"Origin", "http://localhost:5173"}});
  ASSERT_TRUE(allowed);
  EXPECT_EQ(allowed->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  auto denied = r.client().Get("/health", {{"Origin", "http://evil.example"}});
  ASSERT_TRUE(denied);
  EXPECT_FALSE(denied->has_header("Access-Control-Allow-Origin"));
  auto preflight = r.client().Options("/sessions", {{"Origin", "http://localhost:5173"}});
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);
  EXPECT_NE(preflight->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(Server, DictionaryEditsPersistAndComplete) {
  const auto dir = fresh_dir("dict");
  Running r(test_config(dir));
  auto [gs, dict] = r.get("/dictionary");
  ASSERT_EQ(gs, 200);
  EXPECT_FALSE(dict["columns"].empty());

  auto [ps, edited] = r.put("/dictionary", {{"columns", {{{"table", "bond"}, {"column", "bond_type"}, {"description", "Bond kind: - single, = double, # triple."}}}}});
  ASSERT_EQ(ps, 200) << edited;
  const auto saved = knowledge::DataDictionary::load(dir / "dictionary.json");
  ASSERT_NE(saved.find("bond", "bond_type"), nullptr);
  EXPECT_EQ(saved.find("bond", "bond_type")->description, "Bond kind: - single, = double, # triple.");
  EXPECT_TRUE(saved.find("bond", "bond_type")->user_edited);
  EXPECT_EQ(r.put("/dictionary", {{"columns", {{{"table", "bond"}, {"column", "nope"}, {"description", "x"}}}}}).first, 404);
  EXPECT_EQ(r.put("/dictionary", {{"columns", "all"}}).first, 400);

  auto [cs, completion] = r.post("/dictionary/complete", {{"table", "molecule"}, {"column", "label"}, {"partial", "+ means carcinogenic"}});
  ASSERT_EQ(cs, 200) << completion;
  EXPECT_EQ(completion["table"], "molecule");
  EXPECT_EQ(completion["completion"].get<std::string>().rfind("+ means carcinogenic", 0), 0u);
  EXPECT_EQ(r.post("/dictionary/complete", {{"table", "molecule"}, {"column", "label"}, {"partial", ""}}).first, 400);
  EXPECT_EQ(r.post("/dictionary/complete", {{"table", "nope"}, {"column", "label"}, {"partial", "x"}}).first, 404);
}

TEST(Server, OfflineExtractUpsertsAndSavesStore) {
  const auto dir = fresh_dir("extract");
  auto config = test_config(dir);
  std::filesystem::remove(config.store_path);
  Running r(config);
  EXPECT_EQ(r.get("/health").second["store"]["fragment_records"], 0);
  auto [status, report] = r.post("/offline/extract", {{"scripts_path", history_dir().string()}});
  ASSERT_EQ(status, 200) << report;
  const auto fragments = report["store"]["fragment_records"].get<std::size_t>();
  EXPECT_GT(fragments, 0u);
  EXPECT_EQ(knowledge::KnowledgeStore::load(config.store_path).size(knowledge::Level::Fragment), fragments);
  ASSERT_EQ(r.post("/offline/extract", {{"scripts_path", history_dir().string()}}).first, 200);
  EXPECT_EQ(r.get("/health").second["store"]["fragment_records"], fragments);
  EXPECT_EQ(r.post("/offline/extract", {{"scripts_path", (dir / "missing").string()}}).first, 404);
}

TEST(Server, RestartRestoresSessionsWithIdenticalReads) {
  const auto dir = fresh_dir("restore");
  const auto config = test_config(dir);
  std::map<std::string, std::string> before;
  const std::vector<std::string> paths = {"/sessions/s1", "/sessions/s1/graph", "/sessions/s1/knowledge",
                                          "/sessions/s1/items/least_com_el%2Fgroup/result", "/sessions/s2"};
  {
    Running r(config);
    r.new_session();
    r.new_session();
    ASSERT_EQ(r.post("/sessions/s1/generate", {{"instruction", kFig1Instruction}}).first, 200);
    ASSERT_EQ(r.post("/sessions/s1/refine", modify_limit()).first, 200);
    for (const auto& p : paths) before[p] = r.client().Get(p)->body;
  }
  Running again(config);
  EXPECT_EQ(again.service().restored_count(), 2u);
  for (const auto& p : paths) EXPECT_EQ(again.client().Get(p)->body, before[p]) << p;
  EXPECT_EQ(again.new_session(), "s3");
}

TEST(Server, MutationsOfOneSessionAreSerialized) {
  Running r(test_config(fresh_dir("serial")));
  const auto a = r.new_session();
  const auto b = r.new_session();
  std::vector<std::future<std::pair<int, json>>> calls;
  for (int i = 0; i < 3; ++i) {
    for (const auto& id : {a, b}) {
      calls.push_back(std::async(std::launch::async, [&r, id] {
        httplib::Client c(r.client().host(), r.client().port());
        c.set_read_timeout(60, 0);
        auto res = c.Post("/sessions/" + id + "/generate", json{{"instruction", kFig1Instruction}}.dump(), "application/json");
        return std::pair<int, json>{res ? res->status : 0, res ? json::parse(res->body) : json()};
      }));
    }
  }
  std::map<bool, std::multiset<long long>> generations;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    auto [status, body] = calls[i].get();
    ASSERT_EQ(status, 200) << body;
    generations[i % 2 == 0].insert(body["generation"].get<long long>());
  }
  const std::multiset<long long> expected{1, 2, 3};
  EXPECT_EQ(generations[true], expected);
  EXPECT_EQ(generations[false], expected);
  EXPECT_EQ(r.get("/sessions/" + a).second["current_generation"], 3);
}

}  // namespace
}  // namespace sqlknow::server
