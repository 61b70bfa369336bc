#include "sqlknow/server/service.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>

#include "httplib.h"
#include "sqlknow/errors.hpp"
#include "sqlknow/extraction/offline.hpp"

namespace sqlknow::server {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

std::string now_utc() {
  const auto t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON body: ") + e.what());
  }
}

std::string required_string(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) throw ValidationError(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<long long> generation_param(const httplib::Request& req) {
  if (!req.has_param("generation")) return std::nullopt;
  const auto v = req.get_param_value("generation");
  try {
    std::size_t used = 0;
    const auto g = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return g;
  } catch (const std::exception&) {
    throw ValidationError("generation must be an integer, got '" + v + "'");
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw NotFoundError("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// Runs `fn` and writes its JSON result, or the mapped error.
template <class F>
void respond(httplib::Response& res, F&& fn) {
  try {
    res.set_content(fn().dump(), kJson);
    res.status = 200;
  } catch (const std::exception& e) {
    res.status = status_for(e);
    res.set_content(error_body(e).dump(), kJson);
  }
}

}  // namespace

// ---------------------------------------------------------------- config

ServerConfig ServerConfig::from_json(const json& j) {
  static const std::set<std::string> known{
      "host",          "port",          "database_path", "database_id",    "store_path",  "dictionary_path",
      "sessions_dir",  "cors_origins",  "http_threads",  "probe_workers",  "max_body_bytes", "llm_provider",
      "mock_path",     "replay_path",   "transcript_path", "prompt_dir",   "llm_env"};
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ValidationError("unknown config key '" + k + "'");
  }
  ServerConfig c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.database_path = j.value("database_path", c.database_path);
    c.database_id = j.value("database_id", c.database_id);
    c.store_path = j.value("store_path", c.store_path);
    c.dictionary_path = j.value("dictionary_path", c.dictionary_path);
    c.sessions_dir = j.value("sessions_dir", c.sessions_dir);
    c.cors_origins = j.value("cors_origins", c.cors_origins);
    c.http_threads = j.value("http_threads", c.http_threads);
    c.probe_workers = j.value("probe_workers", c.probe_workers);
    c.max_body_bytes = j.value("max_body_bytes", c.max_body_bytes);
    c.llm_provider = j.value("llm_provider", c.llm_provider);
    c.mock_path = j.value("mock_path", c.mock_path);
    c.replay_path = j.value("replay_path", c.replay_path);
    c.transcript_path = j.value("transcript_path", c.transcript_path);
    c.prompt_dir = j.value("prompt_dir", c.prompt_dir);
    c.llm_env = j.value("llm_env", c.llm_env);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.port < 0 || c.port > 65535) throw ValidationError("port out of range");
  return c;
}

ServerConfig ServerConfig::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

std::shared_ptr<llm::Gateway> make_gateway(const ServerConfig& config) {
  const std::filesystem::path prompts = config.prompt_dir.empty() ? llm::default_prompt_dir() : std::filesystem::path(config.prompt_dir);
  auto transcript = config.transcript_path.empty() ? std::make_shared<llm::Transcript>()
                                                   : std::make_shared<llm::Transcript>(config.transcript_path);
  if (config.llm_provider == "mock") {
    auto backend = config.mock_path.empty() ? std::make_shared<llm::MockBackend>() : llm::MockBackend::load(config.mock_path);
    return std::make_shared<llm::Gateway>(llm::TemplateRegistry::load(prompts), std::move(backend),
                                          std::make_shared<llm::HashingEmbedder>(), std::move(transcript));
  }
  if (config.llm_provider == "replay") {
    if (config.replay_path.empty()) throw ValidationError("replay provider needs replay_path");
    return std::make_shared<llm::Gateway>(llm::TemplateRegistry::load(prompts),
                                          std::make_shared<llm::ReplayBackend>(llm::Transcript::load(config.replay_path)),
                                          std::make_shared<llm::HashingEmbedder>(), std::move(transcript));
  }
  if (config.llm_provider == "live") {
    for (const auto& [k, v] : config.llm_env) setenv(k.c_str(), v.c_str(), 1);
    return llm::make_live_gateway(prompts, std::move(transcript));
  }
  throw ValidationError("unknown llm_provider '" + config.llm_provider + "' (live, mock, replay)");
}

// ---------------------------------------------------------------- errors

int status_for(const std::exception& e) {
  if (dynamic_cast<const StaleGenerationError*>(&e)) return 409;
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const LlmError*>(&e) || dynamic_cast<const GenerationParseError*>(&e)) return 502;
  if (dynamic_cast<const RefusalError*>(&e) || dynamic_cast<const SpliceError*>(&e)) return 422;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const SyntaxError*>(&e) ||
      dynamic_cast<const MissingVariableError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
    return 400;
  }
  return 500;
}

json error_body(const std::exception& e) {
  json err{{"status", status_for(e)}, {"message", e.what()}};
  const char* type = "Error";
  if (dynamic_cast<const StaleGenerationError*>(&e)) type = "StaleGenerationError";
  else if (dynamic_cast<const NotFoundError*>(&e)) type = "NotFoundError";
  else if (dynamic_cast<const LlmError*>(&e)) type = "LlmError";
  else if (dynamic_cast<const GenerationParseError*>(&e)) type = "GenerationParseError";
  else if (dynamic_cast<const RefusalError*>(&e)) type = "RefusalError";
  else if (dynamic_cast<const SpliceError*>(&e)) type = "SpliceError";
  else if (status_for(e) == 400) type = "ValidationError";
  err["type"] = type;
  if (const auto* l = dynamic_cast<const LlmError*>(&e); l && !l->transcript_id().empty()) {
    err["transcript_id"] = l->transcript_id();
  }
  if (const auto* s = dynamic_cast<const StaleGenerationError*>(&e)) {
    err["requested_generation"] = s->requested();
    err["current_generation"] = s->current();
  }
  return json{{"error", err}};
}

// ---------------------------------------------------------------- service

Service::Service(ServerConfig config, std::shared_ptr<llm::Gateway> llm)
    : config_(std::move(config)), llm_(std::move(llm)), store_(std::make_shared<knowledge::KnowledgeStore>()) {
  if (config_.database_path.empty()) throw ValidationError("database_path is required");
  if (!std::filesystem::is_regular_file(config_.database_path)) {
    throw NotFoundError("database file not found: " + config_.database_path);
  }
  if (config_.database_id.empty()) config_.database_id = std::filesystem::path(config_.database_path).stem().string();
  if (!config_.store_path.empty() && std::filesystem::exists(config_.store_path)) {
    *store_ = knowledge::KnowledgeStore::load(config_.store_path);
  }
  knowledge::DataDictionary dict;
  if (!config_.dictionary_path.empty() && std::filesystem::exists(config_.dictionary_path)) {
    dict = knowledge::DataDictionary::load(config_.dictionary_path);
  }
  workspace_ = std::make_shared<authoring::Workspace>(config_.database_id, config_.database_path, std::move(dict), store_, llm_);
  probes_ = std::make_unique<lineage::WorkerPool>(config_.probe_workers);
  restore_sessions();
}

Service::~Service() { probes_.reset(); }

std::size_t Service::session_count() const {
  std::lock_guard lock(sessions_mu_);
  return sessions_.size();
}

json Service::health() const {
  return json{{"status", "ok"},
              {"database_id", config_.database_id},
              {"provider", llm::to_string(llm_->provider())},
              {"templates", llm_->templates().version_tag()},
              {"store", {{"script_records", store_->size(knowledge::Level::Script)},
                         {"fragment_records", store_->size(knowledge::Level::Fragment)}}},
              {"sessions", session_count()}};
}

std::shared_ptr<Service::Entry> Service::entry(const std::string& id) const {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

json Service::handle(const Entry& e) const {
  return json{{"session_id", e.session->id()},
              {"database_id", e.session->database_id()},
              {"current_generation", e.session->generation()},
              {"created_at", e.created_at}};
}

void Service::persist(const Entry& e) const {
  if (config_.sessions_dir.empty()) return;
  std::filesystem::create_directories(config_.sessions_dir);
  write_json(std::filesystem::path(config_.sessions_dir) / (e.session->id() + ".json"),
             json{{"created_at", e.created_at}, {"snapshot", e.session->snapshot()}});
}

void Service::restore_sessions() {
  if (config_.sessions_dir.empty() || !std::filesystem::is_directory(config_.sessions_dir)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& f : std::filesystem::directory_iterator(config_.sessions_dir)) {
    if (f.path().extension() == ".json") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  static const std::regex numbered("s([0-9]+)");
  for (const auto& f : files) {
    const auto doc = read_json(f);
    auto e = std::make_shared<Entry>();
    e->session = authoring::Session::restore(doc.at("snapshot"), workspace_);
    e->created_at = doc.value("created_at", "");
    if (e->session->database_id() != config_.database_id) continue;
    std::smatch m;
    const auto& id = e->session->id();
    if (std::regex_match(id, m, numbered)) next_session_ = std::max(next_session_, std::stoll(m[1]) + 1);
    sessions_[id] = std::move(e);
    ++restored_;
  }
}

void Service::persist_dictionary() const {
  if (!config_.dictionary_path.empty()) workspace_->dictionary().save(config_.dictionary_path);
}

json Service::create_session(const json& body) {
  const auto db = required_string(body, "database_id");
  if (db != config_.database_id) throw NotFoundError("unknown database '" + db + "'");
  auto e = std::make_shared<Entry>();
  e->created_at = now_utc();
  {
    std::lock_guard lock(sessions_mu_);
    const auto id = "s" + std::to_string(next_session_++);
    e->session = std::make_shared<authoring::Session>(id, workspace_);
    sessions_[id] = e;
  }
  std::lock_guard lock(e->mu);
  persist(*e);
  return handle(*e);
}

json Service::generate(const std::string& id, const json& body) {
  const auto instruction = required_string(body, "instruction");
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  const auto q = e->session->generate(instruction);
  persist(*e);
  e->session->schedule_probes(*probes_);
  return authoring::summary_json(*q);
}

json Service::refine(const std::string& id, const json& body) {
  authoring::RefinementEdit edit;
  try {
    edit = body.get<authoring::RefinementEdit>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("refinement: ") + ex.what());
  }
  auto e = entry(id);
  std::lock_guard lock(e->mu);
  const auto q = e->session->refine(edit);
  persist(*e);
  e->session->schedule_probes(*probes_);
  return authoring::summary_json(*q);
}

json Service::put_dictionary(const json& body) {
  const auto it = body.find("columns");
  if (it == body.end() || !it->is_array()) throw ValidationError("'columns' must be an array");
  std::lock_guard lock(dictionary_mu_);
  auto dict = workspace_->dictionary();
  for (const auto& c : *it) {
    if (!c.is_object()) throw ValidationError("each column edit must be an object");
    dict.set_description(required_string(c, "table"), required_string(c, "column"), required_string(c, "description"));
  }
  workspace_->set_dictionary(dict);
  persist_dictionary();
  return dict;
}

json Service::complete(const json& body) {
  const auto table = required_string(body, "table");
  const auto column = required_string(body, "column");
  const auto partial = required_string(body, "partial");
  const auto dict = workspace_->dictionary();
  const auto* c = dict.find(table, column);
  if (!c) throw NotFoundError("unknown column " + table + "." + column);
  std::string type;
  if (const auto* cols = workspace_->catalog().find(table)) {
    for (const auto& oc : *cols) {
      if (oc.name.size() == column.size() &&
          std::equal(oc.name.begin(), oc.name.end(), column.begin(),
                     [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b)); })) {
        type = oc.type;
      }
    }
  }
  return json{{"table", c->table},
              {"column", c->column},
              {"completion", knowledge::complete_description(partial, *c, type, *llm_)}};
}

json Service::extract(const json& body) {
  const auto path = required_string(body, "scripts_path");
  std::lock_guard lock(extract_mu_);
  const auto scripts = extraction::load_scripts(path);
  const auto result = extraction::run_offline(scripts, workspace_->dictionary(), *llm_, &workspace_->catalog());
  store_->insert(result.store.records());
  if (!config_.store_path.empty()) store_->save(config_.store_path);
  json report = result.report;
  report["store"] = {{"script_records", store_->size(knowledge::Level::Script)},
                     {"fragment_records", store_->size(knowledge::Level::Fragment)}};
  return report;
}

void Service::install(httplib::Server& server) {
  server.set_payload_max_length(config_.max_body_bytes);
  const auto origins = config_.cors_origins;
  server.set_pre_routing_handler([origins](const httplib::Request& req, httplib::Response& res) {
    if (req.method != "OPTIONS") return httplib::Server::HandlerResponse::Unhandled;
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Max-Age", "600");
    return httplib::Server::HandlerResponse::Handled;
  });
  server.set_post_routing_handler([origins](const httplib::Request& req, httplib::Response& res) {
    const auto origin = req.get_header_value("Origin");
    if (origin.empty()) return;
    for (const auto& o : origins) {
      if (o == "*" || o == origin) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Vary", "Origin");
        return;
      }
    }
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      res.status = status_for(e);
      res.set_content(error_body(e).dump(), kJson);
    } catch (...) {
      res.status = 500;
      res.set_content(R"({"error":{"status":500,"type":"Error","message":"unknown failure"}})", kJson);
    }
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto message = res.status == 404 ? "no route for " + req.method + " " + req.path
                                           : std::string(httplib::status_message(res.status));
    res.set_content(json{{"error", {{"status", res.status}, {"type", res.status == 404 ? "NotFoundError" : "Error"}, {"message", message}}}}.dump(),
                    kJson);
  });

  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) { respond(res, [&] { return health(); }); });

  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return create_session(parse_body(req)); });
  });
  server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return handle(*entry(req.matches[1])); });
  });
  server.Post(R"(/sessions/([^/]+)/generate)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return generate(req.matches[1], parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/refine)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return refine(req.matches[1], parse_body(req)); });
  });
  server.Get(R"(/sessions/([^/]+)/graph)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      const auto q = entry(req.matches[1])->session->current();
      if (!q) throw NotFoundError("session has no generated query yet");
      auto j = authoring::graph_json(q->graph);
      j["generation"] = q->generation;
      return j;
    });
  });
  server.Get(R"(/sessions/([^/]+)/knowledge)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      const auto q = entry(req.matches[1])->session->current();
      if (!q) throw NotFoundError("session has no generated query yet");
      return json(authoring::build_knowledge_view(*q));
    });
  });
  server.Get(R"(/sessions/([^/]+)/items/(.+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      const auto s = entry(req.matches[1])->session;
      const auto g = generation_param(req);
      json j = s->resolve_item_metadata(req.matches[2], g);
      j["generation"] = g.value_or(s->generation());
      return j;
    });
  });
  server.Get(R"(/sessions/([^/]+)/subqueries/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return json(entry(req.matches[1])->session->subquery_result(req.matches[2], generation_param(req))); });
  });

  server.Get("/dictionary", [this](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { return json(workspace_->dictionary()); });
  });
  server.Put("/dictionary", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return put_dictionary(parse_body(req)); });
  });
  server.Post("/dictionary/complete", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return complete(parse_body(req)); });
  });
  server.Post("/offline/extract", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { return extract(parse_body(req)); });
  });
}

int serve(Service& service) {
  httplib::Server server;
  const auto threads = service.config().http_threads;
  server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  service.install(server);
  const auto& cfg = service.config();
  int port = cfg.port;
  if (port == 0) {
    port = server.bind_to_any_port(cfg.host);
    if (port < 0) return 1;
  } else if (!server.bind_to_port(cfg.host, port)) {
    return 1;
  }
  std::cout << "listening on http://" << cfg.host << ":" << port << std::endl;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace sqlknow::server
