#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/authoring/session.hpp"

namespace httplib {
class Server;
}

namespace sqlknow::server {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds any free port
  std::string database_path;
  std::string database_id;  // defaults to the database file stem
  std::string store_path;
  std::string dictionary_path;
  std::string sessions_dir;  // snapshots persisted and restored here when set
  std::vector<std::string> cors_origins;  // "*" allows any origin
  std::size_t http_threads = 8;
  std::size_t probe_workers = 4;
  std::size_t max_body_bytes = 1 << 20;
  std::string llm_provider = "live";  // live | mock | replay
  std::string mock_path;
  std::string replay_path;
  std::string transcript_path;  // JSON lines, appended per exchange
  std::string prompt_dir;       // defaults to the shipped prompts
  std::map<std::string, std::string> llm_env;  // set in the environment before a live gateway is built

  // Unknown keys are rejected. Throws ValidationError.
  static ServerConfig from_json(const nlohmann::json& j);
  static ServerConfig load(const std::filesystem::path& path);
};

// Gateway for the configured provider. Throws ValidationError.
std::shared_ptr<llm::Gateway> make_gateway(const ServerConfig& config);

// Error body: {"error": {"status", "type", "message", "transcript_id"?}}.
int status_for(const std::exception& e);
nlohmann::json error_body(const std::exception& e);

// Routes of the HTTP API over one database. Sessions are independent; each
// session's mutations run one at a time.
class Service {
 public:
  Service(ServerConfig config, std::shared_ptr<llm::Gateway> llm);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void install(httplib::Server& server);

  const ServerConfig& config() const { return config_; }
  std::size_t session_count() const;
  std::size_t restored_count() const { return restored_; }

  nlohmann::json health() const;

 private:
  struct Entry {
    std::shared_ptr<authoring::Session> session;
    std::string created_at;
    std::mutex mu;  // serializes mutations and their persistence
  };

  std::shared_ptr<Entry> entry(const std::string& id) const;
  nlohmann::json handle(const Entry& e) const;
  void persist(const Entry& e) const;
  void restore_sessions();
  void persist_dictionary() const;

  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json generate(const std::string& id, const nlohmann::json& body);
  nlohmann::json refine(const std::string& id, const nlohmann::json& body);
  nlohmann::json put_dictionary(const nlohmann::json& body);
  nlohmann::json complete(const nlohmann::json& body);
  nlohmann::json extract(const nlohmann::json& body);

  ServerConfig config_;
  std::shared_ptr<llm::Gateway> llm_;
  std::shared_ptr<knowledge::KnowledgeStore> store_;
  std::shared_ptr<authoring::Workspace> workspace_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  long long next_session_ = 1;
  std::size_t restored_ = 0;
  std::mutex extract_mu_;
  std::mutex dictionary_mu_;
  std::unique_ptr<lineage::WorkerPool> probes_;  // declared last: drains before sessions go away
};

// Binds, prints "listening on http://host:port", serves until stopped.
// Returns nonzero when the port cannot be bound.
int serve(Service& service);

}  // namespace sqlknow::server
