#pragma once

// Boundary for chat-completion and embedding calls. Every chat call renders a
// versioned template and is appended to the gateway's transcript.

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlknow/llm/templates.hpp"

namespace sqlknow::llm {

enum class Provider { Live, Mock, Replay };
const char* to_string(Provider p);

struct ChatExchange {
  std::string id;  // "x" + 6-digit sequence number within the transcript
  std::string template_id;
  int template_version = 0;
  Variables variables;
  std::string rendered_prompt;
  std::string response_text;
  std::string error;  // non-empty when the call failed
  std::int64_t latency_ms = 0;
  Provider provider = Provider::Mock;
};

void to_json(nlohmann::json& j, const ChatExchange& x);
void from_json(const nlohmann::json& j, ChatExchange& x);

// Append-only. When a path is attached each exchange is also written as one JSON line.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::filesystem::path jsonl_path);

  // Assigns the id and returns it.
  std::string append(ChatExchange x);
  std::vector<ChatExchange> entries() const;
  std::size_t size() const;

  static std::vector<ChatExchange> load(const std::filesystem::path& jsonl_path);

 private:
  mutable std::mutex mu_;
  std::vector<ChatExchange> entries_;
  std::optional<std::filesystem::path> path_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Provider provider() const = 0;
  // Throws LlmError on failure.
  virtual std::string complete(const std::string& template_id, const Variables& vars,
                               const std::string& prompt) = 0;
};

using Vector = std::vector<double>;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::string model_id() const = 0;
  // Unit-norm vectors, one per text. Throws EmbeddingError.
  virtual std::vector<Vector> embed(const std::vector<std::string>& texts) = 0;
};

double cosine(const Vector& a, const Vector& b);

// Bag of lowercase alphanumeric tokens, each hashed (FNV-1a) to a signed bucket.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 384) : dim_(dim) {}
  std::size_t dimension() const override { return dim_; }
  std::string model_id() const override { return "hashing-" + std::to_string(dim_); }
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

  static std::vector<std::string> tokens(const std::string& text);

 private:
  std::size_t dim_;
};

// One scripted response. Matching: an exact `variables_hash` first, then the
// first entry (in file order) whose `when` equalities and `contains` substrings
// all hold. An entry with neither key matches every call to its template.
struct MockEntry {
  std::string template_id;
  std::optional<std::string> variables_hash;
  Variables when;
  Variables contains;
  std::string response;
  std::string error;     // when set, the call fails with LlmError
  int fail_times = 0;    // fail this many matching calls before answering
};

class MockBackend final : public ChatBackend {
 public:
  MockBackend() = default;
  explicit MockBackend(std::vector<MockEntry> entries);
  // Reads a JSON array of entries, or a directory of such files (sorted by name).
  static std::shared_ptr<MockBackend> load(const std::filesystem::path& path);
  static std::vector<MockEntry> read(const std::filesystem::path& path);

  Provider provider() const override { return Provider::Mock; }
  std::string complete(const std::string& template_id, const Variables& vars, const std::string& prompt) override;

  // The response used when no entry matches; documented per template.
  static std::string fallback(const std::string& template_id, const Variables& vars);

 private:
  std::mutex mu_;
  std::vector<MockEntry> entries_;
  std::vector<int> failures_;
};

// Answers from a recorded transcript, keyed by (template_id, variables_hash);
// repeated keys are replayed in recorded order.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(const std::vector<ChatExchange>& recorded);
  Provider provider() const override { return Provider::Replay; }
  std::string complete(const std::string& template_id, const Variables& vars, const std::string& prompt) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::size_t> cursor_;
};

struct EndpointConfig {
  std::string url;    // base URL, e.g. https://host/v1
  std::string model;
  std::string key;
  double temperature = 0.0;
  int timeout_seconds = 60;

  // Reads <prefix>_URL, <prefix>_MODEL, <prefix>_KEY; nullopt when URL is unset.
  static std::optional<EndpointConfig> from_env(const std::string& prefix);
};

// OpenAI-compatible /chat/completions client.
class LiveBackend final : public ChatBackend {
 public:
  explicit LiveBackend(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
  Provider provider() const override { return Provider::Live; }
  std::string complete(const std::string& template_id, const Variables& vars, const std::string& prompt) override;

 private:
  EndpointConfig cfg_;
};

// OpenAI-compatible /embeddings client; vectors are re-normalized.
class LiveEmbedder final : public Embedder {
 public:
  LiveEmbedder(EndpointConfig cfg, std::size_t dim) : cfg_(std::move(cfg)), dim_(dim) {}
  std::size_t dimension() const override { return dim_; }
  std::string model_id() const override { return cfg_.model; }
  std::vector<Vector> embed(const std::vector<std::string>& texts) override;

 private:
  EndpointConfig cfg_;
  std::size_t dim_;
};

// Shareable across threads; at most `max_in_flight` backend calls run at once.
class Gateway {
 public:
  Gateway(TemplateRegistry templates, std::shared_ptr<ChatBackend> chat, std::shared_ptr<Embedder> embedder,
          std::shared_ptr<Transcript> transcript = nullptr, std::size_t max_in_flight = 4);

  std::string chat(const std::string& template_id, const Variables& vars);
  std::vector<Vector> embed(const std::vector<std::string>& texts);
  Vector embed_one(const std::string& text) { return embed({text}).front(); }

  const TemplateRegistry& templates() const { return templates_; }
  Transcript& transcript() { return *transcript_; }
  Embedder& embedder() { return *embedder_; }
  Provider provider() const { return chat_->provider(); }

 private:
  TemplateRegistry templates_;
  std::shared_ptr<ChatBackend> chat_;
  std::shared_ptr<Embedder> embedder_;
  std::shared_ptr<Transcript> transcript_;
  std::size_t max_in_flight_;
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
};

// Directory holding the shipped prompt templates.
std::filesystem::path default_prompt_dir();

// Mock gateway over the shipped prompts, the given fixtures (file or dir, may
// be empty), and a HashingEmbedder.
std::shared_ptr<Gateway> make_mock_gateway(const std::filesystem::path& fixtures = {},
                                           std::shared_ptr<Transcript> transcript = nullptr);

// Live gateway from SQLKNOW_LLM_* and SQLKNOW_EMBED_* (embeddings fall back to
// the hashing embedder when SQLKNOW_EMBED_URL is unset). Throws ValidationError
// when SQLKNOW_LLM_URL is unset.
std::shared_ptr<Gateway> make_live_gateway(const std::filesystem::path& prompt_dir,
                                           std::shared_ptr<Transcript> transcript = nullptr);

// Text between the first ``` fence pair when present, otherwise the trimmed text.
std::string strip_code_fence(const std::string& text);

}  // namespace sqlknow::llm
