#include "sqlknow/llm/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "sqlknow/errors.hpp"

namespace sqlknow::llm {

using nlohmann::json;

const char* to_string(Provider p) {
  switch (p) {
    case Provider::Live: return "Live";
    case Provider::Mock: return "Mock";
    case Provider::Replay: return "Replay";
  }
  return "";
}

void to_json(json& j, const ChatExchange& x) {
  j = json{{"id", x.id},
           {"template_id", x.template_id},
           {"template_version", x.template_version},
           {"variables", x.variables},
           {"rendered_prompt", x.rendered_prompt},
           {"response_text", x.response_text},
           {"error", x.error},
           {"latency_ms", x.latency_ms},
           {"provider", to_string(x.provider)}};
}

void from_json(const json& j, ChatExchange& x) {
  x.id = j.value("id", "");
  x.template_id = j.at("template_id").get<std::string>();
  x.template_version = j.value("template_version", 0);
  x.variables = j.at("variables").get<Variables>();
  x.rendered_prompt = j.value("rendered_prompt", "");
  x.response_text = j.value("response_text", "");
  x.error = j.value("error", "");
  x.latency_ms = j.value("latency_ms", std::int64_t{0});
  const auto p = j.value("provider", "Mock");
  x.provider = p == "Live" ? Provider::Live : p == "Replay" ? Provider::Replay : Provider::Mock;
}

Transcript::Transcript(std::filesystem::path jsonl_path) : path_(std::move(jsonl_path)) {}

std::string Transcript::append(ChatExchange x) {
  std::lock_guard lock(mu_);
  auto seq = std::to_string(entries_.size() + 1);
  x.id = "x" + std::string(seq.size() < 6 ? 6 - seq.size() : 0, '0') + seq;
  if (path_) {
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    out << json(x).dump() << '\n';
  }
  entries_.push_back(x);
  return x.id;
}

std::vector<ChatExchange> Transcript::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<ChatExchange> Transcript::load(const std::filesystem::path& jsonl_path) {
  std::ifstream in(jsonl_path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read transcript: " + jsonl_path.string());
  std::vector<ChatExchange> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    out.push_back(json::parse(line).get<ChatExchange>());
  }
  return out;
}

Gateway::Gateway(TemplateRegistry templates, std::shared_ptr<ChatBackend> chat, std::shared_ptr<Embedder> embedder,
                 std::shared_ptr<Transcript> transcript, std::size_t max_in_flight)
    : templates_(std::move(templates)),
      chat_(std::move(chat)),
      embedder_(std::move(embedder)),
      transcript_(transcript ? std::move(transcript) : std::make_shared<Transcript>()),
      max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

std::string Gateway::chat(const std::string& template_id, const Variables& vars) {
  const auto& tmpl = templates_.get(template_id);
  ChatExchange x;
  x.template_id = template_id;
  x.template_version = tmpl.version;
  x.variables = vars;
  x.rendered_prompt = tmpl.render(vars);
  x.provider = chat_->provider();

  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
  ++in_flight_;
  lock.unlock();
  const auto start = std::chrono::steady_clock::now();
  try {
    x.response_text = chat_->complete(template_id, vars, x.rendered_prompt);
  } catch (const LlmError& e) {
    x.error = e.what();
  }
  // Non-live latency is recorded as 0 so mock transcripts stay byte-identical.
  if (x.provider == Provider::Live) {
    x.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  }
  lock.lock();
  --in_flight_;
  slot_cv_.notify_one();
  lock.unlock();

  const auto error = x.error;
  auto response = x.response_text;
  const auto id = transcript_->append(std::move(x));
  if (!error.empty()) throw LlmError(error, id);
  return response;
}

std::vector<Vector> Gateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  for (const auto& t : texts) {
    if (t.empty()) throw EmbeddingError("cannot embed an empty string");
  }
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
  ++in_flight_;
  lock.unlock();
  std::vector<Vector> out;
  try {
    out = embedder_->embed(texts);
  } catch (...) {
    lock.lock();
    --in_flight_;
    slot_cv_.notify_one();
    throw;
  }
  lock.lock();
  --in_flight_;
  slot_cv_.notify_one();
  return out;
}

std::filesystem::path default_prompt_dir() {
  if (const char* env = std::getenv("SQLKNOW_PROMPT_DIR"); env && *env) return env;
  return std::filesystem::path(SQLKNOW_DEFAULT_PROMPT_DIR);
}

std::shared_ptr<Gateway> make_mock_gateway(const std::filesystem::path& fixtures, std::shared_ptr<Transcript> transcript) {
  auto backend = fixtures.empty() ? std::make_shared<MockBackend>() : MockBackend::load(fixtures);
  return std::make_shared<Gateway>(TemplateRegistry::load(default_prompt_dir()), std::move(backend),
                                   std::make_shared<HashingEmbedder>(), std::move(transcript));
}

std::shared_ptr<Gateway> make_live_gateway(const std::filesystem::path& prompt_dir, std::shared_ptr<Transcript> transcript) {
  auto chat_cfg = EndpointConfig::from_env("SQLKNOW_LLM");
  if (!chat_cfg) throw ValidationError("SQLKNOW_LLM_URL is not set");
  std::shared_ptr<Embedder> embedder;
  if (auto embed_cfg = EndpointConfig::from_env("SQLKNOW_EMBED")) {
    const char* dim = std::getenv("SQLKNOW_EMBED_DIM");
    embedder = std::make_shared<LiveEmbedder>(*embed_cfg, dim ? std::stoul(dim) : 384);
  } else {
    embedder = std::make_shared<HashingEmbedder>();
  }
  std::size_t limit = 4;
  if (const char* v = std::getenv("SQLKNOW_LLM_MAX_IN_FLIGHT")) limit = std::stoul(v);
  return std::make_shared<Gateway>(TemplateRegistry::load(prompt_dir), std::make_shared<LiveBackend>(*chat_cfg),
                                   std::move(embedder), std::move(transcript), limit);
}

std::string strip_code_fence(const std::string& text) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  const auto open = text.find("```");
  if (open == std::string::npos) return trim(text);
  const auto line_end = text.find('\n', open);
  if (line_end == std::string::npos) return trim(text);
  const auto close = text.find("```", line_end);
  return trim(text.substr(line_end + 1, close == std::string::npos ? std::string::npos : close - line_end - 1));
}

}  // namespace sqlknow::llm
