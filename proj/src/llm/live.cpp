#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cmath>
#include <cstdlib>

#include "sqlknow/errors.hpp"
#include "sqlknow/llm/gateway.hpp"

namespace sqlknow::llm {
namespace {

using nlohmann::json;

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string base;    // path prefix without trailing slash
};

Target split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("endpoint URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  Target t;
  t.origin = url.substr(0, slash);
  t.base = slash == std::string::npos ? "" : url.substr(slash);
  while (!t.base.empty() && t.base.back() == '/') t.base.pop_back();
  return t;
}

json post(const EndpointConfig& cfg, const std::string& path, const json& body) {
  const auto target = split_url(cfg.url);
  httplib::Client cli(target.origin);
  cli.set_connection_timeout(cfg.timeout_seconds, 0);
  cli.set_read_timeout(cfg.timeout_seconds, 0);
  cli.set_write_timeout(cfg.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg.key.empty()) headers.emplace("Authorization", "Bearer " + cfg.key);
  auto res = cli.Post(target.base + path, headers, body.dump(), "application/json");
  if (!res) throw LlmError("request to " + cfg.url + path + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw LlmError("HTTP " + std::to_string(res->status) + " from " + cfg.url + path + ": " + res->body.substr(0, 500));
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw LlmError(std::string("malformed response body: ") + e.what());
  }
}

}  // namespace

std::optional<EndpointConfig> EndpointConfig::from_env(const std::string& prefix) {
  auto get = [&](const char* suffix) {
    const char* v = std::getenv((prefix + suffix).c_str());
    return std::string(v ? v : "");
  };
  EndpointConfig cfg;
  cfg.url = get("_URL");
  if (cfg.url.empty()) return std::nullopt;
  cfg.model = get("_MODEL");
  cfg.key = get("_KEY");
  return cfg;
}

std::string LiveBackend::complete(const std::string&, const Variables&, const std::string& prompt) {
  json body{{"model", cfg_.model},
            {"temperature", cfg_.temperature},
            {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
  const auto reply = post(cfg_, "/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw LlmError(std::string("unexpected chat response shape: ") + e.what());
  }
}

std::vector<Vector> LiveEmbedder::embed(const std::vector<std::string>& texts) {
  json body{{"model", cfg_.model}, {"input", texts}};
  json reply;
  try {
    reply = post(cfg_, "/embeddings", body);
  } catch (const LlmError& e) {
    throw EmbeddingError(e.what());
  }
  std::vector<Vector> out;
  try {
    for (const auto& item : reply.at("data")) {
      auto v = item.at("embedding").get<Vector>();
      if (v.size() != dim_) {
        throw EmbeddingError("embedding dimension " + std::to_string(v.size()) + " differs from configured " + std::to_string(dim_));
      }
      double norm = 0;
      for (double x : v) norm += x * x;
      if (norm == 0) throw EmbeddingError("endpoint returned a zero vector");
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
      out.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw EmbeddingError(std::string("unexpected embedding response shape: ") + e.what());
  }
  if (out.size() != texts.size()) throw EmbeddingError("endpoint returned " + std::to_string(out.size()) + " vectors for " + std::to_string(texts.size()) + " texts");
  return out;
}

}  // namespace sqlknow::llm
