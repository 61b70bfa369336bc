#include "sqlknow/llm/templates.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sqlknow/errors.hpp"

namespace sqlknow::llm {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 15];
    v >>= 4;
  }
  return s;
}

std::string variables_hash(const Variables& vars) {
  // Length-prefixed so that no two distinct maps share an encoding.
  std::string enc;
  for (const auto& [k, v] : vars) {
    enc += std::to_string(k.size()) + ":" + k + std::to_string(v.size()) + ":" + v;
  }
  return hex16(fnv1a64(enc));
}

PromptTemplate parse_template(const std::string& id, const std::string& text) {
  PromptTemplate t;
  t.id = id;
  const auto sep = text.find("\n---\n");
  if (text.rfind("version:", 0) != 0 || sep == std::string::npos) {
    throw ValidationError("template " + id + ": expected 'version: N' header and '---' separator");
  }
  t.version = std::stoi(text.substr(8, sep - 8));
  t.body = text.substr(sep + 5);
  for (std::size_t pos = t.body.find("{{"); pos != std::string::npos; pos = t.body.find("{{", pos + 2)) {
    const auto end = t.body.find("}}", pos);
    if (end == std::string::npos) throw ValidationError("template " + id + ": unterminated placeholder");
    auto name = t.body.substr(pos + 2, end - pos - 2);
    if (std::find(t.variables.begin(), t.variables.end(), name) == t.variables.end()) t.variables.push_back(name);
  }
  return t;
}

std::string PromptTemplate::render(const Variables& vars) const {
  for (const auto& v : variables) {
    if (!vars.count(v)) throw MissingVariableError(id, v);
  }
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = body.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = body.find("}}", open);
    out += body.substr(pos, open - pos);
    out += vars.at(body.substr(open + 2, close - open - 2));
    pos = close + 2;
  }
  out += body.substr(pos);
  return out;
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& dir) {
  TemplateRegistry r;
  if (!std::filesystem::is_directory(dir)) throw NotFoundError("prompt directory not found: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".txt") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.add(parse_template(e.path().stem().string(), ss.str()));
  }
  return r;
}

void TemplateRegistry::add(PromptTemplate t) {
  auto id = t.id;
  templates_[id] = std::move(t);
}

const PromptTemplate& TemplateRegistry::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw NotFoundError("unknown prompt template: " + id);
  return it->second;
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, t] : templates_) out.push_back(id);
  return out;
}

std::string TemplateRegistry::version_tag() const {
  std::string out;
  for (const auto& [id, t] : templates_) {
    if (!out.empty()) out += ",";
    out += id + "@" + std::to_string(t.version);
  }
  return out;
}

}  // namespace sqlknow::llm
