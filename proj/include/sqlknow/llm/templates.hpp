#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sqlknow::llm {

using Variables = std::map<std::string, std::string>;

// A prompt file: a `version: N` header line, a `---` line, then the body with
// `{{name}}` placeholders. Every placeholder is a required variable.
struct PromptTemplate {
  std::string id;
  int version = 0;
  std::string body;
  std::vector<std::string> variables;  // in first-appearance order

  // Throws MissingVariableError naming the first absent variable.
  std::string render(const Variables& vars) const;
};

PromptTemplate parse_template(const std::string& id, const std::string& text);

class TemplateRegistry {
 public:
  TemplateRegistry() = default;
  static TemplateRegistry load(const std::filesystem::path& dir);  // every *.txt in dir

  void add(PromptTemplate t);
  const PromptTemplate& get(const std::string& id) const;  // throws NotFoundError
  bool contains(const std::string& id) const { return templates_.count(id) != 0; }
  std::vector<std::string> ids() const;

  // "id@version" pairs joined with commas, sorted by id.
  std::string version_tag() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

// 16 hex digits of FNV-1a 64 over the canonical (key-sorted) encoding of `vars`.
std::string variables_hash(const Variables& vars);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull);
std::string hex16(std::uint64_t v);

}  // namespace sqlknow::llm
