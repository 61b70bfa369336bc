#include "sqlknow/authoring/retrieve.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sqlknow/errors.hpp"

namespace sqlknow::authoring {

using nlohmann::json;

namespace {

json scored_json(const knowledge::Scored& s) {
  return {{"id", s.record.id}, {"level", knowledge::to_string(s.record.level)}, {"score", s.score}, {"description", s.record.description}};
}

}  // namespace

void to_json(json& j, const RetrievalBundle& b) {
  json scripts = json::array();
  for (const auto& s : b.script_matches) scripts.push_back(scored_json(s));
  json fragments = json::array();
  for (const auto& [kw, hits] : b.fragment_matches) {
    json list = json::array();
    for (const auto& h : hits) list.push_back(scored_json(h));
    fragments.push_back({{"keyword", kw}, {"matches", list}});
  }
  json reranked = json::array();
  for (const auto& r : b.reranked) reranked.push_back(r.id);
  j = json{{"script_matches", scripts},
           {"keywords", b.keywords},
           {"fragment_matches", fragments},
           {"reranked", reranked},
           {"keyword_fallback", b.keyword_fallback},
           {"rerank_fallback", b.rerank_fallback}};
}

std::vector<knowledge::Scored> merged_candidates(const RetrievalBundle& b) {
  std::map<std::string, knowledge::Scored> by_id;
  auto add = [&](const knowledge::Scored& s) {
    auto [it, fresh] = by_id.emplace(s.record.id, s);
    if (!fresh && s.score > it->second.score) it->second = s;
  };
  for (const auto& s : b.script_matches) add(s);
  for (const auto& [kw, hits] : b.fragment_matches) {
    for (const auto& h : hits) add(h);
  }
  std::vector<knowledge::Scored> out;
  for (auto& [id, s] : by_id) out.push_back(std::move(s));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

std::optional<std::vector<std::string>> parse_string_array(const std::string& text) {
  auto body = llm::strip_code_fence(text);
  const auto open = body.find('[');
  const auto close = body.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  const auto j = json::parse(body.substr(open, close - open + 1), nullptr, false);
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) return std::nullopt;
    out.push_back(e.get<std::string>());
  }
  return out;
}

RetrievalBundle retrieve(const std::string& instruction, const knowledge::KnowledgeStore& store, llm::Gateway& llm,
                         const RetrieveOptions& options) {
  if (store.size() == 0) throw EmptyStoreError();
  RetrievalBundle b;
  b.script_matches = store.similar(instruction, knowledge::Level::Script, options.script_k, llm);

  try {
    auto kws = parse_string_array(llm.chat("extract_keywords", {{"instruction", instruction}}));
    if (!kws) throw LlmError("keyword reply is not a JSON array of strings");
    for (auto& k : *kws) {
      if (!k.empty() && std::find(b.keywords.begin(), b.keywords.end(), k) == b.keywords.end()) b.keywords.push_back(k);
    }
    if (b.keywords.empty()) throw LlmError("keyword reply is empty");
  } catch (const LlmError& e) {
    b.keyword_fallback = e.what();
    b.keywords = {instruction};
  }
  for (const auto& kw : b.keywords) {
    b.fragment_matches.emplace_back(kw, store.similar(kw, knowledge::Level::Fragment, options.fragment_k, llm));
  }

  const auto candidates = merged_candidates(b);
  std::string lines;
  for (const auto& c : candidates) {
    lines += json{{"id", c.record.id}, {"level", knowledge::to_string(c.record.level)}, {"description", c.record.description}}.dump() + "\n";
  }
  std::map<std::string, const knowledge::KnowledgeRecord*> by_id;
  for (const auto& c : candidates) by_id.emplace(c.record.id, &c.record);
  try {
    auto ids = parse_string_array(llm.chat("rerank", {{"instruction", instruction}, {"candidates", lines}}));
    if (!ids) throw LlmError("rerank reply is not a JSON array of ids");
    std::set<std::string> taken;
    for (const auto& id : *ids) {
      auto it = by_id.find(id);
      if (it != by_id.end() && taken.insert(id).second) b.reranked.push_back(*it->second);
    }
  } catch (const LlmError& e) {
    b.rerank_fallback = e.what();
    b.reranked.clear();
    for (const auto& c : candidates) b.reranked.push_back(c.record);
  }
  return b;
}

std::string examples_text(const std::vector<knowledge::KnowledgeRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    if (r.level == knowledge::Level::Script) {
      out += "-- Past script " + r.source_script_id + ": " + r.description + "\n";
      if (!r.sql_text.empty()) out += r.sql_text + (r.sql_text.back() == '\n' ? "" : "\n");
    } else {
      out += "-- Knowledge (" + std::string(sql::to_string(*r.kind)) + ") from " + r.source_script_id + ": " + r.description + "\n";
      out += r.fragment->sql_text + "\n";
    }
    out += "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

}  // namespace sqlknow::authoring
