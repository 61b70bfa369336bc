#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlknow/knowledge/store.hpp"

namespace sqlknow::authoring {

struct RetrieveOptions {
  std::size_t script_k = knowledge::kScriptTopK;
  std::size_t fragment_k = knowledge::kFragmentTopK;
};

struct RetrievalBundle {
  std::vector<knowledge::Scored> script_matches;
  std::vector<std::string> keywords;
  std::vector<std::pair<std::string, std::vector<knowledge::Scored>>> fragment_matches;  // keyword order
  std::vector<knowledge::KnowledgeRecord> reranked;
  // Set when an LLM step failed and the cosine-only fallback was used.
  std::string keyword_fallback;
  std::string rerank_fallback;
};

void to_json(nlohmann::json& j, const RetrievalBundle& b);

// Candidates in cosine order: script and fragment matches merged, deduplicated
// by id, sorted by descending score then id.
std::vector<knowledge::Scored> merged_candidates(const RetrievalBundle& b);

// Script-level top-k, LLM keyword split, per-keyword fragment top-k, then LLM
// filtering and re-ranking. Throws EmptyStoreError.
RetrievalBundle retrieve(const std::string& instruction, const knowledge::KnowledgeStore& store, llm::Gateway& llm,
                         const RetrieveOptions& options = {});

// Parses the LLM's JSON array of strings (fenced or bare). nullopt when malformed.
std::optional<std::vector<std::string>> parse_string_array(const std::string& text);

// Prompt block describing retrieved scripts and knowledge.
std::string examples_text(const std::vector<knowledge::KnowledgeRecord>& records);

}  // namespace sqlknow::authoring
