#pragma once

#include <memory>

#include "fixture.hpp"
#include "sqlknow/extraction/offline.hpp"
#include "sqlknow/knowledge/dictionary.hpp"

namespace sqlknow::testing {

inline std::filesystem::path mock_dir() { return source_dir() / "tests" / "mock" / "toxicology"; }
inline std::filesystem::path history_dir() { return fixtures_dir() / "history"; }

inline std::shared_ptr<llm::Gateway> mock_gateway(std::shared_ptr<llm::Transcript> transcript = nullptr) {
  return llm::make_mock_gateway(mock_dir(), std::move(transcript));
}

// The fixture gateway with `first` consulted before the committed entries.
inline std::shared_ptr<llm::Gateway> mock_gateway_with(std::vector<llm::MockEntry> first,
                                                       std::shared_ptr<llm::Transcript> transcript = nullptr) {
  auto rest = llm::MockBackend::read(mock_dir());
  first.insert(first.end(), rest.begin(), rest.end());
  if (!transcript) transcript = std::make_shared<llm::Transcript>();
  return std::make_shared<llm::Gateway>(llm::TemplateRegistry::load(llm::default_prompt_dir()),
                                        std::make_shared<llm::MockBackend>(std::move(first)),
                                        std::make_shared<llm::HashingEmbedder>(), std::move(transcript));
}

inline llm::MockEntry canned(std::string template_id, llm::Variables when, std::string response) {
  llm::MockEntry e;
  e.template_id = std::move(template_id);
  e.when = std::move(when);
  e.response = std::move(response);
  return e;
}

// Suggested descriptions with the label column completed from "+ means carcinogenic".
inline knowledge::DataDictionary toxicology_dictionary(llm::Gateway& llm) {
  lineage::Database db(toxicology_db());
  auto dict = knowledge::suggest_descriptions(db, {}, llm).dictionary;
  const auto* label = dict.find("molecule", "label");
  dict.set_description("molecule", "label", knowledge::complete_description("+ means carcinogenic", *label, "TEXT", llm));
  return dict;
}

inline extraction::OfflineOptions quick_options() {
  extraction::OfflineOptions o;
  o.backoff = std::chrono::milliseconds(0);
  return o;
}

inline extraction::OfflineResult history_extraction(const knowledge::DataDictionary& dict, llm::Gateway& llm) {
  lineage::Database db(toxicology_db());
  const auto catalog = db.catalog();
  return extraction::run_offline(extraction::load_scripts(history_dir()), dict, llm, &catalog, quick_options());
}

}  // namespace sqlknow::testing
