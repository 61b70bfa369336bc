#pragma once

#include "knowledge_fixture.hpp"
#include "sqlknow/authoring/session.hpp"

namespace sqlknow::testing {

inline constexpr const char* kFig1Instruction =
    "Show me number of non-carcinogenic molecules and number of carcinogenic molecules with least common elements.";
inline constexpr const char* kMultipleLeastCommon = "Consider multiple least common elements";

// Fresh mock gateway, dictionary, and history store on every call.
inline std::shared_ptr<authoring::Workspace> mock_workspace(std::vector<llm::MockEntry> first = {}) {
  auto llm = mock_gateway_with(std::move(first));
  auto dict = toxicology_dictionary(*llm);
  auto store = std::make_shared<knowledge::KnowledgeStore>(history_extraction(dict, *llm).store);
  return std::make_shared<authoring::Workspace>("toxicology", toxicology_db(), std::move(dict), std::move(store), llm);
}

// Offline extraction, retrieval, generation, one Modify and one Delete.
inline std::unique_ptr<authoring::Session> run_mock_scenario() {
  auto session = std::make_unique<authoring::Session>("s1", mock_workspace());
  session->generate(kFig1Instruction);
  authoring::RefinementEdit modify;
  modify.mode = authoring::EditMode::Modify;
  modify.target = authoring::EditTarget::Item;
  modify.target_id = "least_com_el/output";
  modify.instruction = kMultipleLeastCommon;
  session->refine(modify);
  authoring::RefinementEdit del;
  del.mode = authoring::EditMode::Delete;
  del.target = authoring::EditTarget::Item;
  del.target_id = "carci_mol/output";
  session->refine(del);
  return session;
}

}  // namespace sqlknow::testing
