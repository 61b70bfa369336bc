#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sqlknow/lineage/database.hpp"
#include "support/fixture.hpp"

namespace sqlknow::testing {

struct CorpusOutcome {
  std::string name;
  bool parsed = false;
  bool round_trip = false;
  bool spans = false;
  bool partition = false;
  bool golden = false;
  bool cover = false;
  bool conjuncts = false;
  bool lineage = false;
  std::size_t units = 0;
  std::size_t fragments = 0;
  std::vector<std::string> problems;

  bool sql_core_ok() const { return parsed && round_trip && spans && partition && golden && cover && conjuncts; }
};

// Golden files live in tests/golden/corpus/<name>.json. With `update` set the
// golden is rewritten instead of compared.
CorpusOutcome check_corpus_query(const CorpusQuery& q, const lineage::Database& db, bool update);

}  // namespace sqlknow::testing
