#include <gtest/gtest.h>

#include <cstdlib>

#include "support/corpus_checks.hpp"

namespace sqlknow::testing {
namespace {

bool updating() {
  const char* v = std::getenv("SQLKNOW_UPDATE_GOLDEN");
  return v && *v && std::string(v) != "0";
}

TEST(Corpus, HasAtLeastFiftyQueries) { EXPECT_GE(corpus().size(), 50u); }

class CorpusQueryTest : public ::testing::TestWithParam<CorpusQuery> {};

TEST_P(CorpusQueryTest, SatisfiesFragmentAndLineageProperties) {
  lineage::Database db(toxicology_db());
  const auto out = check_corpus_query(GetParam(), db, updating());
  for (const auto& p : out.problems) ADD_FAILURE() << p;
  EXPECT_TRUE(out.parsed);
  EXPECT_TRUE(out.round_trip);
  EXPECT_TRUE(out.spans);
  EXPECT_TRUE(out.partition);
  EXPECT_TRUE(out.golden);
  EXPECT_TRUE(out.cover);
  EXPECT_TRUE(out.conjuncts);
  EXPECT_TRUE(out.lineage);
}

INSTANTIATE_TEST_SUITE_P(All, CorpusQueryTest, ::testing::ValuesIn(corpus()),
                         [](const auto& info) { return info.param.name; });

}  // namespace
}  // namespace sqlknow::testing
