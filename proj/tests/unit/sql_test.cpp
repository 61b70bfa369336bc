#include <gtest/gtest.h>

#include "sqlknow/errors.hpp"
#include "sqlknow/lineage/database.hpp"
#include "sqlknow/lineage/execute.hpp"
#include "sqlknow/lineage/graph.hpp"
#include "sqlknow/sql/parser.hpp"
#include "sqlknow/sql/probe.hpp"
#include "sqlknow/sql/render.hpp"
#include "sqlknow/sql/splice.hpp"
#include "support/fixture.hpp"

namespace sqlknow::sql {
namespace {


const char* kPaperQuery =
    "SELECT T1.element FROM atom AS T1 INNER JOIN molecule AS T2 ON T1.molecule_id = T2.molecule_id "
    "GROUP BY T1.element ORDER BY COUNT(DISTINCT T2.molecule_id) LIMIT 1";

std::vector<std::string> texts_of(const std::vector<Fragment>& fs, KnowledgeKind k) {
  std::vector<std::string> out;
  for (const auto& f : fs) {
    if (f.kind == k) out.push_back(f.sql_text);
  }
  return out;
}

SubqueryUnit main_unit(const std::string& sql) { return decompose(parse_script(sql)).back(); }

std::string pipeline() { return sqlknow::testing::read_file(sqlknow::testing::fixtures_dir() / "toxicology_pipeline.sql"); }

TEST(ParseScript, PaperQueryHasOneJoinGroupOrderAndLimit) {
  const auto s = parse_script(kPaperQuery);
  ASSERT_EQ(s.root.cores.size(), 1u);
  const auto& core = s.root.cores[0];
  ASSERT_TRUE(core.from.has_value());
  EXPECT_EQ(core.from->joins.size(), 1u);
  EXPECT_EQ(core.group_by.size(), 1u);
  EXPECT_EQ(s.root.order_by.size(), 1u);
  EXPECT_TRUE(s.root.limit.has_value());
  EXPECT_FALSE(s.root.with.has_value());
}

TEST(ParseScript, SelectOneHasNoTables) {
  const auto s = parse_script("SELECT 1");
  ASSERT_EQ(s.root.cores.size(), 1u);
  EXPECT_EQ(s.root.cores[0].columns.size(), 1u);
  EXPECT_FALSE(s.root.cores[0].from.has_value());
  EXPECT_EQ(decompose(s).back().referenced_tables.size(), 0u);
}

TEST(ParseScript, SelectFromFailsAtOffsetSeven) {
  try {
    parse_script("SELECT FROM");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 7u);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(ParseScript, EmptyInputIsRejected) { EXPECT_THROW(parse_script("   "), SyntaxError); }

TEST(ParseScript, WhitespaceAndCaseInsensitiveEquivalence) {
  const auto a = parse_script("select a,b from t where x=1");
  const auto b = parse_script("SELECT a ,\n  b\nFROM t\n\tWHERE x = 1 ;");
  EXPECT_EQ(a.source_text, b.source_text);
  EXPECT_TRUE(same_structure(a.root, b.root));
}

TEST(ParseScript, SpansNestWithinParents) {
  const auto s = parse_script(kPaperQuery);
  const Span whole{0, static_cast<std::uint32_t>(s.source_text.size())};
  EXPECT_TRUE(whole.contains(s.root.span));
  const auto& core = s.root.cores[0];
  EXPECT_TRUE(s.root.span.contains(core.span));
  EXPECT_TRUE(core.span.contains(core.from_span));
  const auto& on = *core.from->joins[0].on;
  EXPECT_TRUE(core.from_span.contains(on.span));
  for (const auto& a : on.args) EXPECT_TRUE(on.span.contains(a.span));
}

TEST(Decompose, PipelineHasFourUnitsInDefinitionOrder) {
  const auto units = decompose(parse_script(pipeline()));
  ASSERT_EQ(units.size(), 4u);
  EXPECT_EQ(units[0].id, "least_com_el");
  EXPECT_EQ(units[1].id, "non_carci_mol");
  EXPECT_EQ(units[2].id, "carci_mol");
  EXPECT_TRUE(units[3].is_main());
  EXPECT_EQ(units[3].referenced_ctes, (std::vector<std::string>{"non_carci_mol", "carci_mol"}));
  EXPECT_EQ(units[1].referenced_ctes, std::vector<std::string>{"least_com_el"});
  EXPECT_EQ(units[0].referenced_tables, (std::vector<std::string>{"atom", "molecule"}));
}

TEST(Decompose, SelectOneIsSingleMainUnit) {
  const auto units = decompose(parse_script("SELECT 1"));
  ASSERT_EQ(units.size(), 1u);
  EXPECT_TRUE(units[0].is_main());
  EXPECT_TRUE(units[0].referenced_tables.empty());
  EXPECT_TRUE(units[0].referenced_ctes.empty());
}

TEST(Decompose, DuplicateCteNameIsRejected) {
  EXPECT_THROW(decompose(parse_script("WITH a AS (SELECT 1), a AS (SELECT 2) SELECT * FROM a")), DuplicateNameError);
  EXPECT_THROW(decompose(parse_script("WITH A AS (SELECT 1), a AS (SELECT 2) SELECT * FROM a")), DuplicateNameError);
  EXPECT_THROW(decompose(parse_script("WITH main AS (SELECT 1) SELECT * FROM main")), DuplicateNameError);
}

TEST(Decompose, DerivedTablesAreHoistedInnerFirst) {
  const auto units = decompose(parse_script("SELECT x.a FROM (SELECT y.a FROM (SELECT 1 AS a) AS y) AS x"));
  ASSERT_EQ(units.size(), 3u);
  EXPECT_EQ(units[0].id, "__sub_1");
  EXPECT_EQ(units[1].id, "__sub_2");
  EXPECT_EQ(units[1].referenced_ctes, std::vector<std::string>{"__sub_1"});
  EXPECT_EQ(units[2].referenced_ctes, std::vector<std::string>{"__sub_2"});
}

TEST(Decompose, ReferencedCtesAreDefinedInScript) {
  for (const auto& q : sqlknow::testing::corpus()) {
    const auto units = decompose(parse_script(q.sql));
    std::set<std::string> ids;
    for (const auto& u : units) ids.insert(u.id);
    EXPECT_EQ(ids.size(), units.size()) << q.name;
    for (const auto& u : units) {
      for (const auto& c : u.referenced_ctes) EXPECT_TRUE(ids.count(c)) << q.name << " " << c;
    }
  }
}

TEST(ExtractFragments, PaperQueryFragments) {
  const auto fs = extract_fragments(main_unit(kPaperQuery));
  EXPECT_EQ(texts_of(fs, KnowledgeKind::Relation),
            std::vector<std::string>{"FROM atom AS T1 INNER JOIN molecule AS T2 ON T1.molecule_id = T2.molecule_id"});
  EXPECT_EQ(texts_of(fs, KnowledgeKind::Dimension), std::vector<std::string>{"GROUP BY T1.element"});
  EXPECT_EQ(texts_of(fs, KnowledgeKind::Calculation),
            (std::vector<std::string>{"T1.element", "COUNT(DISTINCT T2.molecule_id)"}));
  EXPECT_EQ(texts_of(fs, KnowledgeKind::Output),
            std::vector<std::string>{"ORDER BY COUNT(DISTINCT T2.molecule_id) LIMIT 1"});
  EXPECT_TRUE(texts_of(fs, KnowledgeKind::Condition).empty());
}

TEST(ExtractFragments, MinimalQueryYieldsCalculationAndRelation) {
  const auto fs = extract_fragments(main_unit("SELECT a FROM t"));
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[0].kind, KnowledgeKind::Relation);
  EXPECT_EQ(fs[0].sql_text, "FROM t");
  EXPECT_EQ(fs[1].kind, KnowledgeKind::Calculation);
  EXPECT_EQ(fs[1].sql_text, "a");
}

// Expected conjuncts were enumerated by hand from the boolean structure.
TEST(ExtractFragments, ConditionsSplitAtTopLevelAndOnly) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"a > 1 AND (b < 2 OR c = 3)", {"a > 1", "(b < 2 OR c = 3)"}},
      {"a = 1 OR b = 2 AND c = 3", {"a = 1 OR b = 2 AND c = 3"}},
      {"(a = 1 AND b = 2) AND c = 3", {"(a = 1 AND b = 2)", "c = 3"}},
      {"NOT (a = 1 AND b = 2) AND c BETWEEN 1 AND 5", {"NOT (a = 1 AND b = 2)", "c BETWEEN 1 AND 5"}},
      {"a IN (SELECT x FROM u WHERE y = 1 AND z = 2) AND b IS NULL AND c LIKE 'q%'",
       {"a IN (SELECT x FROM u WHERE y = 1 AND z = 2)", "b IS NULL", "c LIKE 'q%'"}},
  };
  for (const auto& [pred, want] : cases) {
    const auto fs = extract_fragments(main_unit("SELECT a FROM t WHERE " + pred));
    EXPECT_EQ(texts_of(fs, KnowledgeKind::Condition), want) << pred;
  }
}

TEST(ExtractFragments, KindClauseConsistency) {
  for (const auto& q : sqlknow::testing::corpus()) {
    for (const auto& u : decompose(parse_script(q.sql))) {
      for (const auto& f : extract_fragments(u)) {
        switch (f.kind) {
          case KnowledgeKind::Calculation:
            EXPECT_TRUE(f.clause == Clause::Select || f.clause == Clause::OrderByLimitDistinct) << f.id;
            break;
          case KnowledgeKind::Condition:
            EXPECT_TRUE(f.clause == Clause::Where || f.clause == Clause::Having) << f.id;
            break;
          case KnowledgeKind::Relation: EXPECT_EQ(f.clause, Clause::FromJoin) << f.id; break;
          case KnowledgeKind::Dimension: EXPECT_EQ(f.clause, Clause::GroupBy) << f.id; break;
          case KnowledgeKind::Output: EXPECT_EQ(f.clause, Clause::OrderByLimitDistinct) << f.id; break;
        }
      }
    }
  }
}

TEST(ExtractFragments, OutputPresentForAnyOfOrderLimitDistinct) {
  EXPECT_EQ(texts_of(extract_fragments(main_unit("SELECT DISTINCT a FROM t")), KnowledgeKind::Output),
            std::vector<std::string>{"DISTINCT"});
  EXPECT_EQ(texts_of(extract_fragments(main_unit("SELECT a FROM t LIMIT 3")), KnowledgeKind::Output),
            std::vector<std::string>{"LIMIT 3"});
  EXPECT_EQ(texts_of(extract_fragments(main_unit("SELECT a FROM t ORDER BY a")), KnowledgeKind::Output),
            std::vector<std::string>{"ORDER BY a"});
  EXPECT_TRUE(texts_of(extract_fragments(main_unit("SELECT COUNT(DISTINCT a) FROM t")), KnowledgeKind::Output).empty());
}

TEST(ExtractFragments, WindowAndScalarSubqueryAreSingleCalculations) {
  const auto fs = extract_fragments(
      main_unit("SELECT RANK() OVER (PARTITION BY a ORDER BY b, c) AS r, (SELECT MAX(x) FROM u WHERE u.k = t.k) FROM t"));
  EXPECT_EQ(texts_of(fs, KnowledgeKind::Calculation),
            (std::vector<std::string>{"RANK() OVER (PARTITION BY a ORDER BY b, c) AS r",
                                      "(SELECT MAX(x) FROM u WHERE u.k = t.k)"}));
}

struct SpliceFixture : ::testing::Test {
  Decomposition d = decompose_script(parse_script(pipeline()));
  lineage::Database db{sqlknow::testing::toxicology_db()};
  Catalog catalog = db.catalog();

  SpliceContext context_for(const std::string& id) {
    SpliceContext ctx;
    ctx.lookup = units_lookup(d.units, &catalog);
    for (const auto& u : d.units) ctx.cte_names.push_back(u.id);
    (void)id;
    return ctx;
  }
  SubqueryUnit& unit(const std::string& id) {
    for (auto& u : d.units) {
      if (u.id == id) return u;
    }
    throw std::runtime_error(id);
  }
};

TEST_F(SpliceFixture, OutputToRankingPredicateFlipsFinalResult) {
  const std::string ranking =
      "HAVING COUNT(DISTINCT T2.molecule_id) = (SELECT MIN(n) FROM (SELECT COUNT(DISTINCT T5.molecule_id) AS n "
      "FROM atom AS T4 INNER JOIN molecule AS T5 ON T4.molecule_id = T5.molecule_id "
      "WHERE T5.label IN ('+', '-') GROUP BY T4.element))";
  auto before = db.query(d.script.source_text);
  ASSERT_EQ(before.rows.size(), 1u);
  EXPECT_EQ(before.rows[0], (std::vector<lineage::Value>{std::int64_t{1}, std::int64_t{0}}));

  auto res = splice_fragment(unit("least_com_el"), "least_com_el/output", ranking, context_for("least_com_el"));
  EXPECT_EQ(res.unit.sql_text.find("LIMIT"), std::string::npos);
  EXPECT_EQ(res.unit.sql_text.find("ORDER BY"), std::string::npos);
  EXPECT_NE(res.unit.sql_text.find("HAVING"), std::string::npos);
  unit("least_com_el") = res.unit;
  auto after = db.query(compose_script(d.units).source_text);
  ASSERT_EQ(after.rows.size(), 1u);
  EXPECT_EQ(after.rows[0], (std::vector<lineage::Value>{std::int64_t{4}, std::int64_t{3}}));
}

TEST_F(SpliceFixture, DeleteDimensionFromUnitWithoutAggregates) {
  auto u = main_unit("SELECT label FROM molecule GROUP BY label");
  auto res = splice_fragment(u, "main/group", std::nullopt, context_for("main"));
  EXPECT_EQ(res.unit.sql_text, "SELECT label\nFROM molecule");
}

TEST_F(SpliceFixture, UndefinedColumnIsRejected) {
  EXPECT_THROW(splice_fragment(unit("least_com_el"), "least_com_el/select.1", "T1.no_such_column",
                               context_for("least_com_el")),
               SpliceError);
}

TEST_F(SpliceFixture, DroppingDownstreamColumnIsRejected) {
  auto ctx = context_for("main");
  ctx.downstream_columns = {"atom_id"};
  const auto u = main_unit("SELECT element, atom_id FROM atom");
  EXPECT_THROW(splice_fragment(u, "main/select.2", std::nullopt, ctx), SpliceError);
  EXPECT_NO_THROW(splice_fragment(u, "main/select.1", std::nullopt, ctx));
}

TEST_F(SpliceFixture, AliasChangeIsReportedAsRename) {
  auto res = splice_fragment(unit("least_com_el"), "least_com_el/select.1", "T1.element AS el",
                             context_for("least_com_el"));
  ASSERT_EQ(res.renames.count("element"), 1u);
  EXPECT_EQ(res.renames.at("element"), "el");
  EXPECT_EQ(res.unit.output_columns.at(0).name, "el");
}

TEST_F(SpliceFixture, InvalidReplacementTextIsRejected) {
  EXPECT_THROW(splice_fragment(unit("non_carci_mol"), "non_carci_mol/where.1", "label = = '-'",
                               context_for("non_carci_mol")),
               SpliceError);
  EXPECT_THROW(splice_fragment(unit("non_carci_mol"), "non_carci_mol/nope", "1", context_for("non_carci_mol")),
               NotFoundError);
}

TEST_F(SpliceFixture, DeletingLimitKeepsOrder) {
  auto u = main_unit("SELECT label FROM molecule ORDER BY label LIMIT 2");
  auto res = splice_fragment(u, "main/output", std::string("ORDER BY label"), context_for("main"));
  EXPECT_EQ(res.unit.sql_text, "SELECT label\nFROM molecule\nORDER BY label");
  auto none = splice_fragment(u, "main/output", std::nullopt, context_for("main"));
  EXPECT_EQ(none.unit.sql_text, "SELECT label\nFROM molecule");
}

TEST(BuildProbe, QueriesOnlyReachDependencies) {
  const auto units = decompose(parse_script(pipeline()));
  const auto graph = lineage::build_graph(units);
  for (const auto& u : graph.units()) {
    std::set<std::string> allowed;
    for (const auto* d : graph.closure(u.id)) allowed.insert(d->id);
    for (const auto& f : extract_fragments(u)) {
      const auto probe = lineage::build_probe(graph, u.id, f);
      const auto probe_units = decompose(parse_script(probe.sql_text));
      for (const auto& pu : probe_units) {
        if (pu.is_main() || pu.name.rfind("__sub_", 0) == 0) continue;
        EXPECT_TRUE(allowed.count(pu.id)) << f.id << " reaches " << pu.id;
      }
      EXPECT_EQ(probe.expects, expectation_for(f.kind));
    }
  }
}

TEST(BuildProbe, MissingDependencyIsUnresolved) {
  auto units = decompose(parse_script(pipeline()));
  units.erase(units.begin());
  EXPECT_THROW(lineage::build_graph(units), UnresolvedDependencyError);
}

}  // namespace
}  // namespace sqlknow::sql
