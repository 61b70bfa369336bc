#include <algorithm>
#include <exception>
#include <map>
#include <set>

#include "sqlknow/authoring/session.hpp"
#include "sqlknow/errors.hpp"
#include "sqlknow/sql/parser.hpp"
#include "sqlknow/sql/splice.hpp"

namespace sqlknow::authoring {

namespace {

using Units = std::vector<sql::SubqueryUnit>;
using Renames = std::map<std::string, std::string>;

constexpr const char* kWholeQuery = "(whole query)";

std::size_t unit_pos(const Units& units, const std::string& id) {
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].id == id) return i;
  }
  throw NotFoundError("unknown subquery: " + id);
}

std::vector<std::string> unit_ids(const Units& units) {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.id);
  return out;
}

std::string column_list(const std::vector<sql::OutputColumn>& cols, bool with_types) {
  std::string out;
  for (const auto& c : cols) {
    if (!out.empty()) out += ", ";
    out += c.name;
    if (with_types && !c.type.empty()) out += " " + c.type;
  }
  return out;
}

// Signatures (name and output columns) of what `unit` reads.
std::string dependency_signatures(const sql::SubqueryUnit& unit, const Units& units, const sql::Catalog& catalog) {
  std::string out;
  for (const auto& t : unit.referenced_tables) {
    const auto* cols = catalog.find(t);
    out += t + "(" + (cols ? column_list(*cols, true) : std::string("?")) + ")\n";
  }
  for (const auto& c : unit.referenced_ctes) {
    const auto& dep = units[unit_pos(units, c)];
    out += dep.name + "(" + column_list(dep.output_columns, false) + ")\n";
  }
  return out.empty() ? "(none)\n" : out;
}

// Output column keys of `producer` read by any unit that references it.
std::set<std::string> downstream_reads(const Units& units, const std::string& producer, const sql::RelationLookup& lookup) {
  std::set<std::string> out;
  const auto& p = units[unit_pos(units, producer)];
  for (const auto& u : units) {
    if (std::find(u.referenced_ctes.begin(), u.referenced_ctes.end(), producer) == u.referenced_ctes.end()) continue;
    auto cols = sql::referenced_columns(u.ast, p.id, p.output_columns, lookup);
    out.insert(cols.begin(), cols.end());
  }
  return out;
}

sql::SpliceContext splice_context(const Units& units, const std::string& unit_id, const sql::Catalog& catalog) {
  sql::SpliceContext ctx;
  ctx.lookup = sql::units_lookup(units, &catalog);
  ctx.cte_names = unit_ids(units);
  ctx.downstream_columns = downstream_reads(units, unit_id, ctx.lookup);
  return ctx;
}

// Replaces a whole unit body with the checks splice_fragment applies.
sql::SpliceResult replace_body(const sql::SubqueryUnit& unit, const std::string& text, const sql::SpliceContext& ctx) {
  sql::SpliceResult r;
  r.unit = unit;
  try {
    r.unit.ast = sql::parse_select(text);
    sql::refresh_unit(r.unit, ctx.cte_names, ctx.lookup);
  } catch (const SyntaxError& e) {
    throw SpliceError(std::string("rewritten subquery does not parse: ") + e.what());
  }
  r.unit.script_span = {};
  if (std::find(r.unit.referenced_ctes.begin(), r.unit.referenced_ctes.end(), unit.id) != r.unit.referenced_ctes.end() &&
      !unit.self_referencing) {
    throw SpliceError(unit.name + " cannot read itself");
  }
  auto missing = sql::unresolved_columns(r.unit.ast, ctx.lookup);
  if (!missing.empty()) throw SpliceError("undefined column: " + missing.front());
  const auto& before = unit.output_columns;
  const auto& after = r.unit.output_columns;
  if (!unit.cte_columns.empty() && !after.empty() && after.size() != unit.cte_columns.size()) {
    throw SpliceError(unit.name + " declares " + std::to_string(unit.cte_columns.size()) + " columns but yields " +
                      std::to_string(after.size()));
  }
  if (before.size() == after.size()) {
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (sql::ident_key(before[i].name) != sql::ident_key(after[i].name)) r.renames[sql::ident_key(before[i].name)] = after[i].name;
    }
  }
  for (const auto& key : ctx.downstream_columns) {
    const bool kept = std::any_of(after.begin(), after.end(), [&](const auto& c) { return sql::ident_key(c.name) == key; });
    if (!kept && !r.renames.count(key)) throw SpliceError("edit drops column '" + key + "' of " + unit.name + " that is read downstream");
  }
  return r;
}

// Installs the edited unit and carries renames through every downstream unit
// in topological order, cascading when a consumer's own outputs are renamed.
Units propagate(const GeneratedQuery& cur, const sql::SpliceResult& edited, const sql::Catalog& catalog) {
  Units units = cur.units();
  const auto names = unit_ids(units);
  const auto old_lookup = sql::units_lookup(cur.units(), &catalog);
  std::map<std::string, Renames> pending;
  if (!edited.renames.empty()) pending[edited.unit.id] = edited.renames;
  units[unit_pos(units, edited.unit.id)] = edited.unit;

  for (const auto& id : lineage::affected_downstream(cur.graph, edited.unit.id)) {
    if (!cur.graph.has_unit(id)) continue;
    auto& d = units[unit_pos(units, id)];
    const auto before = d.output_columns;
    for (const auto& p : d.referenced_ctes) {
      auto it = pending.find(p);
      if (it == pending.end()) continue;
      sql::rename_column_references(d.ast, p, cur.graph.unit(p).output_columns, it->second, old_lookup);
    }
    sql::refresh_unit(d, names, sql::units_lookup(units, &catalog));
    if (before.size() == d.output_columns.size()) {
      Renames r;
      for (std::size_t i = 0; i < before.size(); ++i) {
        if (sql::ident_key(before[i].name) != sql::ident_key(d.output_columns[i].name)) {
          r[sql::ident_key(before[i].name)] = d.output_columns[i].name;
        }
      }
      if (!r.empty()) pending[id] = std::move(r);
    }
  }
  return units;
}

// Re-analyzes the composed script and executes every unit in topological order.
Analysis finalize(const std::string& script_text, const Workspace& ws, const std::set<std::string>& watched,
                  std::vector<std::string>& warnings) {
  auto a = analyze(script_text, &ws.catalog());
  lineage::Database db(ws.db_path());
  const auto err = db.check(a.script.source_text);
  if (!err.empty()) throw ExecutionError("", err);
  for (const auto& id : a.graph.topo()) {
    const auto rows = lineage::execute_subquery(db, a.graph, id, 1);
    if (rows.total_row_count == 0 && (watched.empty() || watched.count(id))) {
      warnings.push_back("subquery " + a.graph.unit(id).name + " returns no rows after the edit");
    }
  }
  return a;
}

std::string units_script(const Units& units) { return sql::compose_script(units).source_text; }

std::set<std::string> watched_units(const GeneratedQuery& cur, const std::string& edited) {
  std::set<std::string> out{edited};
  for (const auto& id : lineage::affected_downstream(cur.graph, edited)) out.insert(id);
  return out;
}

using Key = std::tuple<std::string, sql::KnowledgeKind, std::string>;

Key item_key(const std::string& unit, sql::KnowledgeKind kind, const std::string& text) {
  return {unit, kind, normalize_space(text)};
}

// Matches new fragments against the previous items as a multiset on
// (subquery, kind, text); matches keep their description.
GeneratedQuery diff(const GeneratedQuery& cur, Analysis a, const Workspace& ws, std::vector<std::string> warnings) {
  std::map<Key, std::vector<const KnowledgeItem*>> old;
  for (const auto& i : cur.items) old[item_key(i.subquery_id, i.kind, i.sql_text)].push_back(&i);
  for (auto& [k, v] : old) std::reverse(v.begin(), v.end());

  Analysis fresh;
  fresh.graph = a.graph;
  GeneratedQuery q;
  std::vector<std::size_t> pending;
  std::vector<KnowledgeItem> items(a.fragments.size());
  for (std::size_t n = 0; n < a.fragments.size(); ++n) {
    const auto& f = a.fragments[n];
    auto it = old.find(item_key(f.unit_id, f.kind, f.sql_text));
    if (it != old.end() && !it->second.empty()) {
      auto& item = items[n];
      item = *it->second.back();
      it->second.pop_back();
      item.id = item.fragment_id = f.id;
      item.subquery_name = a.graph.unit(f.unit_id).name;
      item.clause = f.clause;
      item.sql_text = f.sql_text;
      item.span = f.span;
      item.status = ItemStatus::Unchanged;
    } else {
      fresh.fragments.push_back(f);
      pending.push_back(n);
    }
  }
  const auto dict = ws.dictionary();
  const auto described = describe_items(fresh, {}, GenerateContext{dict, &ws.catalog(), nullptr, ws.llm()});
  for (std::size_t k = 0; k < pending.size(); ++k) {
    items[pending[k]] = described[k];
    items[pending[k]].status = ItemStatus::Added;
  }
  for (const auto& i : cur.items) {
    auto it = old.find(item_key(i.subquery_id, i.kind, i.sql_text));
    if (it == old.end()) continue;
    auto& left = it->second;
    auto pos = std::find(left.begin(), left.end(), &i);
    if (pos == left.end()) continue;
    auto gone = i;
    gone.status = ItemStatus::Removed;
    q.removed.push_back(std::move(gone));
  }
  q.items = std::move(items);
  q.sql_text = a.script.source_text;
  q.script = std::move(a.script);
  q.graph = std::move(a.graph);
  q.fragments = std::move(a.fragments);
  q.warnings = std::move(warnings);
  return q;
}

// Runs `attempt(feedback)` up to 1 + kRepairAttempts times, feeding the last
// error back. LLM failures and lookups of unknown targets are not retried.
template <class F>
GeneratedQuery with_repairs(F&& attempt) {
  std::string feedback = "(none)";
  std::exception_ptr last;
  for (int n = 0; n <= kRepairAttempts; ++n) {
    try {
      return attempt(feedback);
    } catch (const LlmError&) {
      throw;
    } catch (const NotFoundError&) {
      throw;
    } catch (const RefusalError&) {
      throw;
    } catch (const Error& e) {
      last = std::current_exception();
      feedback = std::string("The previous reply failed: ") + e.what();
    }
  }
  std::rethrow_exception(last);
}

std::string reply(const Workspace& ws, const std::string& template_id, const llm::Variables& vars) {
  return llm::strip_code_fence(ws.llm().chat(template_id, vars));
}

const sql::Fragment& target_fragment(const GeneratedQuery& cur, const std::string& id) {
  const auto* f = cur.find_fragment(id);
  if (!f) throw NotFoundError("unknown item: " + id);
  return *f;
}

std::string target_unit(const GeneratedQuery& cur, const RefinementEdit& e) {
  if (e.target == EditTarget::Item) return target_fragment(cur, e.target_id).unit_id;
  if (!cur.graph.has_unit(e.target_id)) throw NotFoundError("unknown subquery: " + e.target_id);
  return e.target_id;
}

GeneratedQuery rewrite_whole(const GeneratedQuery& cur, const Workspace& ws, const std::string& template_id,
                             llm::Variables vars) {
  return with_repairs([&](const std::string& feedback) {
    vars["feedback"] = feedback;
    std::vector<std::string> warnings;
    auto a = finalize(reply(ws, template_id, vars), ws, {}, warnings);
    return diff(cur, std::move(a), ws, std::move(warnings));
  });
}

GeneratedQuery modify(const GeneratedQuery& cur, const RefinementEdit& e, const Workspace& ws) {
  const auto& catalog = ws.catalog();
  const auto& units = cur.units();
  if (e.target == EditTarget::WholeQuery) {
    return rewrite_whole(cur, ws, "refine_subquery",
                         {{"unit_name", kWholeQuery}, {"unit_sql", cur.sql_text},
                          {"dependencies", knowledge::schema_context(catalog)}, {"instruction", *e.instruction}});
  }
  const auto uid = target_unit(cur, e);
  const auto& unit = cur.graph.unit(uid);
  const auto ctx = splice_context(units, uid, catalog);
  const auto deps = dependency_signatures(unit, units, catalog);
  return with_repairs([&](const std::string& feedback) {
    sql::SpliceResult edited;
    if (e.target == EditTarget::Item) {
      const auto& f = target_fragment(cur, e.target_id);
      const auto text = reply(ws, "refine_fragment",
                              {{"unit_name", unit.name}, {"unit_sql", unit.sql_text}, {"dependencies", deps},
                               {"kind", sql::to_string(f.kind)}, {"fragment_sql", f.sql_text},
                               {"instruction", *e.instruction}, {"feedback", feedback}});
      edited = sql::splice_fragment(unit, f.id, text, ctx);
    } else {
      const auto text = reply(ws, "refine_subquery",
                              {{"unit_name", unit.name}, {"unit_sql", unit.sql_text}, {"dependencies", deps},
                               {"instruction", *e.instruction}, {"feedback", feedback}});
      edited = replace_body(unit, text, ctx);
    }
    std::vector<std::string> warnings;
    auto a = finalize(units_script(propagate(cur, edited, catalog)), ws, watched_units(cur, uid), warnings);
    return diff(cur, std::move(a), ws, std::move(warnings));
  });
}

// Asks the LLM to rewrite each direct consumer that reads a dropped column.
// Any failure is a refusal; the session stays unchanged.
GeneratedQuery repair_consumers(const GeneratedQuery& cur, const sql::SpliceResult& edited,
                                const std::vector<std::string>& dropped, const Workspace& ws, const std::string& reason) {
  const auto& catalog = ws.catalog();
  const auto& producer = cur.graph.unit(edited.unit.id);
  const auto old_lookup = sql::units_lookup(cur.units(), &catalog);
  Units units = cur.units();
  units[unit_pos(units, producer.id)] = edited.unit;
  const auto names = unit_ids(units);
  std::string listed;
  for (const auto& c : dropped) listed += (listed.empty() ? "" : ", ") + c;
  try {
    for (const auto& id : cur.graph.topo()) {
      const auto& consumer = cur.graph.unit(id);
      const auto& refs = consumer.referenced_ctes;
      if (std::find(refs.begin(), refs.end(), producer.id) == refs.end()) continue;
      const auto reads = sql::referenced_columns(consumer.ast, producer.id, producer.output_columns, old_lookup);
      if (std::none_of(dropped.begin(), dropped.end(), [&](const auto& c) { return reads.count(c) > 0; })) continue;
      const auto text = reply(ws, "refine_subquery",
                              {{"unit_name", consumer.name},
                               {"unit_sql", consumer.sql_text},
                               {"dependencies", dependency_signatures(consumer, units, catalog)},
                               {"instruction", "Column(s) " + listed + " of " + producer.name +
                                                   " are being removed. Rewrite this subquery so it no longer reads "
                                                   "them and keeps its output columns."},
                               {"feedback", "(none)"}});
      const auto ctx = splice_context(units, id, catalog);
      auto repaired = replace_body(consumer, text, ctx);
      if (!repaired.renames.empty()) throw SpliceError("repair of " + consumer.name + " renames its output columns");
      units[unit_pos(units, id)] = std::move(repaired.unit);
    }
    std::vector<std::string> warnings;
    auto a = finalize(units_script(units), ws, watched_units(cur, producer.id), warnings);
    return diff(cur, std::move(a), ws, std::move(warnings));
  } catch (const LlmError&) {
    throw;
  } catch (const Error& e) {
    throw RefusalError("delete refused: " + reason + "; automatic repair failed: " + e.what());
  }
}

GeneratedQuery remove(const GeneratedQuery& cur, const RefinementEdit& e, const Workspace& ws) {
  const auto& catalog = ws.catalog();
  const auto& f = target_fragment(cur, e.target_id);
  const auto& unit = cur.graph.unit(f.unit_id);
  const auto ctx = splice_context(cur.units(), unit.id, catalog);
  std::vector<std::string> warnings;
  try {
    const auto edited = sql::splice_fragment(unit, f.id, std::nullopt, ctx);
    auto a = finalize(units_script(propagate(cur, edited, catalog)), ws, watched_units(cur, unit.id), warnings);
    return diff(cur, std::move(a), ws, std::move(warnings));
  } catch (const SpliceError& first) {
    auto loose = ctx;
    loose.downstream_columns.clear();
    const auto edited = sql::splice_fragment(unit, f.id, std::nullopt, loose);
    std::vector<std::string> dropped;
    for (const auto& key : ctx.downstream_columns) {
      const auto& after = edited.unit.output_columns;
      const bool kept = std::any_of(after.begin(), after.end(), [&](const auto& c) { return sql::ident_key(c.name) == key; });
      if (!kept && !edited.renames.count(key)) dropped.push_back(key);
    }
    if (dropped.empty()) throw;
    return repair_consumers(cur, edited, dropped, ws, first.what());
  }
}

GeneratedQuery add(const GeneratedQuery& cur, const RefinementEdit& e, const Workspace& ws) {
  const auto& catalog = ws.catalog();
  std::string examples = "(none)\n";
  if (ws.store().size() > 0) examples = examples_text(retrieve(*e.instruction, ws.store(), ws.llm()).reranked);
  if (e.target == EditTarget::WholeQuery) {
    return rewrite_whole(cur, ws, "add_fragment",
                         {{"unit_name", kWholeQuery}, {"unit_sql", cur.sql_text},
                          {"dependencies", knowledge::schema_context(catalog)}, {"examples", examples},
                          {"instruction", *e.instruction}});
  }
  const auto& units = cur.units();
  const auto uid = target_unit(cur, e);
  const auto& unit = cur.graph.unit(uid);
  const auto ctx = splice_context(units, uid, catalog);
  const auto deps = dependency_signatures(unit, units, catalog);
  return with_repairs([&](const std::string& feedback) {
    const auto text = reply(ws, "add_fragment",
                            {{"unit_name", unit.name}, {"unit_sql", unit.sql_text}, {"dependencies", deps},
                             {"examples", examples}, {"instruction", *e.instruction}, {"feedback", feedback}});
    const auto edited = replace_body(unit, text, ctx);
    std::vector<std::string> warnings;
    auto a = finalize(units_script(propagate(cur, edited, catalog)), ws, watched_units(cur, uid), warnings);
    return diff(cur, std::move(a), ws, std::move(warnings));
  });
}

}  // namespace

GeneratedQuery apply_refinement(const GeneratedQuery& current, const RefinementEdit& edit, const Workspace& ws) {
  edit.validate();
  switch (edit.mode) {
    case EditMode::Modify: return modify(current, edit, ws);
    case EditMode::Delete: return remove(current, edit, ws);
    case EditMode::Add: return add(current, edit, ws);
  }
  throw ValidationError("unknown edit mode");
}

}  // namespace sqlknow::authoring
