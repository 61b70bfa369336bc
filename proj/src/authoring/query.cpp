#include "sqlknow/authoring/query.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "sqlknow/errors.hpp"
#include "sqlknow/extraction/offline.hpp"
#include "sqlknow/sql/serialize.hpp"

namespace sqlknow::authoring {

using nlohmann::json;

const char* to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::Unchanged: return "Unchanged";
    case ItemStatus::Added: return "Added";
    case ItemStatus::Removed: return "Removed";
  }
  return "Unchanged";
}

namespace {

ItemStatus parse_status(const std::string& s) {
  if (s == "Unchanged") return ItemStatus::Unchanged;
  if (s == "Added") return ItemStatus::Added;
  if (s == "Removed") return ItemStatus::Removed;
  throw ValidationError("unknown item status: " + s);
}

}  // namespace

void to_json(json& j, const KnowledgeItem& i) {
  j = json{{"id", i.id},
           {"subquery_id", i.subquery_id},
           {"subquery_name", i.subquery_name},
           {"kind", sql::to_string(i.kind)},
           {"clause", sql::to_string(i.clause)},
           {"title", i.title},
           {"description", i.description},
           {"fragment_id", i.fragment_id},
           {"sql_text", i.sql_text},
           {"span", i.span},
           {"status", to_string(i.status)},
           {"reused_from", i.reused_from}};
}

void from_json(const json& j, KnowledgeItem& i) {
  i.id = j.at("id").get<std::string>();
  i.subquery_id = j.at("subquery_id").get<std::string>();
  i.subquery_name = j.value("subquery_name", i.subquery_id);
  i.kind = sql::parse_kind(j.at("kind").get<std::string>());
  i.clause = sql::parse_clause(j.at("clause").get<std::string>());
  i.title = j.at("title").get<std::string>();
  i.description = j.at("description").get<std::string>();
  i.fragment_id = j.at("fragment_id").get<std::string>();
  i.sql_text = j.at("sql_text").get<std::string>();
  i.span.begin = j.at("span").at("begin").get<std::uint32_t>();
  i.span.end = j.at("span").at("end").get<std::uint32_t>();
  i.status = parse_status(j.at("status").get<std::string>());
  i.reused_from = j.value("reused_from", "");
}

Analysis analyze(const std::string& sql_text, const sql::Catalog* catalog) {
  Analysis a;
  auto d = sql::decompose_script(sql::parse_script(sql_text), catalog);
  a.script = std::move(d.script);
  a.graph = lineage::build_graph(std::move(d.units));
  for (const auto& id : a.graph.topo()) {
    for (auto& f : sql::extract_fragments(a.graph.unit(id))) a.fragments.push_back(std::move(f));
  }
  return a;
}

const KnowledgeItem* GeneratedQuery::find_item(const std::string& id) const {
  for (const auto& i : items) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

const sql::Fragment* GeneratedQuery::find_fragment(const std::string& id) const {
  return sql::find_fragment(fragments, id);
}

json graph_json(const lineage::DependencyGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    json node{{"id", n.id}, {"name", n.name}, {"is_table", n.is_table}};
    if (!n.is_table) {
      const auto& u = g.unit(n.id);
      node["output_columns"] = u.output_columns;
      node["item_count"] = sql::extract_fragments(u).size();
    }
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back({{"from", g.nodes()[static_cast<std::size_t>(e.from)].id}, {"to", g.nodes()[static_cast<std::size_t>(e.to)].id}});
  }
  return {{"nodes", nodes}, {"edges", edges}, {"topo_order", g.topo()}};
}

json summary_json(const GeneratedQuery& q) {
  json units = json::array();
  for (const auto& id : q.graph.topo()) units.push_back(q.graph.unit(id));
  json items = json::array();
  for (const auto& i : q.items) {
    json ij = i;
    ij["metadata"] = "pending";
    items.push_back(std::move(ij));
  }
  json added = json::array();
  for (const auto& i : q.items) {
    if (i.status == ItemStatus::Added) added.push_back(i.id);
  }
  json removed = json::array();
  json removed_ids = json::array();
  for (const auto& i : q.removed) {
    removed.push_back(i);
    removed_ids.push_back(i.id);
  }
  return {{"generation", q.generation},
          {"sql_text", q.sql_text},
          {"units", units},
          {"items", items},
          {"removed", removed},
          {"diff", {{"added", added}, {"removed", removed_ids}}},
          {"warnings", q.warnings}};
}

std::string normalize_space(const std::string& text) {
  std::string out;
  bool gap = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      gap = !out.empty();
      continue;
    }
    if (gap) out += ' ';
    gap = false;
    out += c;
  }
  return out;
}

std::string make_title(const std::string& description, sql::KnowledgeKind kind) {
  std::istringstream in(description);
  std::string word;
  std::string out;
  for (int n = 0; n < 5 && in >> word; ++n) out += (out.empty() ? "" : " ") + word;
  while (!out.empty() && std::ispunct(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out.empty() ? sql::to_string(kind) : out;
}

namespace {

std::string catalog_schema(const GenerateContext& ctx) {
  return ctx.catalog ? knowledge::schema_context(*ctx.catalog) : "(unknown)\n";
}

void validate(const Analysis& a, const GenerateContext& ctx) {
  if (!ctx.db) return;
  const auto err = ctx.db->check(a.script.source_text);
  if (!err.empty()) throw ExecutionError("", err);
}

}  // namespace

Analysis generate_sql(const std::string& instruction, const RetrievalBundle& bundle, const GenerateContext& ctx,
                      std::string* raw_reply) {
  if (normalize_space(instruction).empty()) throw ValidationError("instruction is empty");
  const auto schema = catalog_schema(ctx);
  std::string raw = ctx.llm.chat("generate_sql", {{"schema", schema},
                                                  {"dictionary", knowledge::dictionary_context(ctx.dictionary)},
                                                  {"examples", examples_text(bundle.reranked)},
                                                  {"instruction", instruction}});
  for (int attempt = 0;; ++attempt) {
    const auto candidate = llm::strip_code_fence(raw);
    try {
      auto a = analyze(candidate, ctx.catalog);
      validate(a, ctx);
      if (raw_reply) *raw_reply = raw;
      return a;
    } catch (const LlmError&) {
      throw;
    } catch (const Error& e) {
      if (attempt == kRepairAttempts) throw GenerationParseError(e.what(), raw);
      raw = ctx.llm.chat("repair_sql", {{"instruction", instruction}, {"schema", schema}, {"sql", candidate}, {"error", e.what()}});
    }
  }
}

std::vector<KnowledgeItem> describe_items(const Analysis& a, const std::vector<knowledge::KnowledgeRecord>& knowledge,
                                          const GenerateContext& ctx) {
  std::map<std::pair<sql::KnowledgeKind, std::string>, const knowledge::KnowledgeRecord*> known;
  for (const auto& r : knowledge) {
    if (r.level != knowledge::Level::Fragment || !r.kind || !r.fragment) continue;
    known.emplace(std::make_pair(*r.kind, normalize_space(r.fragment->sql_text)), &r);
  }
  std::vector<std::string> tables;
  for (const auto& u : a.graph.units()) {
    for (const auto& t : u.referenced_tables) {
      if (std::find(tables.begin(), tables.end(), t) == tables.end()) tables.push_back(t);
    }
  }
  std::vector<KnowledgeItem> items;
  for (const auto& f : a.fragments) {
    const auto& unit = a.graph.unit(f.unit_id);
    KnowledgeItem it;
    it.id = f.id;
    it.fragment_id = f.id;
    it.subquery_id = f.unit_id;
    it.subquery_name = unit.name;
    it.kind = f.kind;
    it.clause = f.clause;
    it.sql_text = f.sql_text;
    it.span = f.span;
    auto hit = known.find({f.kind, normalize_space(f.sql_text)});
    if (hit != known.end()) {
      it.description = hit->second->description;
      it.reused_from = hit->second->id;
    } else {
      it.description = extraction::describe_fragment(f, unit, ctx.dictionary, ctx.llm, tables);
    }
    it.title = make_title(it.description, f.kind);
    items.push_back(std::move(it));
  }
  return items;
}

GeneratedQuery generate(const std::string& instruction, const RetrievalBundle& bundle, const GenerateContext& ctx) {
  auto a = generate_sql(instruction, bundle, ctx);
  GeneratedQuery q;
  q.items = describe_items(a, bundle.reranked, ctx);
  for (auto& i : q.items) i.status = ItemStatus::Added;
  q.sql_text = a.script.source_text;
  q.script = std::move(a.script);
  q.graph = std::move(a.graph);
  q.fragments = std::move(a.fragments);
  return q;
}

KnowledgeViewModel build_knowledge_view(const GeneratedQuery& q) {
  KnowledgeViewModel v;
  v.generation = q.generation;
  std::map<std::string, std::size_t> at;
  for (const auto& id : q.graph.topo()) {
    at[id] = v.groups.size();
    v.groups.push_back({id, q.graph.unit(id).name, {}});
  }
  for (const auto& i : q.items) v.groups[at.at(i.subquery_id)].items.push_back(i);
  for (const auto& i : q.removed) {
    auto it = at.find(i.subquery_id);
    if (it == at.end()) {
      it = at.emplace(i.subquery_id, v.groups.size()).first;
      v.groups.push_back({i.subquery_id, i.subquery_name, {}});
    }
    v.groups[it->second].items.push_back(i);
  }
  return v;
}

void to_json(json& j, const KnowledgeViewModel& v) {
  json groups = json::array();
  for (const auto& g : v.groups) groups.push_back({{"subquery_id", g.subquery_id}, {"subquery_name", g.subquery_name}, {"items", g.items}});
  j = json{{"generation", v.generation}, {"groups", groups}};
}

}  // namespace sqlknow::authoring
