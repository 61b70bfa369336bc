#include "sqlknow/authoring/session.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "sqlknow/errors.hpp"

namespace sqlknow::authoring {

using nlohmann::json;

const char* to_string(EditMode m) {
  switch (m) {
    case EditMode::Modify: return "Modify";
    case EditMode::Add: return "Add";
    case EditMode::Delete: return "Delete";
  }
  return "Modify";
}

const char* to_string(EditTarget t) {
  switch (t) {
    case EditTarget::Subquery: return "Subquery";
    case EditTarget::Item: return "Item";
    case EditTarget::WholeQuery: return "WholeQuery";
  }
  return "Item";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

EditMode parse_edit_mode(std::string_view s) {
  const auto k = lower(s);
  if (k == "modify") return EditMode::Modify;
  if (k == "add") return EditMode::Add;
  if (k == "delete") return EditMode::Delete;
  throw ValidationError("unknown edit mode: " + std::string(s));
}

EditTarget parse_edit_target(std::string_view s) {
  const auto k = lower(s);
  if (k == "subquery") return EditTarget::Subquery;
  if (k == "item") return EditTarget::Item;
  if (k == "wholequery" || k == "whole_query") return EditTarget::WholeQuery;
  throw ValidationError("unknown edit target: " + std::string(s));
}

void RefinementEdit::validate() const {
  if (mode == EditMode::Delete && target != EditTarget::Item) throw ValidationError("Delete requires an item target");
  if (mode != EditMode::Delete && (!instruction || normalize_space(*instruction).empty())) {
    throw ValidationError(std::string(to_string(mode)) + " requires a non-empty instruction");
  }
  if (target != EditTarget::WholeQuery && target_id.empty()) throw ValidationError("target id is required");
}

void to_json(json& j, const RefinementEdit& e) {
  j = json{{"mode", to_string(e.mode)},
           {"target", {{"type", to_string(e.target)}, {"id", e.target_id}}},
           {"instruction", e.instruction ? json(*e.instruction) : json(nullptr)}};
}

void from_json(const json& j, RefinementEdit& e) {
  if (!j.is_object()) throw ValidationError("edit must be an object");
  if (!j.contains("mode") || !j["mode"].is_string()) throw ValidationError("edit.mode is required");
  e.mode = parse_edit_mode(j["mode"].get<std::string>());
  const auto& t = j.contains("target") ? j["target"] : json();
  if (t.is_string()) {
    e.target = parse_edit_target(t.get<std::string>());
    e.target_id.clear();
  } else if (t.is_object() && t.contains("type") && t["type"].is_string()) {
    e.target = parse_edit_target(t["type"].get<std::string>());
    e.target_id = t.value("id", "");
  } else {
    throw ValidationError("edit.target must be a type name or {type, id}");
  }
  e.instruction.reset();
  if (j.contains("instruction") && j["instruction"].is_string()) e.instruction = j["instruction"].get<std::string>();
}

Workspace::Workspace(std::string database_id, std::string db_path, knowledge::DataDictionary dictionary,
                     std::shared_ptr<const knowledge::KnowledgeStore> store, std::shared_ptr<llm::Gateway> llm)
    : database_id_(std::move(database_id)),
      db_path_(std::move(db_path)),
      store_(store ? std::move(store) : std::make_shared<const knowledge::KnowledgeStore>()),
      llm_(std::move(llm)),
      dictionary_(std::move(dictionary)) {
  if (!llm_) throw ValidationError("workspace needs an LLM gateway");
  catalog_ = lineage::Database(db_path_).catalog();
}

knowledge::DataDictionary Workspace::dictionary() const {
  std::lock_guard lock(mu_);
  return dictionary_;
}

void Workspace::set_dictionary(knowledge::DataDictionary d) {
  std::lock_guard lock(mu_);
  dictionary_ = std::move(d);
}

Session::Session(std::string session_id, std::shared_ptr<Workspace> workspace)
    : id_(std::move(session_id)), ws_(std::move(workspace)) {
  if (id_.empty()) throw ValidationError("session id is empty");
  if (!ws_) throw ValidationError("session needs a workspace");
}

std::shared_ptr<const GeneratedQuery> Session::commit(GeneratedQuery q, HistoryEntry entry) {
  std::lock_guard lock(state_mu_);
  q.generation = (current_ ? current_->generation : 0) + 1;
  auto shared = std::make_shared<const GeneratedQuery>(std::move(q));
  entry.query = shared;
  history_.push_back(std::move(entry));
  current_ = shared;
  return shared;
}

std::shared_ptr<const GeneratedQuery> Session::generate(const std::string& instruction) {
  if (normalize_space(instruction).empty()) throw ValidationError("instruction is empty");
  std::lock_guard edit(edit_mu_);
  auto bundle = std::make_shared<RetrievalBundle>();
  std::vector<std::string> warnings;
  if (ws_->store().size() > 0) {
    *bundle = retrieve(instruction, ws_->store(), ws_->llm());
  } else {
    bundle->keywords = {instruction};
    warnings.push_back("knowledge store is empty; generated without retrieval");
  }
  const auto dict = ws_->dictionary();
  lineage::Database db(ws_->db_path());
  auto q = authoring::generate(instruction, *bundle, GenerateContext{dict, &ws_->catalog(), &db, ws_->llm()});
  q.warnings.insert(q.warnings.begin(), warnings.begin(), warnings.end());
  {
    std::lock_guard lock(state_mu_);
    bundle_ = bundle;
  }
  return commit(std::move(q), HistoryEntry{instruction, std::nullopt, nullptr});
}

std::shared_ptr<const GeneratedQuery> Session::refine(const RefinementEdit& edit) {
  edit.validate();
  std::lock_guard lock(edit_mu_);
  auto cur = current();
  if (!cur) throw NotFoundError("session " + id_ + " has no generated query yet");
  auto next = apply_refinement(*cur, edit, *ws_);
  return commit(std::move(next), HistoryEntry{std::nullopt, edit, nullptr});
}

std::shared_ptr<const GeneratedQuery> Session::current() const {
  std::lock_guard lock(state_mu_);
  return current_;
}

long long Session::generation() const {
  std::lock_guard lock(state_mu_);
  return current_ ? current_->generation : 0;
}

std::shared_ptr<const RetrievalBundle> Session::last_bundle() const {
  std::lock_guard lock(state_mu_);
  return bundle_;
}

std::vector<HistoryEntry> Session::history() const {
  std::lock_guard lock(state_mu_);
  return history_;
}

std::shared_ptr<const GeneratedQuery> Session::checked(std::optional<long long> generation) const {
  auto cur = current();
  if (!cur) throw NotFoundError("session " + id_ + " has no generated query yet");
  if (generation && *generation != cur->generation) throw StaleGenerationError(*generation, cur->generation);
  return cur;
}

lineage::FragmentMetadata Session::resolve_item_metadata(const std::string& item_id,
                                                         std::optional<long long> generation) const {
  auto cur = checked(generation);
  const auto* f = cur->find_fragment(item_id);
  if (!f) throw NotFoundError("unknown item: " + item_id);
  const auto key = std::make_pair(cur->generation, f->id);
  {
    std::lock_guard lock(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  lineage::Database db(ws_->db_path());
  auto m = lineage::execute_probe(db, lineage::build_probe(cur->graph, f->unit_id, *f));
  std::lock_guard lock(cache_mu_);
  return cache_.emplace(key, std::move(m)).first->second;
}

lineage::ResultTable Session::subquery_result(const std::string& subquery_id, std::optional<long long> generation) const {
  auto cur = checked(generation);
  if (!cur->graph.has_unit(subquery_id)) throw NotFoundError("unknown subquery: " + subquery_id);
  lineage::Database db(ws_->db_path());
  return lineage::execute_subquery(db, cur->graph, subquery_id);
}

std::vector<std::future<lineage::FragmentMetadata>> Session::schedule_probes(lineage::WorkerPool& pool) const {
  auto cur = checked(std::nullopt);
  std::vector<std::future<lineage::FragmentMetadata>> out;
  for (const auto& item : cur->items) {
    const auto gen = cur->generation;
    out.push_back(pool.submit([this, id = item.id, gen] { return resolve_item_metadata(id, gen); }));
  }
  return out;
}

json Session::snapshot() const {
  std::lock_guard lock(state_mu_);
  json instructions = json::array();
  json generations = json::array();
  for (const auto& h : history_) {
    if (h.instruction) instructions.push_back(*h.instruction);
    if (h.edit && h.edit->instruction) instructions.push_back(*h.edit->instruction);
    json g = summary_json(*h.query);
    g.erase("units");
    for (auto& i : g["items"]) i.erase("metadata");
    g["instruction"] = h.instruction ? json(*h.instruction) : json(nullptr);
    g["edit"] = h.edit ? json(*h.edit) : json(nullptr);
    g["diffs"] = g["diff"];
    g.erase("diff");
    generations.push_back(std::move(g));
  }
  return json{{"session_id", id_},
              {"database_id", ws_->database_id()},
              {"instructions", instructions},
              {"generations", generations}};
}

std::unique_ptr<Session> Session::restore(const json& snap, std::shared_ptr<Workspace> workspace) {
  auto s = std::make_unique<Session>(snap.at("session_id").get<std::string>(), std::move(workspace));
  if (snap.value("database_id", "") != s->database_id()) {
    throw ValidationError("snapshot belongs to database " + snap.value("database_id", std::string("?")));
  }
  for (const auto& g : snap.at("generations")) {
    auto a = analyze(g.at("sql_text").get<std::string>(), &s->ws_->catalog());
    GeneratedQuery q;
    q.generation = g.at("generation").get<long long>();
    q.items = g.at("items").get<std::vector<KnowledgeItem>>();
    q.removed = g.at("removed").get<std::vector<KnowledgeItem>>();
    q.warnings = g.at("warnings").get<std::vector<std::string>>();
    if (q.items.size() != a.fragments.size()) throw ValidationError("snapshot items do not match the SQL fragments");
    for (std::size_t i = 0; i < q.items.size(); ++i) {
      if (q.items[i].fragment_id != a.fragments[i].id) throw ValidationError("snapshot item " + q.items[i].id + " does not match");
    }
    q.sql_text = a.script.source_text;
    q.script = std::move(a.script);
    q.graph = std::move(a.graph);
    q.fragments = std::move(a.fragments);
    HistoryEntry h;
    if (g.contains("instruction") && g["instruction"].is_string()) h.instruction = g["instruction"].get<std::string>();
    if (g.contains("edit") && g["edit"].is_object()) h.edit = g["edit"].get<RefinementEdit>();
    h.query = std::make_shared<const GeneratedQuery>(std::move(q));
    s->current_ = h.query;
    s->history_.push_back(std::move(h));
  }
  return s;
}

void Session::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << snapshot().dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sqlknow::authoring
