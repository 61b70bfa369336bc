#include "sqlknow/knowledge/store.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>

#include "sqlknow/errors.hpp"

namespace sqlknow::knowledge {

using nlohmann::json;

const char* to_string(Level l) { return l == Level::Script ? "Script" : "Fragment"; }

Level parse_level(std::string_view s) {
  if (s == "Script") return Level::Script;
  if (s == "Fragment") return Level::Fragment;
  throw ValidationError("unknown level: " + std::string(s));
}

FragmentRef fragment_ref(const sql::Fragment& f) { return {f.id, f.unit_id, f.clause, f.sql_text, f.span}; }

std::string record_id(const std::string& script_id, const std::string& fragment_id) {
  return fragment_id.empty() ? script_id : script_id + "#" + fragment_id;
}

void to_json(json& j, const KnowledgeRecord& r) {
  j = json{{"id", r.id},
           {"level", to_string(r.level)},
           {"source_script_id", r.source_script_id},
           {"fragment", nullptr},
           {"kind", nullptr},
           {"description", r.description},
           {"sql_text", r.sql_text},
           {"template_version", r.template_version},
           {"embedding", r.embedding}};
  if (r.fragment) {
    j["fragment"] = json{{"id", r.fragment->id},
                         {"subquery_id", r.fragment->subquery_id},
                         {"clause", sql::to_string(r.fragment->clause)},
                         {"sql_text", r.fragment->sql_text},
                         {"span", {{"begin", r.fragment->span.begin}, {"end", r.fragment->span.end}}}};
  }
  if (r.kind) j["kind"] = sql::to_string(*r.kind);
}

void from_json(const json& j, KnowledgeRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.level = parse_level(j.at("level").get<std::string>());
  r.source_script_id = j.at("source_script_id").get<std::string>();
  r.fragment.reset();
  if (const auto& f = j.at("fragment"); !f.is_null()) {
    FragmentRef ref;
    ref.id = f.at("id").get<std::string>();
    ref.subquery_id = f.at("subquery_id").get<std::string>();
    ref.clause = sql::parse_clause(f.at("clause").get<std::string>());
    ref.sql_text = f.at("sql_text").get<std::string>();
    ref.span = {f.at("span").at("begin").get<std::uint32_t>(), f.at("span").at("end").get<std::uint32_t>()};
    r.fragment = ref;
  }
  r.kind.reset();
  if (const auto& k = j.at("kind"); !k.is_null()) r.kind = sql::parse_kind(k.get<std::string>());
  r.description = j.at("description").get<std::string>();
  r.sql_text = j.value("sql_text", "");
  r.template_version = j.value("template_version", "");
  r.embedding = j.at("embedding").get<llm::Vector>();
}

namespace {

void check_record(const KnowledgeRecord& r) {
  if (r.id.empty()) throw ValidationError("knowledge record without id");
  if (r.description.empty()) throw ValidationError("knowledge record " + r.id + " has an empty description");
  if (r.level == Level::Fragment && (!r.fragment || !r.kind)) {
    throw ValidationError("fragment-level record " + r.id + " needs a fragment and a kind");
  }
  if (r.level == Level::Script && (r.fragment || r.kind)) {
    throw ValidationError("script-level record " + r.id + " cannot carry a fragment");
  }
}

}  // namespace

KnowledgeStore::KnowledgeStore(const KnowledgeStore& other) : records_(other.records()) {}

KnowledgeStore& KnowledgeStore::operator=(const KnowledgeStore& other) {
  if (this != &other) {
    auto copy = other.records();
    std::unique_lock lock(mu_);
    records_ = std::move(copy);
  }
  return *this;
}

void KnowledgeStore::upsert_locked(std::vector<KnowledgeRecord> incoming) {
  const std::size_t dim = !records_.empty() ? records_.front().embedding.size()
                          : !incoming.empty() ? incoming.front().embedding.size()
                                              : 0;
  for (const auto& r : incoming) {
    check_record(r);
    if (r.embedding.size() != dim) {
      throw EmbeddingError("record " + r.id + " has dimension " + std::to_string(r.embedding.size()) +
                           "; the store holds dimension " + std::to_string(dim));
    }
  }
  std::map<std::string, KnowledgeRecord> merged;
  for (auto& r : records_) merged.emplace(r.id, std::move(r));
  for (auto& r : incoming) merged.insert_or_assign(r.id, std::move(r));
  std::vector<KnowledgeRecord> next;
  next.reserve(merged.size());
  for (auto& [id, r] : merged) next.push_back(std::move(r));
  records_ = std::move(next);
}

void KnowledgeStore::index(std::vector<KnowledgeRecord> records, llm::Gateway& llm) {
  for (const auto& r : records) check_record(r);
  std::map<std::string, llm::Vector> cache;
  {
    std::shared_lock lock(mu_);
    for (const auto& r : records_) cache.emplace(r.description, r.embedding);
  }
  const auto dim = llm.embedder().dimension();
  std::vector<std::string> pending;
  for (const auto& r : records) {
    auto it = cache.find(r.description);
    if (it == cache.end() || it->second.size() != dim) {
      if (std::find(pending.begin(), pending.end(), r.description) == pending.end()) pending.push_back(r.description);
    }
  }
  if (!pending.empty()) {
    auto vectors = llm.embed(pending);
    for (std::size_t i = 0; i < pending.size(); ++i) cache.insert_or_assign(pending[i], std::move(vectors[i]));
  }
  for (auto& r : records) r.embedding = cache.at(r.description);
  std::unique_lock lock(mu_);
  upsert_locked(std::move(records));
}

void KnowledgeStore::insert(std::vector<KnowledgeRecord> records) {
  std::unique_lock lock(mu_);
  upsert_locked(std::move(records));
}

std::vector<KnowledgeRecord> KnowledgeStore::records() const {
  std::shared_lock lock(mu_);
  return records_;
}

std::vector<KnowledgeRecord> KnowledgeStore::records(Level level) const {
  std::shared_lock lock(mu_);
  std::vector<KnowledgeRecord> out;
  for (const auto& r : records_) {
    if (r.level == level) out.push_back(r);
  }
  return out;
}

std::optional<KnowledgeRecord> KnowledgeStore::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = std::lower_bound(records_.begin(), records_.end(), id, [](const auto& r, const auto& k) { return r.id < k; });
  if (it == records_.end() || it->id != id) return std::nullopt;
  return *it;
}

std::size_t KnowledgeStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::size_t KnowledgeStore::size(Level level) const {
  std::shared_lock lock(mu_);
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const auto& r) { return r.level == level; }));
}

std::size_t KnowledgeStore::dimension() const {
  std::shared_lock lock(mu_);
  return records_.empty() ? 0 : records_.front().embedding.size();
}

std::vector<Scored> KnowledgeStore::similar(const std::string& query_text, Level level, std::size_t k,
                                            llm::Gateway& llm) const {
  if (size() == 0) throw EmptyStoreError();
  return similar(llm.embed_one(query_text), level, k);
}

std::vector<Scored> KnowledgeStore::similar(const llm::Vector& query, Level level, std::size_t k) const {
  if (k < 1) throw ValidationError("k must be at least 1");
  std::shared_lock lock(mu_);
  if (records_.empty()) throw EmptyStoreError();
  std::vector<std::pair<double, const KnowledgeRecord*>> scored;
  for (const auto& r : records_) {
    if (r.level == level) scored.emplace_back(llm::cosine(query, r.embedding), &r);
  }
  // records_ is sorted by id, so a stable sort on score alone breaks ties by id.
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Scored> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back({*scored[i].second, scored[i].first});
  return out;
}

void KnowledgeStore::save(const std::filesystem::path& path) const {
  const auto snapshot = records();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp);
    for (const auto& r : snapshot) out << json(r).dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

KnowledgeStore KnowledgeStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read knowledge store: " + path.string());
  std::vector<KnowledgeRecord> records;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line).get<KnowledgeRecord>());
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  KnowledgeStore store;
  store.insert(std::move(records));
  return store;
}

}  // namespace sqlknow::knowledge
