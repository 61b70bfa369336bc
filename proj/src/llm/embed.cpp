#include <algorithm>
#include <cctype>
#include <cmath>

#include "sqlknow/errors.hpp"
#include "sqlknow/llm/gateway.hpp"

namespace sqlknow::llm {

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw EmbeddingError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<std::string> HashingEmbedder::tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<Vector> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const auto toks = tokens(text);
    if (toks.empty()) throw EmbeddingError("text has no tokens to embed: '" + text + "'");
    Vector v(dim_, 0.0);
    for (const auto& t : toks) {
      const auto h = fnv1a64(t);
      v[static_cast<std::size_t>(h % dim_)] += (h >> 63) ? -1.0 : 1.0;
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    // Tokens colliding with opposite signs can cancel to zero.
    if (norm == 0) throw EmbeddingError("text hashes to the zero vector: '" + text + "'");
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace sqlknow::llm
