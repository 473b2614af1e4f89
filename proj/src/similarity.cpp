#include "upcs/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "upcs/errors.hpp"

namespace upcs {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const bool word_char =
        (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9') || c >= 0x80;
    if (word_char) {
      current += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Bm25Index::Bm25Index(std::vector<std::vector<std::string>> documents)
    : documents_(std::move(documents)) {
  term_freqs_.reserve(documents_.size());
  std::size_t total_len = 0;
  for (const auto& doc : documents_) {
    total_len += doc.size();
    std::unordered_map<std::string, std::size_t> freqs;
    for (const auto& term : doc) ++freqs[term];
    for (const auto& [term, count] : freqs) ++doc_freq_[term];
    term_freqs_.push_back(std::move(freqs));
  }
  avg_doc_length_ = documents_.empty()
                        ? 0.0
                        : static_cast<double>(total_len) /
                              static_cast<double>(documents_.size());
}

std::size_t Bm25Index::doc_frequency(const std::string& term) const {
  auto it = doc_freq_.find(term);
  return it == doc_freq_.end() ? 0 : it->second;
}

const std::vector<std::string>& Bm25Index::document(std::size_t index) const {
  if (index >= documents_.size()) {
    throw Error("document index " + std::to_string(index) + " out of range");
  }
  return documents_[index];
}

std::size_t Bm25Index::term_frequency(std::size_t index, const std::string& term) const {
  const auto& freqs = term_freqs_.at(index);
  auto it = freqs.find(term);
  return it == freqs.end() ? 0 : it->second;
}

double bm25_score(const Bm25Index& index, const std::vector<std::string>& query,
                  std::size_t doc_index, const Bm25Params& params) {
  if (doc_index >= index.size()) {
    throw Error("document index " + std::to_string(doc_index) + " out of range");
  }
  const double n_docs = static_cast<double>(index.size());
  const double doc_len = static_cast<double>(index.document(doc_index).size());
  const double avgdl = index.average_doc_length();
  if (doc_len == 0.0 || avgdl == 0.0) return 0.0;

  double score = 0.0;
  for (const auto& term : query) {
    const auto df = static_cast<double>(index.doc_frequency(term));
    if (df == 0.0) continue;
    const auto tf = static_cast<double>(index.term_frequency(doc_index, term));
    if (tf == 0.0) continue;
    const double idf =
        std::max(0.0, std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5)));
    const double denom =
        tf + params.k1 * (1.0 - params.b + params.b * doc_len / avgdl);
    score += idf * tf * (params.k1 + 1.0) / denom;
  }
  return score;
}

double bm25_normalized(const Bm25Index& index, const std::vector<std::string>& query,
                       std::size_t doc_index, const Bm25Params& params) {
  const double self = bm25_score(index, index.document(doc_index), doc_index, params);
  if (self == 0.0) return 0.0;
  const double raw = bm25_score(index, query, doc_index, params);
  return std::clamp(raw / self, 0.0, 1.0);
}

namespace {

void require_same_length(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension()) {
    throw Error("vector length mismatch: " + std::to_string(u.dimension()) +
                " vs " + std::to_string(v.dimension()));
  }
}

}  // namespace

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  require_same_length(u, v);
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += u.values[i] * v.values[i];
    nu += u.values[i] * u.values[i];
    nv += v.values[i] * v.values[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw DegenerateInputError("cosine of a zero-norm vector is undefined");
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double pearson(const EmbeddingVector& u, const EmbeddingVector& v) {
  require_same_length(u, v);
  const std::size_t n = u.values.size();
  if (n < 2) throw Error("pearson requires length >= 2");
  double mean_u = 0.0, mean_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_u += u.values[i];
    mean_v += v.values[i];
  }
  mean_u /= static_cast<double>(n);
  mean_v /= static_cast<double>(n);
  double cov = 0.0, var_u = 0.0, var_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double du = u.values[i] - mean_u;
    const double dv = v.values[i] - mean_v;
    cov += du * dv;
    var_u += du * du;
    var_v += dv * dv;
  }
  if (var_u == 0.0 || var_v == 0.0) return 0.0;  // no linear-relation evidence
  return cov / (std::sqrt(var_u) * std::sqrt(var_v));
}

double combined_similarity(const EmbeddingVector& u, const EmbeddingVector& v,
                           const SimilarityWeights& weights) {
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.alpha + weights.beta <= 0.0) {
    throw ValidationError("similarity weights must be >= 0 with positive sum");
  }
  return weights.alpha * cosine(u, v) + weights.beta * pearson(u, v);
}

}  // namespace upcs
