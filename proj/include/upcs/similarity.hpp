#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "upcs/embedding.hpp"

namespace upcs {

// Lowercased tokens split on non-alphanumeric boundaries. ASCII letters
// are lowercased; non-ASCII UTF-8 bytes are kept as token characters
// unchanged, so multibyte words stay whole. Deterministic.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Read-only inverted statistics over a token-list corpus. Safe for
// concurrent queries after construction.
class Bm25Index {
 public:
  explicit Bm25Index(std::vector<std::vector<std::string>> documents);

  std::size_t size() const { return documents_.size(); }
  double average_doc_length() const { return avg_doc_length_; }
  std::size_t doc_frequency(const std::string& term) const;
  const std::vector<std::string>& document(std::size_t index) const;
  std::size_t term_frequency(std::size_t index, const std::string& term) const;

 private:
  std::vector<std::vector<std::string>> documents_;
  std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
  std::unordered_map<std::string, std::size_t> doc_freq_;
  double avg_doc_length_ = 0.0;
};

// BM25 with the non-negative smoothed IDF
//   idf(t) = max(0, ln(1 + (N - df + 0.5) / (df + 0.5)))
// summed over query token occurrences. Terms absent from the corpus or
// the document contribute 0, so the score is always >= 0.
double bm25_score(const Bm25Index& index, const std::vector<std::string>& query,
                  std::size_t doc_index, const Bm25Params& params = {});

// bm25_score divided by the document's score against its own token
// list, clamped to [0, 1]; 0 when the self-score is 0. Equals exactly
// 1.0 when the query is the document's own token list.
double bm25_normalized(const Bm25Index& index, const std::vector<std::string>& query,
                       std::size_t doc_index, const Bm25Params& params = {});

// Dot product over the product of Euclidean norms. Throws on length
// mismatch and on zero-norm input.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// Pearson correlation over vector elements, length >= 2. Returns 0 when
// either vector has zero variance.
double pearson(const EmbeddingVector& u, const EmbeddingVector& v);

struct SimilarityWeights {
  double alpha = 0.5;
  double beta = 0.5;
};

// S = alpha * cosine + beta * pearson.
double combined_similarity(const EmbeddingVector& u, const EmbeddingVector& v,
                           const SimilarityWeights& weights = {});

}  // namespace upcs
