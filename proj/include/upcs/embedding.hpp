#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

namespace upcs {

// Fixed-length real vector representing a persona's text.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool is_zero() const;
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;
};

// Throws ValidationError on non-finite components.
void validate_embedding(const EmbeddingVector& v);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual EmbeddingVector embed(const std::string& text) = 0;

  // Element-wise equal to embed(), order preserved. Backends may batch
  // the transport; a partial remote failure fails the whole batch.
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
};

// Deterministic offline embedder: token-level feature hashing with a
// signed hash into `dimension` buckets, then L2 normalization. Stable
// across processes and platforms (FNV-1a on the token bytes, fixed
// seed constant). Empty or token-free text embeds to the zero vector,
// which downstream cosine rejects as degenerate input.
class HashEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::uint64_t kHashSeed = 0x7570637376310000ULL;  // "upcsv1"

  explicit HashEmbedder(std::size_t dimension = 256);

  EmbeddingVector embed(const std::string& text) override;

  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

struct RemoteEmbedderConfig {
  std::string endpoint;  // e.g. http://host:port/v1/embeddings
  std::string model;
  std::size_t dimension = 0;  // 0 = accept whatever the service returns
  int timeout_ms = 10000;
  int max_attempts = 3;
  int max_in_flight = 4;
  std::size_t cache_capacity = 1024;
  std::string api_key_env = "UPCS_EMBED_API_KEY";
};

// Client for a JSON embedding service:
//   POST {"model": ..., "input": [texts]}
//   -> {"data": [{"embedding": [...]}, ...]}
// Retries transport errors and 5xx with exponential backoff, bounds
// in-flight requests, and keeps a size-bounded response cache.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);

  EmbeddingVector embed(const std::string& text) override;
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  std::vector<EmbeddingVector> request(const std::vector<std::string>& texts);

  RemoteEmbedderConfig config_;
  std::counting_semaphore<> in_flight_;
  std::mutex cache_mutex_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
};

// Parse and validate one service response body against the request size.
std::vector<EmbeddingVector> parse_embedding_response(const std::string& body,
                                                      std::size_t expected_count,
                                                      std::size_t expected_dimension);

}  // namespace upcs
