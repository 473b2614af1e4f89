#include "upcs/embedding.hpp"

#include <cmath>

#include "json.hpp"
#include "http_util.hpp"
#include "upcs/errors.hpp"
#include "upcs/rng.hpp"
#include "upcs/similarity.hpp"

namespace upcs {

using nlohmann::json;

bool EmbeddingVector::is_zero() const {
  for (double v : values) {
    if (v != 0.0) return false;
  }
  return true;
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

void validate_embedding(const EmbeddingVector& v) {
  for (double x : v.values) {
    if (!std::isfinite(x)) {
      throw ValidationError("embedding contains a non-finite value");
    }
  }
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(embed(text));
  return out;
}

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ < 2) throw ValidationError("embedding dimension must be >= 2");
}

EmbeddingVector HashEmbedder::embed(const std::string& text) {
  EmbeddingVector v;
  v.values.assign(dimension_, 0.0);
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = rng::mix(kHashSeed, rng::fnv1a64(token));
    const std::size_t bucket = static_cast<std::size_t>(h % dimension_);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v.values[bucket] += sign;
  }
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

std::vector<EmbeddingVector> parse_embedding_response(const std::string& body,
                                                      std::size_t expected_count,
                                                      std::size_t expected_dimension) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("embedding response is not JSON: ") + e.what(),
                        /*retriable=*/true);
  }
  if (!j.contains("data") || !j["data"].is_array()) {
    throw ProviderError("embedding response missing data array", /*retriable=*/true);
  }
  const auto& data = j["data"];
  if (data.size() != expected_count) {
    // Partial results are rejected wholesale.
    throw ProviderError("embedding response has " + std::to_string(data.size()) +
                            " vectors, expected " + std::to_string(expected_count),
                        /*retriable=*/true);
  }
  std::vector<EmbeddingVector> out;
  out.reserve(data.size());
  for (const auto& item : data) {
    EmbeddingVector v;
    try {
      v.values = item.at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ProviderError(std::string("bad embedding entry: ") + e.what(),
                          /*retriable=*/true);
    }
    if (expected_dimension != 0 && v.dimension() != expected_dimension) {
      throw ValidationError("embedding dimension " + std::to_string(v.dimension()) +
                            " does not match configured " +
                            std::to_string(expected_dimension));
    }
    validate_embedding(v);
    out.push_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)),
      in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.endpoint.empty()) throw ValidationError("remote embedder needs an endpoint");
}

std::vector<EmbeddingVector> RemoteEmbedder::request(const std::vector<std::string>& texts) {
  const json body{{"model", config_.model}, {"input", texts}};
  in_flight_.acquire();
  std::string response;
  try {
    response = internal::post_json_with_retries(
        config_.endpoint, body.dump(), config_.api_key_env, config_.timeout_ms,
        config_.max_attempts, "embedding");
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();
  return parse_embedding_response(response, texts.size(), config_.dimension);
}

EmbeddingVector RemoteEmbedder::embed(const std::string& text) {
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(text);
    if (it != cache_.end()) return it->second;
  }
  EmbeddingVector v = request({text}).front();
  {
    std::lock_guard lock(cache_mutex_);
    if (cache_.size() < config_.cache_capacity) cache_.emplace(text, v);
  }
  return v;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> pending;
  std::vector<std::size_t> pending_pos;
  {
    std::lock_guard lock(cache_mutex_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto it = cache_.find(texts[i]);
      if (it != cache_.end()) {
        out[i] = it->second;
      } else {
        pending.push_back(texts[i]);
        pending_pos.push_back(i);
      }
    }
  }
  if (!pending.empty()) {
    auto vectors = request(pending);
    std::lock_guard lock(cache_mutex_);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      out[pending_pos[i]] = vectors[i];
      if (cache_.size() < config_.cache_capacity) {
        cache_.emplace(pending[i], vectors[i]);
      }
    }
  }
  return out;
}

}  // namespace upcs
