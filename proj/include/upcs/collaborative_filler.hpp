#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "upcs/embedding.hpp"
#include "upcs/persona.hpp"
#include "upcs/similarity.hpp"

namespace upcs {

struct FillConfig {
  SimilarityWeights weights;
  double theta = 0.5;  // BM25 gate, inclusive
  Bm25Params bm25;
};

// Pairwise combined-similarity scores over a persona set. Personas with
// a degenerate (zero-norm) embedding are marked ineligible and recorded;
// entries touching them are undefined and never consulted.
struct SimilarityMatrix {
  std::vector<std::vector<double>> scores;  // scores[i][j], diagonal unused
  std::vector<bool> eligible;
  std::vector<std::string> excluded_ids;

  std::size_t size() const { return scores.size(); }
};

SimilarityMatrix similarity_matrix(const PersonaSet& set, EmbeddingProvider& provider,
                                   const SimilarityWeights& weights = {});

// Arg-max of scores[m][j] over eligible donors j != m, ties broken by
// the lowest index. nullopt when target m is ineligible or no eligible
// donor exists.
std::optional<std::size_t> select_donor(const SimilarityMatrix& matrix, std::size_t m);

enum class GateOutcome : std::uint8_t { pass, fail, no_donor };

struct FillRecord {
  std::string target_id;
  std::string donor_id;  // empty when gate == no_donor
  std::vector<DimensionKey> filled;
  double s_score = 0.0;
  double bm25_score = 0.0;
  GateOutcome gate = GateOutcome::no_donor;
};

nlohmann::json fill_records_to_json(const std::vector<FillRecord>& records);

// Phase 4. For every persona with missing dimensions, pick the most
// similar persona as donor and, if the normalized BM25 score between
// the two persona texts (target as query, donor as document, indexed
// over all persona texts) clears theta, copy the donor's values for the
// missing dimensions. Donor values always come from the input snapshot,
// so persona processing order cannot affect the result. Output stage is
// debiased.
std::pair<PersonaSet, std::vector<FillRecord>> fill(const PersonaSet& set,
                                                    EmbeddingProvider& provider,
                                                    const FillConfig& config = {});

}  // namespace upcs
