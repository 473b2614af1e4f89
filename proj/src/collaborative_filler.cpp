#include "upcs/collaborative_filler.hpp"

#include "upcs/errors.hpp"

namespace upcs {

using nlohmann::json;

SimilarityMatrix similarity_matrix(const PersonaSet& set, EmbeddingProvider& provider,
                                   const SimilarityWeights& weights) {
  if (set.personas.size() < 2) {
    throw ValidationError("similarity matrix needs at least 2 personas");
  }
  std::vector<std::string> texts;
  texts.reserve(set.personas.size());
  for (const auto& p : set.personas) texts.push_back(persona_text(p));
  const auto embeddings = provider.embed_batch(texts);

  const std::size_t n = set.personas.size();
  SimilarityMatrix matrix;
  matrix.scores.assign(n, std::vector<double>(n, 0.0));
  matrix.eligible.assign(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    if (embeddings[i].dimension() < 2 || embeddings[i].is_zero()) {
      matrix.eligible[i] = false;
      matrix.excluded_ids.push_back(set.personas[i].id);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!matrix.eligible[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!matrix.eligible[j]) continue;
      const double s = combined_similarity(embeddings[i], embeddings[j], weights);
      matrix.scores[i][j] = s;
      matrix.scores[j][i] = s;
    }
  }
  return matrix;
}

std::optional<std::size_t> select_donor(const SimilarityMatrix& matrix, std::size_t m) {
  if (m >= matrix.size()) throw Error("persona index out of range");
  if (!matrix.eligible[m]) return std::nullopt;
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < matrix.size(); ++j) {
    if (j == m || !matrix.eligible[j]) continue;
    if (!best || matrix.scores[m][j] > matrix.scores[m][*best]) best = j;
  }
  return best;
}

std::pair<PersonaSet, std::vector<FillRecord>> fill(const PersonaSet& set,
                                                    EmbeddingProvider& provider,
                                                    const FillConfig& config) {
  if (set.stage != SetStage::incomplete_debiased) {
    throw ValidationError("fill requires a set in stage incomplete_debiased, got " +
                          std::string(stage_name(set.stage)));
  }
  if (config.theta < 0.0 || config.theta > 1.0) {
    throw ValidationError("fill gate theta must lie in [0, 1]");
  }

  const SimilarityMatrix matrix = similarity_matrix(set, provider, config.weights);

  std::vector<std::vector<std::string>> docs;
  docs.reserve(set.personas.size());
  for (const auto& p : set.personas) docs.push_back(tokenize(persona_text(p)));
  const Bm25Index index(std::move(docs));

  PersonaSet output;
  output.stage = SetStage::debiased;
  output.personas = set.personas;  // donor values are read from `set`, the snapshot
  std::vector<FillRecord> records;

  for (std::size_t m = 0; m < set.personas.size(); ++m) {
    const Persona& target = set.personas[m];
    const auto missing = missing_dimensions(target);
    if (missing.empty()) continue;

    FillRecord record;
    record.target_id = target.id;

    const auto donor_index = select_donor(matrix, m);
    if (!donor_index) {
      record.gate = GateOutcome::no_donor;
      records.push_back(std::move(record));
      continue;
    }
    const Persona& donor = set.personas[*donor_index];
    record.donor_id = donor.id;
    record.s_score = matrix.scores[m][*donor_index];
    record.bm25_score =
        bm25_normalized(index, index.document(m), *donor_index, config.bm25);

    if (record.bm25_score >= config.theta) {
      record.gate = GateOutcome::pass;
      for (DimensionKey key : kAllDimensions) {
        if (!missing.count(key)) continue;
        auto donor_it = donor.dimensions.find(key);
        if (donor_it == donor.dimensions.end()) continue;  // missing in both
        output.personas[m].dimensions.emplace(key, donor_it->second);
        record.filled.push_back(key);
      }
      if (!record.filled.empty()) {
        output.personas[m].provenance.push_back("fill(donor=" + donor.id + ")");
      }
    } else {
      record.gate = GateOutcome::fail;
    }
    records.push_back(std::move(record));
  }
  return {std::move(output), std::move(records)};
}

json fill_records_to_json(const std::vector<FillRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json filled = json::array();
    for (DimensionKey key : r.filled) filled.push_back(dimension_name(key));
    const char* gate = r.gate == GateOutcome::pass   ? "pass"
                       : r.gate == GateOutcome::fail ? "fail"
                                                     : "no_donor";
    json entry{{"target_id", r.target_id}, {"gate", gate}, {"filled", filled}};
    if (r.gate != GateOutcome::no_donor) {
      entry["donor_id"] = r.donor_id;
      entry["s_score"] = r.s_score;
      entry["bm25_score"] = r.bm25_score;
    }
    out.push_back(std::move(entry));
  }
  return json{{"schema", "upcs-fill-report/1"}, {"records", out}};
}

}  // namespace upcs
