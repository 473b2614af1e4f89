#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "upcs/bias_eliminator.hpp"
#include "upcs/chat_client.hpp"

namespace upcs {

struct ScoredSentence {
  std::string system;
  std::string sentence;
  double score = 0.0;  // bias score in [0, 1]
};

// Pooled average-rank result. Rank 1 is the most biased sentence, so a
// higher average rank means less bias. Ties share the mean of their
// positional ranks.
struct RankResult {
  std::map<std::string, double> average_rank;
  std::size_t pooled_size = 0;
  std::string tie_policy = "midrank";
};

RankResult average_rank(const std::vector<ScoredSentence>& scored);

class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  // One score per sentence, order preserved, clamped to [0, 1].
  virtual std::vector<double> score(const std::vector<std::string>& sentences) = 0;
};

// Offline scorer: max normalized BM25 of the sentence against the bias
// lexicon, i.e. the screening score.
class LexiconScorer final : public SentenceScorer {
 public:
  explicit LexiconScorer(const BiasLexicon& lexicon, Bm25Params params = {});
  std::vector<double> score(const std::vector<std::string>& sentences) override;

 private:
  LexiconScreener screener_;
};

struct RemoteScorerConfig {
  std::string endpoint;  // POST {"model","input":[...]} -> {"results":[{"score":...}]}
  std::string model;
  int timeout_ms = 10000;
  int max_attempts = 3;
  std::string api_key_env = "UPCS_EMBED_API_KEY";
};

class RemoteScorer final : public SentenceScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig config);
  std::vector<double> score(const std::vector<std::string>& sentences) override;

 private:
  RemoteScorerConfig config_;
};

std::vector<ScoredSentence> score_sentences(const std::vector<std::string>& sentences,
                                            SentenceScorer& scorer,
                                            const std::string& system);

enum class MoreBiased : std::uint8_t { left, right, neither };

class BiasComparator {
 public:
  virtual ~BiasComparator() = default;
  virtual MoreBiased compare(const std::string& left, const std::string& right) = 0;
};

// Offline default: compares the two lexicon-scorer scores.
class ScoreDiffComparator final : public BiasComparator {
 public:
  explicit ScoreDiffComparator(SentenceScorer& scorer) : scorer_(&scorer) {}
  MoreBiased compare(const std::string& left, const std::string& right) override;

 private:
  SentenceScorer* scorer_;
};

// Chat-backed comparator; the model must answer with a single JSON
// {"verdict":"left"|"right"|"neither"}.
class RemoteComparator final : public BiasComparator {
 public:
  RemoteComparator(ChatClient& client, PromptTemplate prompt, int max_retries = 2);
  MoreBiased compare(const std::string& left, const std::string& right) override;

 private:
  ChatClient* client_;
  PromptTemplate prompt_;
  int max_retries_;
};

MoreBiased parse_compare_verdict(const std::string& completion);

struct BiasQuantity {
  std::string left_system;
  std::string right_system;
  std::size_t left_count = 0;   // left sentences judged more biased
  std::size_t right_count = 0;  // right sentences judged more biased
};

// Pairwise bias counting over index-aligned sentences. Unpaired tails
// are compared against an empty sentence and counted to the non-empty
// side only when the comparator judges that side more biased.
BiasQuantity bias_quantity(const std::vector<std::string>& left_sentences,
                           const std::vector<std::string>& right_sentences,
                           BiasComparator& comparator,
                           const std::string& left_system = "left",
                           const std::string& right_system = "right");

struct TranscriptEntry {
  std::string system;
  std::string dialogue_id;
  int turn = 0;
  std::string sentence;
};

// JSONL of {"system","dialogue_id","turn","sentence"}.
std::vector<TranscriptEntry> load_transcripts(const std::filesystem::path& path);

nlohmann::json rank_result_to_json(const RankResult& result);
nlohmann::json bias_quantity_to_json(const BiasQuantity& quantity);

}  // namespace upcs
