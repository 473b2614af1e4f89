#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "upcs/chat_client.hpp"
#include "upcs/persona.hpp"
#include "upcs/similarity.hpp"

namespace upcs {

struct LexiconEntry {
  std::string expression;
  std::string category;
};

// Curated bias expressions used as the BM25 screening corpus.
struct BiasLexicon {
  std::vector<LexiconEntry> entries;
  std::string version = "unversioned";
};

// JSONL of {"expression","category"}, with an optional leading header
// {"schema":"upcs-lexicon/1","version":...}.
BiasLexicon load_lexicon(const std::filesystem::path& path);
void validate_lexicon(const BiasLexicon& lexicon);

enum class ReviewPass : std::uint8_t { initial, re_review };

struct ReviewContext {
  ReviewPass pass = ReviewPass::initial;
  std::string matched_expression;  // set on re-review
  double screen_score = 0.0;       // set on re-review
};

struct BiasReviewVerdict {
  std::string sentence;
  bool biased = false;
  std::string rationale;
  std::string reviewer_id;
};

class BiasReviewer {
 public:
  virtual ~BiasReviewer() = default;
  virtual BiasReviewVerdict review(const std::string& sentence,
                                   const ReviewContext& context) = 0;
};

// Deterministic offline reviewer: the verdict is a pure function of
// (sentence, pass, seed). bias_percent sets the fraction of sentences
// judged biased on each pass.
class HashReviewer final : public BiasReviewer {
 public:
  HashReviewer(std::uint64_t seed, int bias_percent = 10, int rereview_bias_percent = 50);
  BiasReviewVerdict review(const std::string& sentence,
                           const ReviewContext& context) override;

 private:
  std::uint64_t seed_;
  int bias_percent_;
  int rereview_bias_percent_;
};

// Remote reviewer over the chat-completion contract. The model must
// answer with a single JSON {"verdict":"biased"|"clean","rationale":...}.
class RemoteReviewer final : public BiasReviewer {
 public:
  RemoteReviewer(ChatClient& client, PromptTemplate prompt, int max_retries = 2);
  BiasReviewVerdict review(const std::string& sentence,
                           const ReviewContext& context) override;

 private:
  ChatClient* client_;
  PromptTemplate prompt_;
  int max_retries_;
};

BiasReviewVerdict parse_review_verdict(const std::string& completion,
                                       const std::string& sentence);

// Sentence boundaries: '.', '!' or '?' followed by whitespace or end of
// text. Results are trimmed; empties dropped.
std::vector<std::string> split_sentences(std::string_view text);

struct ScreenResult {
  bool flagged = false;
  double best_score = 0.0;
  std::optional<std::size_t> matched_entry;  // index into lexicon.entries
};

// Reusable BM25 screen over a lexicon: the sentence is the query, each
// lexicon expression a document; flagged iff the best normalized score
// strictly exceeds the threshold.
class LexiconScreener {
 public:
  LexiconScreener(const BiasLexicon& lexicon, Bm25Params params = {},
                  double threshold = 0.75);

  ScreenResult screen(const std::string& sentence) const;
  double threshold() const { return threshold_; }

 private:
  std::vector<LexiconEntry> entries_;
  Bm25Index index_;
  Bm25Params params_;
  double threshold_;
};

// One-shot convenience wrapper around LexiconScreener.
ScreenResult screen_sentence(const std::string& sentence, const BiasLexicon& lexicon,
                             const Bm25Params& params = {}, double threshold = 0.75);

struct DeletedSentence {
  std::string persona_id;
  DimensionKey dimension = DimensionKey::personality;
  std::string sentence;
  ReviewPass phase = ReviewPass::initial;  // which pass deleted it
  std::string rationale;
  double screen_score = 0.0;        // set when phase == re_review
  std::string matched_expression;   // set when phase == re_review
};

struct PersonaDebias {
  std::string persona_id;
  std::size_t input_sentences = 0;
  std::size_t output_sentences = 0;
  std::vector<DeletedSentence> deletions;
  std::vector<DimensionKey> emptied_dimensions;
};

struct DebiasReport {
  std::vector<PersonaDebias> personas;
  std::size_t reviewer_deleted = 0;
  std::size_t screen_flagged = 0;
  std::size_t rereview_deleted = 0;

  nlohmann::json to_json() const;
};

struct EliminateConfig {
  Bm25Params bm25;
  double screen_threshold = 0.75;
};

// Phase 3. For every persona and dimension text: (1) one reviewer pass
// deletes sentences judged biased, (2) survivors are screened against
// the lexicon, and flagged sentences get exactly one re-review and are
// deleted iff that verdict is biased. Dimensions left without sentences
// become absent. Deletion-only: no sentence is ever rewritten. The
// input set is untouched; the output carries stage incomplete_debiased.
std::pair<PersonaSet, DebiasReport> eliminate(const PersonaSet& set,
                                              BiasReviewer& reviewer,
                                              const BiasLexicon& lexicon,
                                              const EliminateConfig& config = {});

}  // namespace upcs
