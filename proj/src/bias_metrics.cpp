#include "upcs/bias_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "http_util.hpp"
#include "upcs/errors.hpp"

namespace upcs {

using nlohmann::json;

RankResult average_rank(const std::vector<ScoredSentence>& scored) {
  if (scored.empty()) throw ValidationError("average_rank needs a non-empty pool");
  for (const auto& s : scored) {
    if (!std::isfinite(s.score) || s.score < 0.0 || s.score > 1.0) {
      throw ValidationError("bias scores must be finite in [0, 1]");
    }
  }

  const std::size_t n = scored.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Descending score: rank 1 is the most biased sentence.
  std::stable_sort(order.begin(), order.end(), [&scored](std::size_t a, std::size_t b) {
    return scored[a].score > scored[b].score;
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scored[order[j + 1]].score == scored[order[i]].score) ++j;
    // positions i..j (0-based) share the mean of ranks i+1..j+1
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }

  RankResult result;
  result.pooled_size = n;
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (std::size_t k = 0; k < n; ++k) {
    auto& [sum, count] = sums[scored[k].system];
    sum += ranks[k];
    ++count;
  }
  for (const auto& [system, sum_count] : sums) {
    result.average_rank[system] = sum_count.first / static_cast<double>(sum_count.second);
  }
  return result;
}

LexiconScorer::LexiconScorer(const BiasLexicon& lexicon, Bm25Params params)
    : screener_(lexicon, params) {}

std::vector<double> LexiconScorer::score(const std::vector<std::string>& sentences) {
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& sentence : sentences) {
    out.push_back(std::clamp(screener_.screen(sentence).best_score, 0.0, 1.0));
  }
  return out;
}

RemoteScorer::RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ValidationError("remote scorer needs an endpoint");
}

std::vector<double> RemoteScorer::score(const std::vector<std::string>& sentences) {
  if (sentences.empty()) return {};
  const json body{{"model", config_.model}, {"input", sentences}};
  const std::string response = internal::post_json_with_retries(
      config_.endpoint, body.dump(), config_.api_key_env, config_.timeout_ms,
      config_.max_attempts, "bias scoring");
  json j;
  try {
    j = json::parse(response);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("scorer response is not JSON: ") + e.what(),
                        /*retriable=*/true);
  }
  if (!j.contains("results") || !j["results"].is_array() ||
      j["results"].size() != sentences.size()) {
    throw ProviderError("scorer response must carry one result per sentence",
                        /*retriable=*/true);
  }
  std::vector<double> out;
  out.reserve(sentences.size());
  for (const auto& item : j["results"]) {
    double score;
    try {
      score = item.at("score").get<double>();
    } catch (const json::exception& e) {
      throw ProviderError(std::string("bad scorer entry: ") + e.what(),
                          /*retriable=*/true);
    }
    if (!std::isfinite(score)) {
      throw ValidationError("scorer returned a non-finite score");
    }
    out.push_back(std::clamp(score, 0.0, 1.0));
  }
  return out;
}

std::vector<ScoredSentence> score_sentences(const std::vector<std::string>& sentences,
                                            SentenceScorer& scorer,
                                            const std::string& system) {
  const auto scores = scorer.score(sentences);
  if (scores.size() != sentences.size()) {
    throw ProviderError("scorer returned a mismatched score count", /*retriable=*/false);
  }
  std::vector<ScoredSentence> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out.push_back({system, sentences[i], std::clamp(scores[i], 0.0, 1.0)});
  }
  return out;
}

MoreBiased ScoreDiffComparator::compare(const std::string& left, const std::string& right) {
  const auto scores = scorer_->score({left, right});
  if (scores[0] > scores[1]) return MoreBiased::left;
  if (scores[1] > scores[0]) return MoreBiased::right;
  return MoreBiased::neither;
}

RemoteComparator::RemoteComparator(ChatClient& client, PromptTemplate prompt,
                                   int max_retries)
    : client_(&client), prompt_(std::move(prompt)), max_retries_(max_retries) {
  if (max_retries_ < 0) throw ValidationError("max retries must be >= 0");
}

MoreBiased RemoteComparator::compare(const std::string& left, const std::string& right) {
  const std::string rendered = prompt_.render({{"left", left}, {"right", right}});
  std::string last_raw;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    const std::string completion = client_->complete({{"user", rendered}});
    try {
      return parse_compare_verdict(completion);
    } catch (const GenerationError&) {
      last_raw = completion;
    }
  }
  throw GenerationError("compare verdict unparseable after retries", last_raw);
}

MoreBiased parse_compare_verdict(const std::string& completion) {
  const json j = extract_fenced_json(completion);
  const std::string verdict = j.value("verdict", "");
  if (verdict == "left") return MoreBiased::left;
  if (verdict == "right") return MoreBiased::right;
  if (verdict == "neither") return MoreBiased::neither;
  throw GenerationError("verdict must be left, right or neither", completion);
}

BiasQuantity bias_quantity(const std::vector<std::string>& left_sentences,
                           const std::vector<std::string>& right_sentences,
                           BiasComparator& comparator, const std::string& left_system,
                           const std::string& right_system) {
  BiasQuantity quantity;
  quantity.left_system = left_system;
  quantity.right_system = right_system;
  const std::size_t pairs = std::max(left_sentences.size(), right_sentences.size());
  for (std::size_t i = 0; i < pairs; ++i) {
    const bool left_present = i < left_sentences.size();
    const bool right_present = i < right_sentences.size();
    const std::string& left = left_present ? left_sentences[i] : std::string{};
    const std::string& right = right_present ? right_sentences[i] : std::string{};
    const MoreBiased verdict = comparator.compare(left, right);
    if (verdict == MoreBiased::left && left_present) ++quantity.left_count;
    if (verdict == MoreBiased::right && right_present) ++quantity.right_count;
  }
  return quantity;
}

std::vector<TranscriptEntry> load_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open transcripts: " + path.string());
  std::vector<TranscriptEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    try {
      entries.push_back({j.at("system").get<std::string>(),
                         j.value("dialogue_id", ""), j.value("turn", 0),
                         j.at("sentence").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad transcript entry: ") + e.what(), line_no);
    }
  }
  return entries;
}

json rank_result_to_json(const RankResult& result) {
  json ranks = json::object();
  for (const auto& [system, rank] : result.average_rank) ranks[system] = rank;
  return json{{"average_rank", ranks},
              {"pooled_size", result.pooled_size},
              {"tie_policy", result.tie_policy}};
}

json bias_quantity_to_json(const BiasQuantity& quantity) {
  return json{{"left_system", quantity.left_system},
              {"right_system", quantity.right_system},
              {"left_count", quantity.left_count},
              {"right_count", quantity.right_count}};
}

}  // namespace upcs
